#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sentitrade/error.hpp"
#include "sentitrade/ingest.hpp"
#include "sentitrade/models.hpp"
#include "sentitrade/sentiment.hpp"

namespace sentitrade::pipeline {

namespace fs = std::filesystem;

enum class Stage { Ingest, Label, Features, Select, Train, Backtest, Report };
inline constexpr std::array<Stage, 7> kStages{Stage::Ingest, Stage::Label,    Stage::Features, Stage::Select,
                                              Stage::Train,  Stage::Backtest, Stage::Report};
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view text);

struct ClassifierConfig {
    std::string type = "lexicon";  // lexicon | external
    fs::path lexicon;
    std::vector<std::string> command;
    std::size_t batch_size = 32;
};

struct RunConfig {
    nlohmann::json raw;  // as loaded, after overrides
    fs::path base_dir;   // relative paths resolve here

    Currency currency = Currency::BTC;
    fs::path prices;
    fs::path other_prices;
    std::optional<fs::path> blockchain;
    std::optional<fs::path> macro;
    std::optional<fs::path> posts;

    Date start;
    Date train_end;
    Date end;

    std::vector<int> price_lags{0, 1, 2};
    std::vector<int> lags{0, 1, 2};
    bool technicals = true;
    bool lagged_technicals = true;
    bool sentiment = true;
    std::map<std::string, double> indicator_params;
    std::string feature_set;

    ingest::FilterRules filters;
    std::vector<ClassifierConfig> classifiers;
    VoteBias bias = VoteBias::Neutrality;

    std::optional<double> vif_cutoff = 5.0;

    std::vector<ModelSpec> models;
    int cv_folds = 5;
    int cv_repeats = 3;

    std::size_t frame_len = 60;
    std::size_t frame_shift = 10;
    double cost_rate = 0.002;
    double initial = 1000;
    std::size_t random_repetitions = 100;

    std::uint64_t seed = 0;
    fs::path out_dir;

    /// SHA-256 of the canonical config, output directory excluded.
    std::string hash() const;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
};

/// Parses and validates; every violation is collected into one validation
/// error.
RunConfig load_config(const fs::path& path, const Overrides& overrides = {});
RunConfig parse_config(const nlohmann::json& raw, const fs::path& base_dir, const Overrides& overrides = {});

/// Runs one stage; its prerequisites must already be on disk.
void run_stage(const RunConfig& config, Stage stage);
/// Runs every stage in order.
void run_all(const RunConfig& config);

fs::path stage_dir(const RunConfig& config, Stage stage);

/// Side-by-side summary of two completed runs with deltas.
std::string compare_runs(const fs::path& run_a, const fs::path& run_b);

/// 0 success, 2 validation, 3 dependency, 4 runtime.
int exit_code_for(ErrorKind kind);

}  // namespace sentitrade::pipeline
