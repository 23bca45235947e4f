#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sentitrade/ingest.hpp"

namespace sentitrade {

enum class ModelKind { Ridge, Logistic, Perceptron, DecisionTree, Voting, Stacking, External };
enum class Task { Regression, Classification };
enum class Direction { Down = 0, Up = 1 };

std::string_view to_string(ModelKind kind);
std::string_view to_string(Task task);
ModelKind parse_model_kind(std::string_view text);
Task parse_task(std::string_view text);

using Hyper = std::map<std::string, double>;
using Grid = std::map<std::string, std::vector<double>>;

struct ModelSpec {
    std::string name;
    ModelKind kind = ModelKind::Ridge;
    Task task = Task::Regression;
    Grid grid;
    std::vector<ModelSpec> members;  // voting / stacking
    std::vector<std::string> command;  // external
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    static ModelSpec from_json(const nlohmann::json& j);
};

struct TrainedModel {
    ModelSpec spec;
    Hyper hyper;
    std::vector<std::string> manifest;
    nlohmann::json params;

    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);
};

struct CvResult {
    std::vector<Hyper> candidates;
    std::vector<std::vector<double>> scores;  // [candidate][fold x repeat]
    std::vector<double> mean;
    std::vector<double> sd;
    std::size_t winner = 0;
};

namespace models {

/// Cartesian product in key order with the last key varying fastest. An
/// empty grid yields one empty candidate.
std::vector<Hyper> expand_grid(const Grid& grid);

/// Zero and negative values map to down.
std::vector<Direction> direction(const std::vector<double>& values);
double balanced_accuracy(const std::vector<Direction>& pred, const std::vector<Direction>& gold);
double accuracy(const std::vector<Direction>& pred, const std::vector<Direction>& gold);

TrainedModel fit(const ModelSpec& spec, const FeatureMatrix& train, const Hyper& hyper = {});
/// Regression emits reals; classification emits +1 (up) or -1 (down).
std::vector<double> predict(const TrainedModel& model, const FeatureMatrix& rows);

/// fold id per row for one repeat; class counts per fold differ from the
/// global share by less than one sample.
std::vector<int> stratified_folds(const std::vector<Direction>& classes, int folds, std::uint64_t seed);

CvResult cv_tune(const ModelSpec& spec, const FeatureMatrix& train, int folds = 5, int repeats = 3,
                 std::uint64_t seed = 0);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

namespace detail {

struct RidgeFit {
    std::vector<double> w;
    double b = 0;
};
RidgeFit fit_ridge(const std::vector<std::vector<double>>& x, const std::vector<double>& y, double alpha,
                   bool fit_intercept);

struct LogisticFit {
    std::vector<double> w;
    double b = 0;
    std::vector<double> loss_trace;  // loss before the first step and after each accepted step
};
/// Penalised binary log-loss 0.5*|w|^2 + C * sum log(1 + exp(-y f)), y in {-1, +1},
/// minimised by damped Newton steps.
LogisticFit fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<double>& y, double c,
                         int max_iter = 100, double tol = 1e-8);

}  // namespace detail
}  // namespace models
}  // namespace sentitrade
