#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sentitrade/date.hpp"
#include "sentitrade/models.hpp"
#include "sentitrade/stats.hpp"

namespace sentitrade {

struct Frame {
    std::size_t first = 0;  // index into the test rows
    std::size_t length = 0;
    Date start;
};

enum class Side { Buy, Sell };

struct TradeEvent {
    std::size_t day = 0;  // index within the frame
    Side side = Side::Buy;
    double price = 0;
    double notional = 0;  // fiat spent on a buy, fiat value sold on a sell
    double cost = 0;
};

struct TradeLedger {
    std::vector<TradeEvent> events;
    double fiat = 0;
    double coins = 0;
    double final_value = 0;  // fiat + coins at the last close
    double total_cost = 0;

    std::size_t transactions() const { return events.size(); }
};

struct RandomScenario {
    std::vector<double> values;  // per repetition
    double mean_value = 0;
};

struct GainDistribution {
    std::vector<double> gains;
    stats::TTest test;
};

/// Per-model outcome across the frames of one run.
struct ModelResult {
    std::string currency;
    std::string model;
    std::string model_type;  // regression | classification
    std::string feature_set;
    double train_cv_accuracy = 0;
    double test_accuracy = 0;
    std::vector<double> frame_values;
    std::vector<double> frame_costs;
    std::vector<std::size_t> frame_transactions;
    std::map<std::string, GainDistribution> gains;  // keyed by baseline name
};

struct SummaryRow {
    std::string currency;
    std::string model_type;
    std::string feature_set;
    std::size_t models = 0;
    double mean_train_cv_accuracy = 0;
    double mean_test_accuracy = 0;
    double mean_output = 0;
    std::map<std::string, double> pct_outperform;
    std::map<std::string, double> pct_significant;
};

namespace backtest {

inline constexpr double kDefaultCost = 0.002;
inline constexpr double kDefaultInitial = 1000.0;

/// Starts 0, shift, 2*shift, ... while start + frame_len <= test_len.
std::vector<Frame> make_frames(std::size_t test_len, std::size_t frame_len = 60, std::size_t shift = 10);
std::vector<Frame> make_frames(const std::vector<Date>& test_dates, std::size_t frame_len = 60,
                               std::size_t shift = 10);

/// All-in long/flat strategy. directions[t] is the forecast made at close t
/// for t -> t+1; the final day never trades, so directions may have
/// closes.size() - 1 or closes.size() entries.
TradeLedger simulate_strategy(const std::vector<double>& closes, const std::vector<Direction>& directions,
                              double cost_rate = kDefaultCost, double initial = kDefaultInitial);

/// Best achievable schedule, found by dynamic programming over (day, holding).
TradeLedger ideal_scenario(const std::vector<double>& closes, double cost_rate = kDefaultCost,
                           double initial = kDefaultInitial);
/// The direction sequence that replays the ideal schedule.
std::vector<Direction> ideal_directions(const std::vector<double>& closes, double cost_rate = kDefaultCost,
                                        double initial = kDefaultInitial);

RandomScenario random_scenario(const std::vector<double>& closes, double cost_rate, std::size_t repetitions,
                               std::uint64_t seed, double initial = kDefaultInitial);

TradeLedger hold_scenario(const std::vector<double>& closes, double cost_rate = kDefaultCost,
                          double initial = kDefaultInitial);

/// g_f = (V_model - V_base) / V_base per frame, with its one-sample t-test.
GainDistribution gain_ratio_distribution(const std::vector<double>& model_values,
                                         const std::vector<double>& baseline_values);

/// Groups by (currency, model type, feature set). A model outperforms a
/// baseline when its mean gain is positive and is significant when, in
/// addition, p < alpha.
std::vector<SummaryRow> summarize(const std::vector<ModelResult>& results, double alpha = 0.10);

// Report tables (comma-separated, header row, deterministic number format).
std::string models_table(const std::vector<ModelResult>& results);
std::string frames_table(const std::vector<ModelResult>& results, const std::vector<Frame>& frames);
std::string summary_table(const std::vector<SummaryRow>& rows);
/// date,price,marker rows with marker buy, sell or empty.
std::string plot_data(const std::vector<Date>& dates, const std::vector<double>& closes, const TradeLedger& ledger);

}  // namespace backtest
}  // namespace sentitrade
