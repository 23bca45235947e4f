#include "sentitrade/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include "sentitrade/error.hpp"
#include "sentitrade/util.hpp"

namespace sentitrade::backtest {

namespace {

void check_prices(const std::vector<double>& closes) {
    if (closes.empty()) fail(ErrorKind::InsufficientData, "no closing prices");
    for (std::size_t i = 0; i < closes.size(); ++i) {
        if (!(closes[i] > 0) || !std::isfinite(closes[i])) {
            fail(ErrorKind::Validation, "close " + std::to_string(i) + " is not a positive price");
        }
    }
}

void check_rate(double cost_rate) {
    if (!(cost_rate >= 0 && cost_rate < 1)) fail(ErrorKind::Argument, "cost rate must lie in [0, 1)");
}

std::string num(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return format_double(v);
}

}  // namespace

std::vector<Frame> make_frames(std::size_t test_len, std::size_t frame_len, std::size_t shift) {
    if (shift < 1) fail(ErrorKind::Range, "frame shift must be at least 1");
    if (frame_len < 1) fail(ErrorKind::Range, "frame length must be at least 1");
    if (frame_len > test_len) {
        fail(ErrorKind::Range, "frame length " + std::to_string(frame_len) + " exceeds the test span of " +
                                   std::to_string(test_len) + " days");
    }
    std::vector<Frame> frames;
    for (std::size_t start = 0; start + frame_len <= test_len; start += shift) {
        frames.push_back(Frame{start, frame_len, Date{}});
    }
    return frames;
}

std::vector<Frame> make_frames(const std::vector<Date>& test_dates, std::size_t frame_len, std::size_t shift) {
    auto frames = make_frames(test_dates.size(), frame_len, shift);
    for (auto& f : frames) f.start = test_dates[f.first];
    return frames;
}

TradeLedger simulate_strategy(const std::vector<double>& closes, const std::vector<Direction>& directions,
                              double cost_rate, double initial) {
    check_prices(closes);
    check_rate(cost_rate);
    if (directions.size() + 1 < closes.size()) {
        fail(ErrorKind::Argument, "need " + std::to_string(closes.size() - 1) + " directions, got " +
                                      std::to_string(directions.size()));
    }
    const double keep = 1 - cost_rate;
    TradeLedger ledger;
    ledger.fiat = initial;
    bool holding = false;
    for (std::size_t t = 0; t + 1 < closes.size(); ++t) {
        const double price = closes[t];
        const bool up = directions[t] == Direction::Up;
        if (!holding && up) {
            const double notional = ledger.fiat;
            ledger.coins = ledger.fiat * keep / price;
            ledger.fiat = 0;
            ledger.events.push_back({t, Side::Buy, price, notional, notional * cost_rate});
            holding = true;
        } else if (holding && !up) {
            const double notional = ledger.coins * price;
            ledger.fiat = ledger.coins * price * keep;
            ledger.coins = 0;
            ledger.events.push_back({t, Side::Sell, price, notional, notional * cost_rate});
            holding = false;
        }
    }
    for (const auto& e : ledger.events) ledger.total_cost += e.cost;
    ledger.final_value = ledger.fiat + ledger.coins * closes.back();
    return ledger;
}

std::vector<Direction> ideal_directions(const std::vector<double>& closes, double cost_rate, double initial) {
    check_prices(closes);
    check_rate(cost_rate);
    const std::size_t n = closes.size();
    if (n < 2) return {};
    const double keep = 1 - cost_rate;
    // fiat: best cash after day t; coins: best coin count after day t.
    // The arithmetic mirrors simulate_strategy operation for operation so
    // the optimum is reproduced bit for bit when replayed.
    double fiat = initial;
    double coins = -1;  // unreachable before the first buy
    std::vector<char> sold(n - 1, 0), bought(n - 1, 0);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        const double p = closes[t];
        double next_fiat = fiat, next_coins = coins;
        if (coins >= 0) {
            const double via_sell = coins * p * keep;
            if (via_sell > fiat) {
                next_fiat = via_sell;
                sold[t] = 1;
            }
        }
        const double via_buy = fiat * keep / p;
        if (via_buy > coins) {
            next_coins = via_buy;
            bought[t] = 1;
        }
        fiat = next_fiat;
        coins = next_coins;
    }
    bool holding = coins >= 0 && fiat < coins * closes.back();
    std::vector<Direction> dirs(n - 1);
    for (std::size_t t = n - 1; t-- > 0;) {
        dirs[t] = holding ? Direction::Up : Direction::Down;
        holding = holding ? !bought[t] : static_cast<bool>(sold[t]);
    }
    return dirs;
}

TradeLedger ideal_scenario(const std::vector<double>& closes, double cost_rate, double initial) {
    return simulate_strategy(closes, ideal_directions(closes, cost_rate, initial), cost_rate, initial);
}

RandomScenario random_scenario(const std::vector<double>& closes, double cost_rate, std::size_t repetitions,
                               std::uint64_t seed, double initial) {
    if (repetitions < 1) fail(ErrorKind::Argument, "random scenario needs at least one repetition");
    check_prices(closes);
    RandomScenario out;
    const std::size_t days = closes.size() > 0 ? closes.size() - 1 : 0;
    for (std::size_t r = 0; r < repetitions; ++r) {
        Rng rng(derive_seed(seed, r));
        std::vector<Direction> dirs(days);
        for (auto& d : dirs) d = rng.coin() ? Direction::Up : Direction::Down;
        out.values.push_back(simulate_strategy(closes, dirs, cost_rate, initial).final_value);
    }
    double s = 0;
    for (double v : out.values) s += v;
    out.mean_value = s / static_cast<double>(repetitions);
    return out;
}

TradeLedger hold_scenario(const std::vector<double>& closes, double cost_rate, double initial) {
    if (closes.size() < 2) fail(ErrorKind::InsufficientData, "hold scenario needs at least two closes");
    return simulate_strategy(closes, std::vector<Direction>(closes.size() - 1, Direction::Up), cost_rate, initial);
}

GainDistribution gain_ratio_distribution(const std::vector<double>& model_values,
                                         const std::vector<double>& baseline_values) {
    if (model_values.size() != baseline_values.size()) {
        fail(ErrorKind::Argument, "model and baseline cover different frame counts");
    }
    GainDistribution g;
    for (std::size_t f = 0; f < model_values.size(); ++f) {
        if (baseline_values[f] == 0) fail(ErrorKind::Division, "baseline value is zero in frame " + std::to_string(f));
        g.gains.push_back((model_values[f] - baseline_values[f]) / baseline_values[f]);
    }
    g.test = stats::one_sample_t(g.gains);
    return g;
}

std::vector<SummaryRow> summarize(const std::vector<ModelResult>& results, double alpha) {
    if (results.empty()) fail(ErrorKind::Argument, "nothing to summarize");
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const ModelResult*>> groups;
    for (const auto& r : results) groups[{r.currency, r.model_type, r.feature_set}].push_back(&r);
    std::vector<SummaryRow> rows;
    for (const auto& [key, members] : groups) {
        SummaryRow row;
        std::tie(row.currency, row.model_type, row.feature_set) = key;
        row.models = members.size();
        const double n = static_cast<double>(members.size());
        for (const auto* m : members) {
            row.mean_train_cv_accuracy += m->train_cv_accuracy / n;
            row.mean_test_accuracy += m->test_accuracy / n;
            row.mean_output += stats::mean(m->frame_values) / n;
            for (const auto& [base, g] : m->gains) {
                row.pct_outperform[base] += (g.test.mean > 0 ? 100.0 : 0.0) / n;
                row.pct_significant[base] += (g.test.mean > 0 && g.test.p < alpha ? 100.0 : 0.0) / n;
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

std::vector<std::string> baseline_names(const std::vector<ModelResult>& results) {
    std::set<std::string> names;
    for (const auto& r : results) {
        for (const auto& [b, g] : r.gains) names.insert(b);
    }
    return {names.begin(), names.end()};
}

}  // namespace

std::string models_table(const std::vector<ModelResult>& results) {
    const auto bases = baseline_names(results);
    std::ostringstream out;
    out << "currency,model,model_type,feature_set,train_cv_accuracy,test_accuracy,output_mean,output_sd";
    for (const auto& b : bases) out << ",gain_mean_" << b << ",gain_sd_" << b << ",t_" << b << ",p_" << b;
    out << ",cost_mean,transactions_mean\n";
    for (const auto& r : results) {
        out << r.currency << ',' << r.model << ',' << r.model_type << ',' << r.feature_set << ','
            << num(r.train_cv_accuracy) << ',' << num(r.test_accuracy) << ',' << num(stats::mean(r.frame_values))
            << ',' << num(stats::sample_sd(r.frame_values));
        for (const auto& b : bases) {
            auto it = r.gains.find(b);
            if (it == r.gains.end()) {
                out << ",,,,";
                continue;
            }
            const auto& t = it->second.test;
            out << ',' << num(t.mean) << ',' << num(t.sd) << ',' << num(t.t) << ',' << num(t.p);
        }
        double tx = 0;
        for (auto c : r.frame_transactions) tx += static_cast<double>(c);
        out << ',' << num(r.frame_costs.empty() ? 0.0 : stats::mean(r.frame_costs)) << ','
            << num(r.frame_transactions.empty() ? 0.0 : tx / static_cast<double>(r.frame_transactions.size()))
            << "\n";
    }
    return out.str();
}

std::string frames_table(const std::vector<ModelResult>& results, const std::vector<Frame>& frames) {
    std::ostringstream out;
    out << "model,feature_set,frame,start,final_value,total_cost,transactions\n";
    for (const auto& r : results) {
        for (std::size_t f = 0; f < r.frame_values.size() && f < frames.size(); ++f) {
            out << r.model << ',' << r.feature_set << ',' << f << ',' << format_date(frames[f].start) << ','
                << num(r.frame_values[f]) << ',' << num(f < r.frame_costs.size() ? r.frame_costs[f] : 0.0) << ','
                << (f < r.frame_transactions.size() ? r.frame_transactions[f] : 0) << "\n";
        }
    }
    return out.str();
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
    std::set<std::string> bases;
    for (const auto& r : rows) {
        for (const auto& [b, v] : r.pct_outperform) bases.insert(b);
    }
    std::ostringstream out;
    out << "currency,model_type,feature_set,models,mean_train_cv_accuracy,mean_test_accuracy,mean_output";
    for (const auto& b : bases) out << ",pct_outperform_" << b << ",pct_significant_" << b;
    out << "\n";
    for (const auto& r : rows) {
        out << r.currency << ',' << r.model_type << ',' << r.feature_set << ',' << r.models << ','
            << num(r.mean_train_cv_accuracy) << ',' << num(r.mean_test_accuracy) << ',' << num(r.mean_output);
        for (const auto& b : bases) {
            auto o = r.pct_outperform.find(b);
            auto s = r.pct_significant.find(b);
            out << ',' << (o == r.pct_outperform.end() ? "" : num(o->second)) << ','
                << (s == r.pct_significant.end() ? "" : num(s->second));
        }
        out << "\n";
    }
    return out.str();
}

std::string plot_data(const std::vector<Date>& dates, const std::vector<double>& closes, const TradeLedger& ledger) {
    if (dates.size() != closes.size()) fail(ErrorKind::Argument, "plot data: dates and closes differ in length");
    std::vector<const char*> marker(dates.size(), "");
    for (const auto& e : ledger.events) {
        if (e.day < marker.size()) marker[e.day] = e.side == Side::Buy ? "buy" : "sell";
    }
    std::ostringstream out;
    out << "date,price,marker\n";
    for (std::size_t i = 0; i < dates.size(); ++i) {
        out << format_date(dates[i]) << ',' << num(closes[i]) << ',' << marker[i] << "\n";
    }
    return out.str();
}

}  // namespace sentitrade::backtest
