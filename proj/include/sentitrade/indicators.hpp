#pragma once

#include <map>
#include <string>
#include <vector>

#include "sentitrade/indicator_column.hpp"
#include "sentitrade/ingest.hpp"

namespace sentitrade::indicators {

/// Window parameters keyed as `<indicator>.<param>`, e.g. `rsi.window`.
struct IndicatorParams {
    std::map<std::string, double> values;

    static IndicatorParams defaults();
    int window(const std::string& key) const;  // validated integer >= 1
    double real(const std::string& key) const;
    /// Replaces known keys; an unknown key is a configuration error.
    void override_with(const std::map<std::string, double>& overrides);
};

struct IndicatorSpec {
    std::string name;
    std::string family;  // volume | volatility | trend | momentum | lagged-technical
    std::vector<std::string> params;
    std::string inputs;  // subset of "OHLCV", plus "X" for the other currency
    ScaleClass scale = ScaleClass::Invariant;
    ColumnKind kind = ColumnKind::Continuous;
};

/// The non-lagged technical inventory in emission order (78 entries).
const std::vector<IndicatorSpec>& technical_inventory();
/// The lagged technicals (10 entries).
const std::vector<IndicatorSpec>& lagged_inventory();

/// Both inventories plus default parameters, as the JSON document kept in
/// data/indicator_inventory.json.
std::string inventory_json();

std::vector<IndicatorColumn> compute_lagged_technicals(const PriceSeries& series, const PriceSeries& other,
                                                       const IndicatorParams& params = IndicatorParams::defaults());
std::vector<IndicatorColumn> compute_volume_indicators(const PriceSeries& series,
                                                       const IndicatorParams& params = IndicatorParams::defaults());
std::vector<IndicatorColumn> compute_volatility_indicators(const PriceSeries& series,
                                                           const IndicatorParams& params = IndicatorParams::defaults());
std::vector<IndicatorColumn> compute_trend_indicators(const PriceSeries& series,
                                                      const IndicatorParams& params = IndicatorParams::defaults());
std::vector<IndicatorColumn> compute_momentum_indicators(const PriceSeries& series,
                                                         const IndicatorParams& params = IndicatorParams::defaults());

/// All four families in inventory order.
std::vector<IndicatorColumn> compute_technicals(const PriceSeries& series,
                                                const IndicatorParams& params = IndicatorParams::defaults());

// Building blocks, exposed for tests. NaN marks "not yet defined".
namespace detail {
std::vector<double> rolling_sum(const std::vector<double>& x, int window);
std::vector<double> rolling_mean(const std::vector<double>& x, int window);
std::vector<double> rolling_max(const std::vector<double>& x, int window);
std::vector<double> rolling_min(const std::vector<double>& x, int window);
std::vector<double> rolling_std(const std::vector<double>& x, int window, int ddof);
/// Recursive EMA seeded with the first defined value; defined once `span`
/// observations have been seen.
std::vector<double> ema(const std::vector<double>& x, int span);
std::vector<double> ewm_alpha(const std::vector<double>& x, double alpha, int min_periods);
}  // namespace detail

}  // namespace sentitrade::indicators
