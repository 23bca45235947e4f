#include "sentitrade/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sentitrade/error.hpp"
#include "sentitrade/util.hpp"

namespace sentitrade::indicators {

using Vec = std::vector<double>;

// ------------------------------------------------------------------ params

IndicatorParams IndicatorParams::defaults() {
    IndicatorParams p;
    p.values = {
        {"price_std.window", 30},
        // volume
        {"cmf.window", 20}, {"fi.window", 13}, {"em.window", 14}, {"vwap.window", 14}, {"mfi.window", 14},
        // volatility
        {"bb.window", 20}, {"bb.dev", 2}, {"kc.window", 10}, {"dc.window", 20}, {"atr.window", 10},
        {"ui.window", 14},
        // trend
        {"macd.fast", 12}, {"macd.slow", 26}, {"macd.signal", 9},
        {"sma.fast", 12}, {"sma.slow", 26}, {"ema.fast", 12}, {"ema.slow", 26}, {"wma.fast", 12}, {"wma.slow", 26},
        {"vortex.window", 14}, {"trix.window", 15}, {"mass.fast", 9}, {"mass.slow", 25}, {"dpo.window", 20},
        {"kst.roc1", 10}, {"kst.roc2", 15}, {"kst.roc3", 20}, {"kst.roc4", 30},
        {"kst.window1", 10}, {"kst.window2", 10}, {"kst.window3", 10}, {"kst.window4", 15}, {"kst.signal", 9},
        {"ichimoku.window1", 9}, {"ichimoku.window2", 26}, {"ichimoku.window3", 52},
        {"stc.fast", 23}, {"stc.slow", 50}, {"stc.cycle", 10}, {"stc.smooth1", 3}, {"stc.smooth2", 3},
        {"adx.window", 14}, {"cci.window", 20}, {"cci.constant", 0.015}, {"psar.step", 0.02}, {"psar.max_step", 0.2},
        // momentum
        {"rsi.window", 14}, {"stoch_rsi.window", 14}, {"stoch_rsi.smooth1", 3}, {"stoch_rsi.smooth2", 3},
        {"tsi.slow", 25}, {"tsi.fast", 13},
        {"uo.window1", 7}, {"uo.window2", 14}, {"uo.window3", 28}, {"uo.weight1", 4}, {"uo.weight2", 2},
        {"uo.weight3", 1},
        {"stoch.window", 14}, {"stoch.smooth", 3}, {"wr.window", 14}, {"ao.fast", 5}, {"ao.slow", 34},
        {"roc.window", 12}, {"ppo.fast", 12}, {"ppo.slow", 26}, {"ppo.signal", 9},
        {"pvo.fast", 12}, {"pvo.slow", 26}, {"pvo.signal", 9},
        {"kama.window", 10}, {"kama.pow1", 2}, {"kama.pow2", 30},
    };
    return p;
}

double IndicatorParams::real(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) fail(ErrorKind::Configuration, "unknown indicator parameter '" + key + "'");
    return it->second;
}

int IndicatorParams::window(const std::string& key) const {
    double v = real(key);
    if (v < 1 || v != std::floor(v) || v > 100000) {
        fail(ErrorKind::Configuration, "indicator parameter '" + key + "' must be a positive integer");
    }
    return static_cast<int>(v);
}

void IndicatorParams::override_with(const std::map<std::string, double>& overrides) {
    for (const auto& [k, v] : overrides) {
        if (!values.count(k)) fail(ErrorKind::Configuration, "unknown indicator parameter '" + k + "'");
        values[k] = v;
    }
}

// --------------------------------------------------------------- inventory

namespace {

struct InventoryRow {
    const char* name;
    const char* family;
    std::vector<std::string> params;
    const char* inputs;
    ScaleClass scale;
    ColumnKind kind = ColumnKind::Continuous;
};

constexpr auto Inv = ScaleClass::Invariant;
constexpr auto Lin = ScaleClass::Linear;
constexpr auto Quad = ScaleClass::Quadratic;
constexpr auto Dummy = ColumnKind::Dummy;

std::vector<IndicatorSpec> build(const std::vector<InventoryRow>& rows) {
    std::vector<IndicatorSpec> out;
    for (const auto& r : rows) out.push_back({r.name, r.family, r.params, r.inputs, r.scale, r.kind});
    return out;
}

}  // namespace

const std::vector<IndicatorSpec>& technical_inventory() {
    static const std::vector<IndicatorSpec> inv = build({
        {"volume_adi", "volume", {}, "HLCV", Inv},
        {"volume_obv", "volume", {}, "CV", Inv},
        {"volume_cmf", "volume", {"cmf.window"}, "HLCV", Inv},
        {"volume_fi", "volume", {"fi.window"}, "CV", Lin},
        {"volume_em", "volume", {"em.window"}, "HLV", Quad},
        {"volume_sma_em", "volume", {"em.window"}, "HLV", Quad},
        {"volume_vpt", "volume", {}, "CV", Inv},
        {"volume_vwap", "volume", {"vwap.window"}, "HLCV", Lin},
        {"volume_mfi", "volume", {"mfi.window"}, "HLCV", Inv},
        {"volume_nvi", "volume", {}, "CV", Inv},

        {"volatility_bbm", "volatility", {"bb.window", "bb.dev"}, "C", Lin},
        {"volatility_bbh", "volatility", {"bb.window", "bb.dev"}, "C", Lin},
        {"volatility_bbl", "volatility", {"bb.window", "bb.dev"}, "C", Lin},
        {"volatility_bbw", "volatility", {"bb.window", "bb.dev"}, "C", Inv},
        {"volatility_bbp", "volatility", {"bb.window", "bb.dev"}, "C", Inv},
        {"volatility_bbhi", "volatility", {"bb.window", "bb.dev"}, "C", Inv, Dummy},
        {"volatility_bbli", "volatility", {"bb.window", "bb.dev"}, "C", Inv, Dummy},
        {"volatility_kcc", "volatility", {"kc.window"}, "HLC", Lin},
        {"volatility_kch", "volatility", {"kc.window"}, "HLC", Lin},
        {"volatility_kcl", "volatility", {"kc.window"}, "HLC", Lin},
        {"volatility_kcw", "volatility", {"kc.window"}, "HLC", Inv},
        {"volatility_kcp", "volatility", {"kc.window"}, "HLC", Inv},
        {"volatility_kchi", "volatility", {"kc.window"}, "HLC", Inv, Dummy},
        {"volatility_kcli", "volatility", {"kc.window"}, "HLC", Inv, Dummy},
        {"volatility_dcl", "volatility", {"dc.window"}, "HL", Lin},
        {"volatility_dch", "volatility", {"dc.window"}, "HL", Lin},
        {"volatility_dcm", "volatility", {"dc.window"}, "HL", Lin},
        {"volatility_dcw", "volatility", {"dc.window"}, "HLC", Inv},
        {"volatility_dcp", "volatility", {"dc.window"}, "HLC", Inv},
        {"volatility_atr", "volatility", {"atr.window"}, "HLC", Lin},
        {"volatility_ui", "volatility", {"ui.window"}, "C", Inv},

        {"trend_macd", "trend", {"macd.fast", "macd.slow"}, "C", Lin},
        {"trend_macd_signal", "trend", {"macd.fast", "macd.slow", "macd.signal"}, "C", Lin},
        {"trend_macd_diff", "trend", {"macd.fast", "macd.slow", "macd.signal"}, "C", Lin},
        {"trend_sma_fast", "trend", {"sma.fast"}, "C", Lin},
        {"trend_sma_slow", "trend", {"sma.slow"}, "C", Lin},
        {"trend_ema_fast", "trend", {"ema.fast"}, "C", Lin},
        {"trend_ema_slow", "trend", {"ema.slow"}, "C", Lin},
        {"trend_wma_fast", "trend", {"wma.fast"}, "C", Lin},
        {"trend_wma_slow", "trend", {"wma.slow"}, "C", Lin},
        {"trend_vortex_ind_pos", "trend", {"vortex.window"}, "HLC", Inv},
        {"trend_vortex_ind_neg", "trend", {"vortex.window"}, "HLC", Inv},
        {"trend_vortex_ind_diff", "trend", {"vortex.window"}, "HLC", Inv},
        {"trend_trix", "trend", {"trix.window"}, "C", Inv},
        {"trend_mass_index", "trend", {"mass.fast", "mass.slow"}, "HL", Inv},
        {"trend_dpo", "trend", {"dpo.window"}, "C", Lin},
        {"trend_kst", "trend", {"kst.roc1", "kst.roc2", "kst.roc3", "kst.roc4", "kst.window1", "kst.window2",
                                "kst.window3", "kst.window4"}, "C", Inv},
        {"trend_kst_sig", "trend", {"kst.signal"}, "C", Inv},
        {"trend_kst_diff", "trend", {"kst.signal"}, "C", Inv},
        {"trend_ichimoku_conv", "trend", {"ichimoku.window1"}, "HL", Lin},
        {"trend_ichimoku_base", "trend", {"ichimoku.window2"}, "HL", Lin},
        {"trend_ichimoku_a", "trend", {"ichimoku.window1", "ichimoku.window2"}, "HL", Lin},
        {"trend_ichimoku_b", "trend", {"ichimoku.window3"}, "HL", Lin},
        {"trend_stc", "trend", {"stc.fast", "stc.slow", "stc.cycle", "stc.smooth1", "stc.smooth2"}, "C", Inv},
        {"trend_adx", "trend", {"adx.window"}, "HLC", Inv},
        {"trend_adx_pos", "trend", {"adx.window"}, "HLC", Inv},
        {"trend_adx_neg", "trend", {"adx.window"}, "HLC", Inv},
        {"trend_cci", "trend", {"cci.window", "cci.constant"}, "HLC", Inv},
        {"trend_psar_up", "trend", {"psar.step", "psar.max_step"}, "HLC", Lin},
        {"trend_psar_down", "trend", {"psar.step", "psar.max_step"}, "HLC", Lin},

        {"momentum_rsi", "momentum", {"rsi.window"}, "C", Inv},
        {"momentum_stoch_rsi", "momentum", {"stoch_rsi.window"}, "C", Inv},
        {"momentum_stoch_rsi_k", "momentum", {"stoch_rsi.window", "stoch_rsi.smooth1"}, "C", Inv},
        {"momentum_stoch_rsi_d", "momentum", {"stoch_rsi.window", "stoch_rsi.smooth1", "stoch_rsi.smooth2"}, "C",
         Inv},
        {"momentum_tsi", "momentum", {"tsi.slow", "tsi.fast"}, "C", Inv},
        {"momentum_uo", "momentum", {"uo.window1", "uo.window2", "uo.window3", "uo.weight1", "uo.weight2",
                                     "uo.weight3"}, "HLC", Inv},
        {"momentum_stoch", "momentum", {"stoch.window"}, "HLC", Inv},
        {"momentum_stoch_signal", "momentum", {"stoch.window", "stoch.smooth"}, "HLC", Inv},
        {"momentum_wr", "momentum", {"wr.window"}, "HLC", Inv},
        {"momentum_ao", "momentum", {"ao.fast", "ao.slow"}, "HL", Lin},
        {"momentum_roc", "momentum", {"roc.window"}, "C", Inv},
        {"momentum_ppo", "momentum", {"ppo.fast", "ppo.slow"}, "C", Inv},
        {"momentum_ppo_signal", "momentum", {"ppo.fast", "ppo.slow", "ppo.signal"}, "C", Inv},
        {"momentum_ppo_hist", "momentum", {"ppo.fast", "ppo.slow", "ppo.signal"}, "C", Inv},
        {"momentum_pvo", "momentum", {"pvo.fast", "pvo.slow"}, "V", Inv},
        {"momentum_pvo_signal", "momentum", {"pvo.fast", "pvo.slow", "pvo.signal"}, "V", Inv},
        {"momentum_pvo_hist", "momentum", {"pvo.fast", "pvo.slow", "pvo.signal"}, "V", Inv},
        {"momentum_kama", "momentum", {"kama.window", "kama.pow1", "kama.pow2"}, "C", Lin},
    });
    return inv;
}

const std::vector<IndicatorSpec>& lagged_inventory() {
    static const std::vector<IndicatorSpec> inv = build({
        {"close_open_return", "lagged-technical", {}, "OC", Inv},
        {"log_return", "lagged-technical", {}, "C", Inv},
        {"cumulative_return", "lagged-technical", {}, "C", Inv},
        {"volume", "lagged-technical", {}, "V", Inv},
        {"price_std_30", "lagged-technical", {"price_std.window"}, "C", Lin},
        {"parkinson", "lagged-technical", {}, "HL", Inv},
        {"intraday_range", "lagged-technical", {}, "OHL", Inv},
        {"other_close", "lagged-technical", {}, "X", Inv},
        {"other_return", "lagged-technical", {}, "X", Inv},
        {"other_volume", "lagged-technical", {}, "X", Inv},
    });
    return inv;
}

namespace {

std::string_view scale_name(ScaleClass s) {
    switch (s) {
        case ScaleClass::Invariant: return "invariant";
        case ScaleClass::Linear: return "linear";
        case ScaleClass::Quadratic: return "quadratic";
    }
    return "?";
}

const IndicatorSpec& spec_of(const std::string& name) {
    static const auto index = [] {
        std::unordered_map<std::string, const IndicatorSpec*> m;
        for (const auto& s : technical_inventory()) m[s.name] = &s;
        for (const auto& s : lagged_inventory()) m[s.name] = &s;
        return m;
    }();
    auto it = index.find(name);
    if (it == index.end()) fail(ErrorKind::Spec, "indicator '" + name + "' is not in the inventory");
    return *it->second;
}

}  // namespace

std::string inventory_json() {
    using ojson = nlohmann::ordered_json;
    auto rows = [](const std::vector<IndicatorSpec>& inv) {
        ojson arr = ojson::array();
        for (const auto& s : inv) {
            ojson j;
            j["name"] = s.name;
            j["family"] = s.family;
            j["params"] = s.params;
            j["inputs"] = s.inputs;
            j["scale"] = std::string(scale_name(s.scale));
            j["kind"] = s.kind == ColumnKind::Dummy ? "dummy" : "continuous";
            arr.push_back(j);
        }
        return arr;
    };
    ojson doc;
    ojson defaults = ojson::object();
    for (const auto& [k, v] : IndicatorParams::defaults().values) defaults[k] = v;
    doc["defaults"] = defaults;
    doc["technical"] = rows(technical_inventory());
    doc["lagged_technical"] = rows(lagged_inventory());
    return doc.dump(2) + "\n";
}

// ------------------------------------------------------------ primitives

namespace detail {

Vec rolling_sum(const Vec& x, int window) {
    const std::size_t w = static_cast<std::size_t>(window);
    Vec out(x.size(), kNaN);
    for (std::size_t i = w == 0 ? x.size() : w - 1; i < x.size(); ++i) {
        double s = 0;
        bool ok = true;
        for (std::size_t j = i + 1 - w; j <= i; ++j) {
            if (std::isnan(x[j])) {
                ok = false;
                break;
            }
            s += x[j];
        }
        if (ok) out[i] = s;
    }
    return out;
}

Vec rolling_mean(const Vec& x, int window) {
    Vec out = rolling_sum(x, window);
    for (auto& v : out) v /= window;
    return out;
}

namespace {
template <typename Pick>
Vec rolling_extreme(const Vec& x, int window, Pick pick) {
    const std::size_t w = static_cast<std::size_t>(window);
    Vec out(x.size(), kNaN);
    for (std::size_t i = w == 0 ? x.size() : w - 1; i < x.size(); ++i) {
        double m = x[i + 1 - w];
        bool ok = !std::isnan(m);
        for (std::size_t j = i + 2 - w; ok && j <= i; ++j) {
            if (std::isnan(x[j])) ok = false;
            else m = pick(m, x[j]);
        }
        if (ok) out[i] = m;
    }
    return out;
}
}  // namespace

Vec rolling_max(const Vec& x, int window) {
    return rolling_extreme(x, window, [](double a, double b) { return std::max(a, b); });
}

Vec rolling_min(const Vec& x, int window) {
    return rolling_extreme(x, window, [](double a, double b) { return std::min(a, b); });
}

Vec rolling_std(const Vec& x, int window, int ddof) {
    const std::size_t w = static_cast<std::size_t>(window);
    Vec mean = rolling_mean(x, window);
    Vec out(x.size(), kNaN);
    if (window - ddof <= 0) return out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isnan(mean[i])) continue;
        double ss = 0;
        for (std::size_t j = i + 1 - w; j <= i; ++j) ss += (x[j] - mean[i]) * (x[j] - mean[i]);
        out[i] = std::sqrt(ss / (window - ddof));
    }
    return out;
}

Vec ewm_alpha(const Vec& x, double alpha, int min_periods) {
    // Same recursion as the common dataframe ewm(adjust=False): a gap decays
    // the old weight instead of resetting the state.
    Vec out(x.size(), kNaN);
    double weighted = kNaN;
    double old_wt = 1.0;
    int nobs = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double cur = x[i];
        const bool obs = !std::isnan(cur);
        nobs += obs;
        if (!std::isnan(weighted)) {
            old_wt *= 1.0 - alpha;
            if (obs) {
                if (weighted != cur) weighted = (old_wt * weighted + alpha * cur) / (old_wt + alpha);
                old_wt = 1.0;
            }
        } else if (obs) {
            weighted = cur;
        }
        if (nobs >= min_periods) out[i] = weighted;
    }
    return out;
}

Vec ema(const Vec& x, int span) { return ewm_alpha(x, 2.0 / (span + 1.0), span); }

}  // namespace detail

using namespace detail;

// ------------------------------------------------------------------ helpers

namespace {

struct Ohlcv {
    std::vector<Date> dates;
    Vec o, h, l, c, v;
    std::size_t n = 0;

    explicit Ohlcv(const PriceSeries& s) {
        n = s.size();
        for (const auto& b : s.bars) {
            dates.push_back(b.date);
            o.push_back(b.open);
            h.push_back(b.high);
            l.push_back(b.low);
            c.push_back(b.close);
            v.push_back(b.volume);
        }
    }
};

IndicatorColumn finish(const std::string& name, const Ohlcv& s, Vec values, std::size_t valid_from) {
    const IndicatorSpec& spec = spec_of(name);
    IndicatorColumn col;
    col.name = name;
    col.dates = s.dates;
    col.kind = spec.kind;
    col.scale = spec.scale;
    col.valid_from = std::min(valid_from, values.size());
    for (std::size_t i = 0; i < col.valid_from; ++i) values[i] = kNaN;
    for (std::size_t i = col.valid_from; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            fail(ErrorKind::Numerical, "indicator " + name + " is undefined on " + format_date(s.dates[i]));
        }
    }
    col.values = std::move(values);
    return col;
}

std::size_t uz(int v) { return v < 0 ? 0 : static_cast<std::size_t>(v); }

double ratio_or(double num, double den, double fallback) {
    if (std::isnan(num) || std::isnan(den)) return kNaN;
    return den == 0 ? fallback : num / den;
}

Vec true_range(const Ohlcv& s) {
    Vec tr(s.n, kNaN);
    for (std::size_t i = 0; i < s.n; ++i) {
        tr[i] = s.h[i] - s.l[i];
        if (i > 0) tr[i] = std::max({tr[i], std::abs(s.h[i] - s.c[i - 1]), std::abs(s.l[i] - s.c[i - 1])});
    }
    return tr;
}

Vec typical_price(const Ohlcv& s) {
    Vec tp(s.n);
    for (std::size_t i = 0; i < s.n; ++i) tp[i] = (s.h[i] + s.l[i] + s.c[i]) / 3.0;
    return tp;
}

/// Position of x inside [lo, hi]; a collapsed range yields `mid`.
Vec position(const Vec& x, const Vec& lo, const Vec& hi, double scale, double mid) {
    Vec out(x.size(), kNaN);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isnan(lo[i]) || std::isnan(hi[i]) || std::isnan(x[i])) continue;
        out[i] = hi[i] == lo[i] ? mid : scale * (x[i] - lo[i]) / (hi[i] - lo[i]);
    }
    return out;
}

/// As `position`, but a collapsed range repeats the previous value.
Vec position_hold(const Vec& x, const Vec& lo, const Vec& hi, double scale, double first) {
    Vec out(x.size(), kNaN);
    double prev = first;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isnan(lo[i]) || std::isnan(hi[i]) || std::isnan(x[i])) continue;
        out[i] = hi[i] == lo[i] ? prev : scale * (x[i] - lo[i]) / (hi[i] - lo[i]);
        prev = out[i];
    }
    return out;
}

Vec zip(const Vec& a, const Vec& b, double (*f)(double, double)) {
    Vec out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

double sub(double a, double b) { return a - b; }

}  // namespace

// ---------------------------------------------------------------- lagged

std::vector<IndicatorColumn> compute_lagged_technicals(const PriceSeries& series, const PriceSeries& other,
                                                       const IndicatorParams& params) {
    Ohlcv s(series);
    std::vector<std::string> missing;
    std::vector<std::size_t> map(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        auto j = other.index_of(s.dates[i]);
        if (!j) missing.push_back(format_date(s.dates[i]));
        else map[i] = *j;
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
        fail(ErrorKind::Alignment, "other-currency series misses " + std::to_string(missing.size()) +
                                       " date(s): " + list + (missing.size() > 20 ? ", ..." : ""));
    }
    Vec co(s.n), logr(s.n, kNaN), cum(s.n), park(s.n), intraday(s.n), oc(s.n), oret(s.n, kNaN), ov(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        co[i] = s.c[i] / s.o[i] - 1.0;
        if (i > 0) logr[i] = std::log(s.c[i] / s.c[i - 1]);
        cum[i] = s.c[i] / s.c[0] - 1.0;
        const double hl = std::log(s.h[i] / s.l[i]);
        park[i] = std::sqrt(hl * hl / (4.0 * std::log(2.0)));
        intraday[i] = (s.h[i] - s.l[i]) / s.o[i];
        const PriceBar& ob = other.bars[map[i]];
        oc[i] = ob.close;
        ov[i] = ob.volume;
        if (map[i] > 0) oret[i] = ob.close / other.bars[map[i] - 1].close - 1.0;
    }
    // The other currency's first return needs its previous bar, which may
    // predate this series.
    const std::size_t oret_from = (s.n > 0 && map[0] > 0) ? 0 : 1;
    const int wstd = params.window("price_std.window");
    std::vector<IndicatorColumn> out;
    out.push_back(finish("close_open_return", s, co, 0));
    out.push_back(finish("log_return", s, logr, 1));
    out.push_back(finish("cumulative_return", s, cum, 0));
    out.push_back(finish("volume", s, s.v, 0));
    out.push_back(finish("price_std_30", s, rolling_std(s.c, wstd, 1), uz(wstd - 1)));
    out.push_back(finish("parkinson", s, park, 0));
    out.push_back(finish("intraday_range", s, intraday, 0));
    out.push_back(finish("other_close", s, oc, 0));
    out.push_back(finish("other_return", s, oret, oret_from));
    out.push_back(finish("other_volume", s, ov, 0));
    return out;
}

// ---------------------------------------------------------------- volume

std::vector<IndicatorColumn> compute_volume_indicators(const PriceSeries& series, const IndicatorParams& p) {
    Ohlcv s(series);
    const std::size_t n = s.n;
    std::vector<IndicatorColumn> out;

    Vec clv(n), mfv(n), adi(n), obv(n);
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double range = s.h[i] - s.l[i];
        clv[i] = range == 0 ? 0.0 : ((s.c[i] - s.l[i]) - (s.h[i] - s.c[i])) / range;
        mfv[i] = clv[i] * s.v[i];
        acc += mfv[i];
        adi[i] = acc;
    }
    // On-balance volume: an unchanged close leaves the running total alone.
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) obv[i] = s.v[0];
        else if (s.c[i] > s.c[i - 1]) obv[i] = obv[i - 1] + s.v[i];
        else if (s.c[i] < s.c[i - 1]) obv[i] = obv[i - 1] - s.v[i];
        else obv[i] = obv[i - 1];
    }
    out.push_back(finish("volume_adi", s, adi, 0));
    out.push_back(finish("volume_obv", s, obv, 0));

    const int wcmf = p.window("cmf.window");
    Vec mfv_sum = rolling_sum(mfv, wcmf), vol_sum = rolling_sum(s.v, wcmf), cmf(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) cmf[i] = ratio_or(mfv_sum[i], vol_sum[i], 0.0);
    out.push_back(finish("volume_cmf", s, cmf, uz(wcmf - 1)));

    const int wfi = p.window("fi.window");
    Vec force(n, kNaN);
    for (std::size_t i = 1; i < n; ++i) force[i] = (s.c[i] - s.c[i - 1]) * s.v[i];
    out.push_back(finish("volume_fi", s, ema(force, wfi), uz(wfi)));

    const int wem = p.window("em.window");
    Vec em(n, kNaN);
    for (std::size_t i = 1; i < n; ++i) {
        em[i] = s.v[i] == 0 ? 0.0
                            : ((s.h[i] - s.h[i - 1]) + (s.l[i] - s.l[i - 1])) * (s.h[i] - s.l[i]) / (2 * s.v[i]) *
                                  100000000.0;
    }
    out.push_back(finish("volume_em", s, em, 1));
    out.push_back(finish("volume_sma_em", s, rolling_mean(em, wem), uz(wem)));

    Vec vpt(n, kNaN);
    acc = 0;
    for (std::size_t i = 1; i < n; ++i) {
        acc += (s.c[i] / s.c[i - 1] - 1.0) * s.v[i];
        vpt[i] = acc;
    }
    out.push_back(finish("volume_vpt", s, vpt, 1));

    const int wvwap = p.window("vwap.window");
    Vec tp = typical_price(s), tpv(n);
    for (std::size_t i = 0; i < n; ++i) tpv[i] = tp[i] * s.v[i];
    Vec tpv_sum = rolling_sum(tpv, wvwap), v_sum = rolling_sum(s.v, wvwap), tp_mean = rolling_mean(tp, wvwap);
    Vec vwap(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) vwap[i] = ratio_or(tpv_sum[i], v_sum[i], tp_mean[i]);
    out.push_back(finish("volume_vwap", s, vwap, uz(wvwap - 1)));

    const int wmfi = p.window("mfi.window");
    Vec pos_flow(n, 0.0), neg_flow(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double flow = tp[i] * s.v[i];
        if (tp[i] > tp[i - 1]) pos_flow[i] = flow;
        else if (tp[i] < tp[i - 1]) neg_flow[i] = flow;
    }
    Vec pos_sum = rolling_sum(pos_flow, wmfi), neg_sum = rolling_sum(neg_flow, wmfi), mfi(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(pos_sum[i])) continue;
        if (neg_sum[i] == 0) mfi[i] = pos_sum[i] == 0 ? 50.0 : 100.0;
        else mfi[i] = 100.0 - 100.0 / (1.0 + pos_sum[i] / neg_sum[i]);
    }
    out.push_back(finish("volume_mfi", s, mfi, uz(wmfi - 1)));

    Vec nvi(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0) nvi[i] = 1000.0;
        else if (s.v[i] < s.v[i - 1]) nvi[i] = nvi[i - 1] * (1.0 + (s.c[i] / s.c[i - 1] - 1.0));
        else nvi[i] = nvi[i - 1];
    }
    out.push_back(finish("volume_nvi", s, nvi, 0));
    return out;
}

// ------------------------------------------------------------ volatility

std::vector<IndicatorColumn> compute_volatility_indicators(const PriceSeries& series, const IndicatorParams& p) {
    Ohlcv s(series);
    const std::size_t n = s.n;
    std::vector<IndicatorColumn> out;

    auto flags = [&](const Vec& hi, const Vec& lo, Vec& above, Vec& below) {
        above.assign(n, kNaN);
        below.assign(n, kNaN);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isnan(hi[i]) || std::isnan(lo[i])) continue;
            above[i] = s.c[i] > hi[i] ? 1.0 : 0.0;
            below[i] = s.c[i] < lo[i] ? 1.0 : 0.0;
        }
    };
    auto width = [&](const Vec& hi, const Vec& lo, const Vec& mid) {
        Vec w(n, kNaN);
        for (std::size_t i = 0; i < n; ++i) w[i] = (hi[i] - lo[i]) / mid[i] * 100.0;
        return w;
    };

    const int wbb = p.window("bb.window");
    const double dev = p.real("bb.dev");
    Vec bbm = rolling_mean(s.c, wbb), sd = rolling_std(s.c, wbb, 0), bbh(n), bbl(n);
    for (std::size_t i = 0; i < n; ++i) {
        bbh[i] = bbm[i] + dev * sd[i];
        bbl[i] = bbm[i] - dev * sd[i];
    }
    Vec bbhi, bbli;
    flags(bbh, bbl, bbhi, bbli);
    const std::size_t vbb = uz(wbb - 1);
    out.push_back(finish("volatility_bbm", s, bbm, vbb));
    out.push_back(finish("volatility_bbh", s, bbh, vbb));
    out.push_back(finish("volatility_bbl", s, bbl, vbb));
    out.push_back(finish("volatility_bbw", s, width(bbh, bbl, bbm), vbb));
    out.push_back(finish("volatility_bbp", s, position(s.c, bbl, bbh, 1.0, 0.5), vbb));
    out.push_back(finish("volatility_bbhi", s, bbhi, vbb));
    out.push_back(finish("volatility_bbli", s, bbli, vbb));

    const int wkc = p.window("kc.window");
    Vec tp = typical_price(s), up(n), dn(n);
    for (std::size_t i = 0; i < n; ++i) {
        up[i] = (4 * s.h[i] - 2 * s.l[i] + s.c[i]) / 3.0;
        dn[i] = (-2 * s.h[i] + 4 * s.l[i] + s.c[i]) / 3.0;
    }
    Vec kcc = rolling_mean(tp, wkc), kch = rolling_mean(up, wkc), kcl = rolling_mean(dn, wkc), kchi, kcli;
    flags(kch, kcl, kchi, kcli);
    const std::size_t vkc = uz(wkc - 1);
    out.push_back(finish("volatility_kcc", s, kcc, vkc));
    out.push_back(finish("volatility_kch", s, kch, vkc));
    out.push_back(finish("volatility_kcl", s, kcl, vkc));
    out.push_back(finish("volatility_kcw", s, width(kch, kcl, kcc), vkc));
    out.push_back(finish("volatility_kcp", s, position(s.c, kcl, kch, 1.0, 0.5), vkc));
    out.push_back(finish("volatility_kchi", s, kchi, vkc));
    out.push_back(finish("volatility_kcli", s, kcli, vkc));

    const int wdc = p.window("dc.window");
    Vec dch = rolling_max(s.h, wdc), dcl = rolling_min(s.l, wdc), dcm(n);
    for (std::size_t i = 0; i < n; ++i) dcm[i] = (dch[i] - dcl[i]) / 2.0 + dcl[i];
    const std::size_t vdc = uz(wdc - 1);
    out.push_back(finish("volatility_dcl", s, dcl, vdc));
    out.push_back(finish("volatility_dch", s, dch, vdc));
    out.push_back(finish("volatility_dcm", s, dcm, vdc));
    out.push_back(finish("volatility_dcw", s, width(dch, dcl, rolling_mean(s.c, wdc)), vdc));
    out.push_back(finish("volatility_dcp", s, position(s.c, dcl, dch, 1.0, 0.5), vdc));

    // Wilder ATR seeded with the plain mean of the first window.
    const int watr = p.window("atr.window");
    const std::size_t wa = uz(watr);
    Vec tr = true_range(s), atr(n, kNaN);
    if (n >= wa) {
        double seed = 0;
        for (std::size_t i = 0; i < wa; ++i) seed += tr[i];
        atr[wa - 1] = seed / watr;
        for (std::size_t i = wa; i < n; ++i) atr[i] = (atr[i - 1] * (watr - 1) + tr[i]) / watr;
    }
    out.push_back(finish("volatility_atr", s, atr, wa - 1));

    const int wui = p.window("ui.window");
    Vec dd(n), sq(n);
    for (std::size_t i = 0; i < n; ++i) {
        double peak = s.c[i];
        for (std::size_t j = (i + 1 >= uz(wui) ? i + 1 - uz(wui) : 0); j <= i; ++j) peak = std::max(peak, s.c[j]);
        dd[i] = 100.0 * (s.c[i] - peak) / peak;
        sq[i] = dd[i] * dd[i] / wui;
    }
    Vec ui = rolling_sum(sq, wui);
    for (auto& v : ui) v = std::sqrt(v);
    out.push_back(finish("volatility_ui", s, ui, uz(wui - 1)));
    return out;
}

// ----------------------------------------------------------------- trend

std::vector<IndicatorColumn> compute_trend_indicators(const PriceSeries& series, const IndicatorParams& p) {
    Ohlcv s(series);
    const std::size_t n = s.n;
    std::vector<IndicatorColumn> out;

    const int mf = p.window("macd.fast"), ms = p.window("macd.slow"), msig = p.window("macd.signal");
    Vec macd = zip(ema(s.c, mf), ema(s.c, ms), sub);
    Vec macd_sig = ema(macd, msig);
    const std::size_t vmacd = uz(std::max(mf, ms) - 1);
    out.push_back(finish("trend_macd", s, macd, vmacd));
    out.push_back(finish("trend_macd_signal", s, macd_sig, vmacd + uz(msig - 1)));
    out.push_back(finish("trend_macd_diff", s, zip(macd, macd_sig, sub), vmacd + uz(msig - 1)));

    for (const char* which : {"fast", "slow"}) {
        const int w = p.window(std::string("sma.") + which);
        out.push_back(finish(std::string("trend_sma_") + which, s, rolling_mean(s.c, w), uz(w - 1)));
    }
    for (const char* which : {"fast", "slow"}) {
        const int w = p.window(std::string("ema.") + which);
        out.push_back(finish(std::string("trend_ema_") + which, s, ema(s.c, w), uz(w - 1)));
    }
    for (const char* which : {"fast", "slow"}) {
        const int w = p.window(std::string("wma.") + which);
        const std::size_t wz = uz(w);
        Vec wma(n, kNaN);
        for (std::size_t i = wz - 1; i < n; ++i) {
            double acc = 0;
            for (std::size_t k = 0; k < wz; ++k) {
                const double weight = static_cast<double>(k + 1) * 2 / (static_cast<double>(w) * (w + 1));
                acc += weight * s.c[i + 1 - wz + k];
            }
            wma[i] = acc;
        }
        out.push_back(finish(std::string("trend_wma_") + which, s, wma, wz - 1));
    }

    const int wv = p.window("vortex.window");
    Vec tr = true_range(s), vmp(n, kNaN), vmm(n, kNaN);
    for (std::size_t i = 1; i < n; ++i) {
        vmp[i] = std::abs(s.h[i] - s.l[i - 1]);
        vmm[i] = std::abs(s.l[i] - s.h[i - 1]);
    }
    Vec trn = rolling_sum(tr, wv), vps = rolling_sum(vmp, wv), vns = rolling_sum(vmm, wv), vip(n), vin(n);
    for (std::size_t i = 0; i < n; ++i) {
        vip[i] = ratio_or(vps[i], trn[i], 0.0);
        vin[i] = ratio_or(vns[i], trn[i], 0.0);
    }
    out.push_back(finish("trend_vortex_ind_pos", s, vip, uz(wv)));
    out.push_back(finish("trend_vortex_ind_neg", s, vin, uz(wv)));
    out.push_back(finish("trend_vortex_ind_diff", s, zip(vip, vin, sub), uz(wv)));

    const int wt = p.window("trix.window");
    Vec e3 = ema(ema(ema(s.c, wt), wt), wt), trix(n, kNaN);
    for (std::size_t i = 1; i < n; ++i) trix[i] = (e3[i] - e3[i - 1]) / e3[i - 1] * 100.0;
    out.push_back(finish("trend_trix", s, trix, 3 * uz(wt - 1) + 1));

    const int mfast = p.window("mass.fast"), mslow = p.window("mass.slow");
    Vec amp(n);
    for (std::size_t i = 0; i < n; ++i) amp[i] = s.h[i] - s.l[i];
    Vec m1 = ema(amp, mfast), m2 = ema(m1, mfast), mratio(n);
    for (std::size_t i = 0; i < n; ++i) mratio[i] = ratio_or(m1[i], m2[i], 1.0);
    out.push_back(finish("trend_mass_index", s, rolling_sum(mratio, mslow), 2 * uz(mfast - 1) + uz(mslow - 1)));

    const int wd = p.window("dpo.window");
    const std::size_t dshift = uz(wd / 2 + 1);
    Vec dsma = rolling_mean(s.c, wd), dpo(n, kNaN);
    for (std::size_t i = dshift; i < n; ++i) dpo[i] = s.c[i - dshift] - dsma[i];
    out.push_back(finish("trend_dpo", s, dpo, std::max(dshift, uz(wd - 1))));

    Vec kst(n, 0.0);
    std::size_t vkst = 0;
    for (int k = 1; k <= 4; ++k) {
        const int r = p.window("kst.roc" + std::to_string(k));
        const int w = p.window("kst.window" + std::to_string(k));
        Vec roc(n, kNaN);
        for (std::size_t i = uz(r); i < n; ++i) roc[i] = (s.c[i] - s.c[i - uz(r)]) / s.c[i - uz(r)];
        Vec rm = rolling_mean(roc, w);
        for (std::size_t i = 0; i < n; ++i) kst[i] += k * rm[i];
        vkst = std::max(vkst, uz(r + w - 1));
    }
    for (auto& v : kst) v *= 100.0;
    const int wks = p.window("kst.signal");
    Vec kst_sig = rolling_mean(kst, wks);
    out.push_back(finish("trend_kst", s, kst, vkst));
    out.push_back(finish("trend_kst_sig", s, kst_sig, vkst + uz(wks - 1)));
    out.push_back(finish("trend_kst_diff", s, zip(kst, kst_sig, sub), vkst + uz(wks - 1)));

    const int w1 = p.window("ichimoku.window1"), w2 = p.window("ichimoku.window2"), w3 = p.window("ichimoku.window3");
    auto midpoint = [&](int w) {
        Vec hi = rolling_max(s.h, w), lo = rolling_min(s.l, w), m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = 0.5 * (hi[i] + lo[i]);
        return m;
    };
    Vec conv = midpoint(w1), base = midpoint(w2), span_b = midpoint(w3), span_a(n);
    for (std::size_t i = 0; i < n; ++i) span_a[i] = 0.5 * (conv[i] + base[i]);
    out.push_back(finish("trend_ichimoku_conv", s, conv, uz(w1 - 1)));
    out.push_back(finish("trend_ichimoku_base", s, base, uz(w2 - 1)));
    out.push_back(finish("trend_ichimoku_a", s, span_a, uz(std::max(w1, w2) - 1)));
    out.push_back(finish("trend_ichimoku_b", s, span_b, uz(w3 - 1)));

    // Schaff trend cycle: two stochastic passes over MACD; a flat window keeps
    // the previous reading.
    const int sf = p.window("stc.fast"), ss = p.window("stc.slow"), cyc = p.window("stc.cycle");
    const int sm1 = p.window("stc.smooth1"), sm2 = p.window("stc.smooth2");
    Vec smacd = zip(ema(s.c, sf), ema(s.c, ss), sub);
    Vec stoch_k = position_hold(smacd, rolling_min(smacd, cyc), rolling_max(smacd, cyc), 100.0, 50.0);
    Vec stoch_d = ema(stoch_k, sm1);
    Vec stoch_kd = position_hold(stoch_d, rolling_min(stoch_d, cyc), rolling_max(stoch_d, cyc), 100.0, 50.0);
    const std::size_t vstc = uz(std::max(sf, ss) - 1) + 2 * uz(cyc - 1) + uz(sm1 - 1) + uz(sm2 - 1);
    out.push_back(finish("trend_stc", s, ema(stoch_kd, sm2), vstc));

    // Wilder ADX. The smoothed sums start at bar w from the first w true
    // ranges after bar 0; ADX itself is seeded with the mean DX of w bars.
    const int wadx = p.window("adx.window");
    const std::size_t wz = uz(wadx);
    Vec adx(n, kNaN), dip(n, kNaN), din(n, kNaN);
    if (n > wz) {
        Vec trd(n, 0.0), pdm(n, 0.0), ndm(n, 0.0);
        for (std::size_t i = 1; i < n; ++i) {
            trd[i] = std::max(s.h[i], s.c[i - 1]) - std::min(s.l[i], s.c[i - 1]);
            const double upm = s.h[i] - s.h[i - 1];
            const double dnm = s.l[i - 1] - s.l[i];
            pdm[i] = (upm > dnm && upm > 0) ? upm : 0.0;
            ndm[i] = (dnm > upm && dnm > 0) ? dnm : 0.0;
        }
        double strs = 0, sp = 0, sn = 0;
        Vec dx(n, kNaN);
        for (std::size_t i = wz; i < n; ++i) {
            if (i == wz) {
                for (std::size_t j = 1; j <= wz; ++j) {
                    strs += trd[j];
                    sp += pdm[j];
                    sn += ndm[j];
                }
            } else {
                strs = strs - strs / wadx + trd[i];
                sp = sp - sp / wadx + pdm[i];
                sn = sn - sn / wadx + ndm[i];
            }
            dip[i] = strs != 0 ? 100.0 * (sp / strs) : 0.0;
            din[i] = strs != 0 ? 100.0 * (sn / strs) : 0.0;
            dx[i] = (dip[i] + din[i]) != 0 ? 100.0 * std::abs((dip[i] - din[i]) / (dip[i] + din[i])) : 0.0;
        }
        const std::size_t first = 2 * wz - 1;
        if (n > first) {
            double seed = 0;
            for (std::size_t j = wz; j <= first; ++j) seed += dx[j];
            adx[first] = seed / wadx;
            for (std::size_t i = first + 1; i < n; ++i) adx[i] = (adx[i - 1] * (wadx - 1) + dx[i]) / wadx;
        }
    }
    out.push_back(finish("trend_adx", s, adx, 2 * wz - 1));
    out.push_back(finish("trend_adx_pos", s, dip, wz + 1));
    out.push_back(finish("trend_adx_neg", s, din, wz + 1));

    const int wcci = p.window("cci.window");
    const double cconst = p.real("cci.constant");
    Vec tp = typical_price(s), tpm = rolling_mean(tp, wcci), cci(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(tpm[i])) continue;
        double mad = 0;
        for (std::size_t j = i + 1 - uz(wcci); j <= i; ++j) mad += std::abs(tp[j] - tpm[i]);
        mad /= wcci;
        cci[i] = mad == 0 ? 0.0 : (tp[i] - tpm[i]) / (cconst * mad);
    }
    out.push_back(finish("trend_cci", s, cci, uz(wcci - 1)));

    // Parabolic SAR, starting in an up trend at the third bar. The inactive
    // side of the pair reads 0.
    const double step = p.real("psar.step"), max_step = p.real("psar.max_step");
    Vec psar_up(n, kNaN), psar_down(n, kNaN);
    if (n > 0) {
        Vec psar = s.c;
        bool up_trend = true;
        double af = step;
        double up_high = s.h[0];
        double down_low = s.l[0];
        for (std::size_t i = 2; i < n; ++i) {
            bool reversal = false;
            const double max_high = s.h[i];
            const double min_low = s.l[i];
            if (up_trend) {
                psar[i] = psar[i - 1] + af * (up_high - psar[i - 1]);
                if (min_low < psar[i]) {
                    reversal = true;
                    psar[i] = up_high;
                    down_low = min_low;
                    af = step;
                } else {
                    if (max_high > up_high) {
                        up_high = max_high;
                        af = std::min(af + step, max_step);
                    }
                    if (s.l[i - 2] < psar[i]) psar[i] = s.l[i - 2];
                    else if (s.l[i - 1] < psar[i]) psar[i] = s.l[i - 1];
                }
            } else {
                psar[i] = psar[i - 1] - af * (psar[i - 1] - down_low);
                if (max_high > psar[i]) {
                    reversal = true;
                    psar[i] = down_low;
                    up_high = max_high;
                    af = step;
                } else {
                    if (min_low < down_low) {
                        down_low = min_low;
                        af = std::min(af + step, max_step);
                    }
                    if (s.h[i - 2] > psar[i]) psar[i] = s.h[i - 2];
                    else if (s.h[i - 1] > psar[i]) psar[i] = s.h[i - 1];
                }
            }
            up_trend = up_trend != reversal;
            psar_up[i] = up_trend ? psar[i] : 0.0;
            psar_down[i] = up_trend ? 0.0 : psar[i];
        }
    }
    out.push_back(finish("trend_psar_up", s, psar_up, 2));
    out.push_back(finish("trend_psar_down", s, psar_down, 2));
    return out;
}

// --------------------------------------------------------------- momentum

namespace {

Vec wilder_rsi(const Vec& c, int w) {
    const std::size_t n = c.size();
    // Bar 0 enters the averages as a zero move.
    Vec up(n, 0.0), dn(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double d = c[i] - c[i - 1];
        up[i] = d > 0 ? d : 0.0;
        dn[i] = d < 0 ? -d : 0.0;
    }
    Vec au = ewm_alpha(up, 1.0 / w, w), ad = ewm_alpha(dn, 1.0 / w, w), rsi(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(ad[i])) continue;
        rsi[i] = ad[i] == 0 ? 100.0 : 100.0 - 100.0 / (1.0 + au[i] / ad[i]);
    }
    return rsi;
}

}  // namespace

std::vector<IndicatorColumn> compute_momentum_indicators(const PriceSeries& series, const IndicatorParams& p) {
    Ohlcv s(series);
    const std::size_t n = s.n;
    std::vector<IndicatorColumn> out;

    const int wr = p.window("rsi.window");
    out.push_back(finish("momentum_rsi", s, wilder_rsi(s.c, wr), uz(wr - 1)));

    const int wsr = p.window("stoch_rsi.window"), k1 = p.window("stoch_rsi.smooth1"), k2 = p.window("stoch_rsi.smooth2");
    Vec rsi2 = wilder_rsi(s.c, wsr);
    Vec srsi = position(rsi2, rolling_min(rsi2, wsr), rolling_max(rsi2, wsr), 1.0, 0.5);
    Vec srsi_k = rolling_mean(srsi, k1);
    Vec srsi_d = rolling_mean(srsi_k, k2);
    const std::size_t vsr = 2 * uz(wsr - 1);
    out.push_back(finish("momentum_stoch_rsi", s, srsi, vsr));
    out.push_back(finish("momentum_stoch_rsi_k", s, srsi_k, vsr + uz(k1 - 1)));
    out.push_back(finish("momentum_stoch_rsi_d", s, srsi_d, vsr + uz(k1 - 1) + uz(k2 - 1)));

    const int tslow = p.window("tsi.slow"), tfast = p.window("tsi.fast");
    Vec d(n, kNaN), ad(n, kNaN);
    for (std::size_t i = 1; i < n; ++i) {
        d[i] = s.c[i] - s.c[i - 1];
        ad[i] = std::abs(d[i]);
    }
    Vec num = ema(ema(d, tslow), tfast), den = ema(ema(ad, tslow), tfast), tsi(n);
    for (std::size_t i = 0; i < n; ++i) tsi[i] = 100.0 * ratio_or(num[i], den[i], 0.0);
    out.push_back(finish("momentum_tsi", s, tsi, uz(tslow) + uz(tfast - 1)));

    const int u1 = p.window("uo.window1"), u2 = p.window("uo.window2"), u3 = p.window("uo.window3");
    const double g1 = p.real("uo.weight1"), g2 = p.real("uo.weight2"), g3 = p.real("uo.weight3");
    Vec tr = true_range(s), bp(n, kNaN);
    for (std::size_t i = 1; i < n; ++i) bp[i] = s.c[i] - std::min(s.l[i], s.c[i - 1]);
    auto avg = [&](int w) {
        Vec b = rolling_sum(bp, w), t = rolling_sum(tr, w), a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = ratio_or(b[i], t[i], 0.5);
        return a;
    };
    Vec a1 = avg(u1), a2 = avg(u2), a3 = avg(u3), uo(n);
    for (std::size_t i = 0; i < n; ++i) uo[i] = 100.0 * (g1 * a1[i] + g2 * a2[i] + g3 * a3[i]) / (g1 + g2 + g3);
    out.push_back(finish("momentum_uo", s, uo, uz(std::max({u1, u2, u3}))));

    const int wst = p.window("stoch.window"), wsm = p.window("stoch.smooth");
    Vec lo = rolling_min(s.l, wst), hi = rolling_max(s.h, wst);
    Vec stoch = position(s.c, lo, hi, 100.0, 50.0);
    out.push_back(finish("momentum_stoch", s, stoch, uz(wst - 1)));
    out.push_back(finish("momentum_stoch_signal", s, rolling_mean(stoch, wsm), uz(wst - 1) + uz(wsm - 1)));

    const int wwr = p.window("wr.window");
    Vec wlo = rolling_min(s.l, wwr), whi = rolling_max(s.h, wwr), will(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(whi[i])) continue;
        will[i] = whi[i] == wlo[i] ? -50.0 : -100.0 * (whi[i] - s.c[i]) / (whi[i] - wlo[i]);
    }
    out.push_back(finish("momentum_wr", s, will, uz(wwr - 1)));

    const int af = p.window("ao.fast"), as = p.window("ao.slow");
    Vec mp(n);
    for (std::size_t i = 0; i < n; ++i) mp[i] = 0.5 * (s.h[i] + s.l[i]);
    out.push_back(finish("momentum_ao", s, zip(rolling_mean(mp, af), rolling_mean(mp, as), sub),
                         uz(std::max(af, as) - 1)));

    const int wroc = p.window("roc.window");
    Vec roc(n, kNaN);
    for (std::size_t i = uz(wroc); i < n; ++i) roc[i] = (s.c[i] - s.c[i - uz(wroc)]) / s.c[i - uz(wroc)] * 100.0;
    out.push_back(finish("momentum_roc", s, roc, uz(wroc)));

    for (const char* which : {"ppo", "pvo"}) {
        const std::string key(which);
        const Vec& x = key == "ppo" ? s.c : s.v;
        const int f = p.window(key + ".fast"), sl = p.window(key + ".slow"), sg = p.window(key + ".signal");
        Vec ef = ema(x, f), es = ema(x, sl), line(n);
        for (std::size_t i = 0; i < n; ++i) line[i] = 100.0 * ratio_or(ef[i] - es[i], es[i], 0.0);
        Vec sig = ema(line, sg);
        const std::size_t v0 = uz(std::max(f, sl) - 1);
        out.push_back(finish("momentum_" + key, s, line, v0));
        out.push_back(finish("momentum_" + key + "_signal", s, sig, v0 + uz(sg - 1)));
        out.push_back(finish("momentum_" + key + "_hist", s, zip(line, sig, sub), v0 + uz(sg - 1)));
    }

    // Kaufman adaptive MA, seeded with the close at the end of the first window.
    const int wk = p.window("kama.window");
    const double fast_sc = 2.0 / (p.real("kama.pow1") + 1.0), slow_sc = 2.0 / (p.real("kama.pow2") + 1.0);
    const std::size_t wkz = uz(wk);
    Vec kama(n, kNaN);
    if (n >= wkz) {
        kama[wkz - 1] = s.c[wkz - 1];
        for (std::size_t i = wkz; i < n; ++i) {
            double vol = 0;
            for (std::size_t j = i + 1 - wkz; j <= i; ++j) vol += std::abs(s.c[j] - s.c[j - 1]);
            const double change = std::abs(s.c[i] - s.c[i - wkz]);
            const double er = vol != 0 ? change / vol : 0.0;
            const double base = er * (fast_sc - slow_sc) + slow_sc;
            const double sc = base * base;
            kama[i] = kama[i - 1] + sc * (s.c[i] - kama[i - 1]);
        }
    }
    out.push_back(finish("momentum_kama", s, kama, wkz - 1));
    return out;
}

std::vector<IndicatorColumn> compute_technicals(const PriceSeries& series, const IndicatorParams& params) {
    std::vector<IndicatorColumn> all;
    for (auto* family : {&compute_volume_indicators, &compute_volatility_indicators, &compute_trend_indicators,
                         &compute_momentum_indicators}) {
        auto cols = family(series, params);
        for (auto& c : cols) all.push_back(std::move(c));
    }
    const auto& inv = technical_inventory();
    if (all.size() != inv.size()) fail(ErrorKind::Spec, "technical column count differs from the inventory");
    for (std::size_t i = 0; i < inv.size(); ++i) {
        if (all[i].name != inv[i].name) fail(ErrorKind::Spec, "technical column order differs at " + inv[i].name);
    }
    return all;
}

}  // namespace sentitrade::indicators
