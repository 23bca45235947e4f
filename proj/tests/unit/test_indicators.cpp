#include <doctest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "sentitrade/indicators.hpp"

using namespace sentitrade;
using th::day;

namespace {

const IndicatorColumn& find(const std::vector<IndicatorColumn>& cols, const std::string& name) {
    for (const auto& c : cols) {
        if (c.name == name) return c;
    }
    FAIL("no column " << name);
    throw;
}

std::vector<IndicatorColumn> everything(const PriceSeries& s, const PriceSeries& other) {
    auto cols = indicators::compute_technicals(s);
    auto lag = indicators::compute_lagged_technicals(s, other);
    cols.insert(cols.end(), lag.begin(), lag.end());
    return cols;
}

PriceSeries scaled(PriceSeries s, double lambda) {
    for (auto& b : s.bars) {
        b.open *= lambda;
        b.high *= lambda;
        b.low *= lambda;
        b.close *= lambda;
        b.adj_close *= lambda;
    }
    return s;
}

PriceSeries from_closes(const std::vector<double>& closes, double spread = 0) {
    PriceSeries s;
    for (std::size_t i = 0; i < closes.size(); ++i) {
        PriceBar b;
        b.date = day(2021, 1, 1) + std::chrono::days{static_cast<int>(i)};
        b.open = b.close = b.adj_close = closes[i];
        b.high = closes[i] + spread;
        b.low = closes[i] - spread;
        b.volume = 100;
        s.bars.push_back(b);
    }
    return s;
}

}  // namespace

TEST_CASE("inventory sizes") {
    CHECK(indicators::technical_inventory().size() == 78);
    CHECK(indicators::lagged_inventory().size() == 10);
    auto s = th::random_walk(150, 1);
    CHECK(indicators::compute_technicals(s).size() == 78);
    CHECK(indicators::compute_lagged_technicals(s, th::random_walk(150, 2)).size() == 10);
    std::set<std::string> names;
    for (const auto& c : everything(s, th::random_walk(150, 2))) names.insert(c.name);
    CHECK(names.size() == 88);
}

TEST_CASE("golden fixture") {
    const auto dir = th::source_dir() / "tests" / "golden";
    auto btc = ingest::load_price_series(dir / "fixture_btc.csv");
    auto eth = ingest::load_price_series(dir / "fixture_eth.csv");
    auto golden = read_csv(dir / "golden_btc.csv");
    REQUIRE(btc.size() == 120);
    std::size_t compared = 0;
    for (const auto& col : everything(btc, eth)) {
        INFO(col.name);
        REQUIRE(golden.has_column(col.name));
        const std::size_t j = golden.column(col.name);
        for (std::size_t i = col.valid_from; i < col.values.size(); ++i) {
            double expect = 0;
            REQUIRE(parse_double(golden.rows[i][j], expect));
            REQUIRE(std::isfinite(expect));
            const double err = std::abs(col.values[i] - expect) / std::max(std::abs(expect), 1e-9);
            CHECK(err <= 1e-6);
            ++compared;
        }
    }
    CHECK(compared > 88 * 40);
}

TEST_CASE("declared scale class holds") {
    auto s = th::random_walk(160, 4, 30000);
    auto o = th::random_walk(160, 5, 1200);
    auto base = everything(s, o);
    for (double lambda : {0.5, 2.0, 10.0}) {
        auto moved = everything(scaled(s, lambda), o);
        for (std::size_t c = 0; c < base.size(); ++c) {
            const auto& a = base[c];
            const auto& b = moved[c];
            INFO(a.name << " lambda " << lambda);
            REQUIRE(a.valid_from == b.valid_from);
            const double f = a.scale == ScaleClass::Invariant ? 1 : a.scale == ScaleClass::Linear ? lambda : lambda * lambda;
            double worst = 0;
            for (std::size_t i = a.valid_from; i < a.values.size(); ++i) {
                const double expect = f * a.values[i];
                worst = std::max(worst, std::abs(b.values[i] - expect) / std::max(std::abs(expect), 1e-6));
            }
            CHECK(worst <= 1e-7);
        }
    }
}

TEST_CASE("appending a bar never changes earlier values") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto full = th::random_walk(140, seed);
        auto other = th::random_walk(140, seed + 100);
        auto shorter = full;
        shorter.bars.pop_back();
        auto other_short = other;
        other_short.bars.pop_back();
        auto a = everything(shorter, other_short);
        auto b = everything(full, other);
        for (std::size_t c = 0; c < a.size(); ++c) {
            INFO(a[c].name);
            CHECK(a[c].valid_from == b[c].valid_from);
            for (std::size_t i = a[c].valid_from; i < a[c].values.size(); ++i) {
                CHECK(a[c].values[i] == b[c].values[i]);
            }
        }
    }
}

TEST_CASE("every valid value is finite") {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        for (const auto& c : everything(th::random_walk(130, seed), th::random_walk(130, seed * 7))) {
            INFO(c.name);
            REQUIRE(c.valid_from < c.values.size());
            for (std::size_t i = 0; i < c.values.size(); ++i) {
                if (i < c.valid_from) CHECK(std::isnan(c.values[i]));
                else CHECK(std::isfinite(c.values[i]));
            }
        }
    }
}

TEST_CASE("building blocks") {
    auto m = indicators::detail::rolling_mean({1, 2, 3, 4}, 3);
    CHECK(std::isnan(m[1]));
    CHECK(m[2] == 2);
    CHECK(m[3] == 3);
    auto e = indicators::detail::ema(std::vector<double>(30, 7.5), 12);
    for (std::size_t i = 11; i < e.size(); ++i) CHECK(e[i] == doctest::Approx(7.5));
    auto mx = indicators::detail::rolling_max({3, 1, 4, 1, 5}, 2);
    CHECK(mx[4] == 5);
    CHECK(mx[3] == 4);
}

TEST_CASE("spec examples on degenerate series") {
    std::vector<double> rising(80), flat(80, 50);
    for (std::size_t i = 0; i < rising.size(); ++i) rising[i] = 100 + i;
    auto up = indicators::compute_technicals(from_closes(rising, 0.5));
    auto fl = indicators::compute_technicals(from_closes(flat));

    const auto& rsi = find(up, "momentum_rsi");
    CHECK(rsi.values.back() == doctest::Approx(100));
    const auto& ui = find(up, "volatility_ui");
    CHECK(ui.values.back() == doctest::Approx(0));
    const auto& mfi = find(up, "volume_mfi");
    CHECK(mfi.values.back() == doctest::Approx(100));

    CHECK(find(fl, "volatility_atr").values.back() == doctest::Approx(0));
    CHECK(find(fl, "volatility_bbh").values.back() == doctest::Approx(50));
    CHECK(find(fl, "volatility_bbl").values.back() == doctest::Approx(50));
    CHECK(find(fl, "trend_macd").values.back() == doctest::Approx(0));
    CHECK(find(fl, "trend_ema_fast").values.back() == doctest::Approx(50));
    const auto& obv = find(fl, "volume_obv");
    for (std::size_t i = obv.valid_from + 1; i < obv.values.size(); ++i) CHECK(obv.values[i] == obv.values[i - 1]);

    // close at the period high gives %R = 0, at the low -100
    auto wr_hi = find(indicators::compute_technicals(from_closes(rising)), "momentum_wr");
    CHECK(wr_hi.values.back() == doctest::Approx(0));
    std::vector<double> falling(rising.rbegin(), rising.rend());
    auto wr_lo = find(indicators::compute_technicals(from_closes(falling)), "momentum_wr");
    CHECK(wr_lo.values.back() == doctest::Approx(-100));

    auto s = th::random_walk(60, 3);
    auto dc = find(indicators::compute_technicals(s), "volatility_dch");
    double hmax = 0;
    for (std::size_t i = 40; i < 60; ++i) hmax = std::max(hmax, s.bars[i].high);
    CHECK(dc.values.back() == hmax);
}

TEST_CASE("lagged technical examples") {
    auto s = th::random_walk(40, 8);
    for (auto& b : s.bars) {
        b.open = b.close;
        b.high = b.low = b.close;
    }
    s.bars[20].high = s.bars[20].close * std::exp(1.0);
    auto cols = indicators::compute_lagged_technicals(s, th::random_walk(40, 9));
    for (double v : find(cols, "close_open_return").values) CHECK(v == 0);
    const auto& pk = find(cols, "parkinson");
    CHECK(pk.values[5] == 0);
    CHECK(pk.values[20] == doctest::Approx(1 / (2 * std::sqrt(std::log(2.0)))));
    CHECK(pk.values[20] == doctest::Approx(0.6006).epsilon(1e-4));
}

TEST_CASE("indicator parameters") {
    auto p = indicators::IndicatorParams::defaults();
    CHECK(p.window("rsi.window") == 14);
    CHECK(th::error_kind([&] { p.override_with({{"nope.window", 3}}); }) == "configuration");
    p.override_with({{"rsi.window", 7}});
    CHECK(p.window("rsi.window") == 7);
    auto doc = nlohmann::json::parse(indicators::inventory_json());
    CHECK(doc.dump().find("momentum_rsi") != std::string::npos);
}
