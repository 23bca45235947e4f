#include <doctest.h>

#include "helpers.hpp"
#include "sentitrade/hash.hpp"
#include "sentitrade/stats.hpp"

using namespace sentitrade;

TEST_CASE("format_double round-trips") {
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const double v = (rng.uniform() - 0.5) * std::pow(10.0, static_cast<int>(rng.below(40)) - 20);
        double back = 0;
        REQUIRE(parse_double(format_double(v), back));
        CHECK(back == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1000) == "1000");
}

TEST_CASE("parse_double rejects trailing garbage") {
    double v = 0;
    CHECK_FALSE(parse_double("1.5x", v));
    CHECK_FALSE(parse_double("", v));
    CHECK(parse_double("-2.5e3", v));
    CHECK(v == -2500);
}

TEST_CASE("dates and timestamps") {
    CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");
    CHECK(th::error_kind([] { parse_date("2021-02-30"); }) == "format");
    CHECK(th::error_kind([] { parse_date("2021/01/01"); }) == "format");
    CHECK(weekday_index(parse_date("2021-01-04")) == 0);
    CHECK(weekday_index(parse_date("2021-01-03")) == 6);
    CHECK(days_between_inclusive(parse_date("2021-01-01"), parse_date("2021-01-31")) == 31);
    // Offsets normalise to UTC and can move a post to another day.
    const auto ts = parse_timestamp("2021-03-01T01:30:00+02:00");
    CHECK(format_date(day_of(ts)) == "2021-02-28");
    CHECK(th::error_kind([] { parse_timestamp("2021-03-01T01:30:00"); }) == "format");
}

TEST_CASE("rng is reproducible and derive_seed separates streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    Rng r(9);
    for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
    std::vector<int> v{1, 2, 3, 4, 5, 6};
    r.shuffle(v);
    std::sort(v.begin(), v.end());
    CHECK(v == std::vector<int>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("csv reader") {
    auto dir = th::scratch("csv");
    write_text_file(dir / "a.csv", "x,y\n1,2\n\n3,4\n");
    auto t = read_csv(dir / "a.csv");
    CHECK(t.header == std::vector<std::string>{"x", "y"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.line_numbers[1] == 4);
    CHECK(t.column("y") == 1);
    CHECK(th::error_kind([&] { t.column("z"); }) == "name");
    CHECK(th::error_kind([&] { read_csv(dir / "missing.csv"); }) == "io");
}

TEST_CASE("sha256 known vector") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("one-sample t-test") {
    auto t = stats::one_sample_t({0.1, 0.2, 0.3});
    CHECK(t.t == doctest::Approx(2 * std::sqrt(3.0)).epsilon(1e-12));
    // Two-tailed p for t = 2*sqrt(3) with 2 df, from the closed form 1 - t/sqrt(t^2+2).
    const double closed = 1 - t.t / std::sqrt(t.t * t.t + 2);
    CHECK(t.p == doctest::Approx(closed).epsilon(1e-10));
    auto z = stats::one_sample_t({0.0, 0.0, 0.0});
    CHECK(z.t == 0);
    CHECK(z.p == 1);
    auto c = stats::one_sample_t({0.5, 0.5});
    CHECK(std::isinf(c.t));
    CHECK(c.p == 0);
    CHECK(th::error_kind([] { stats::one_sample_t({1.0}); }) == "insufficient-data");
}
