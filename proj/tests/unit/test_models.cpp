#include <doctest.h>

#include "helpers.hpp"
#include "sentitrade/models.hpp"

using namespace sentitrade;
namespace md = sentitrade::models;

namespace {

FeatureMatrix make(const std::vector<std::vector<double>>& rows, const std::vector<double>& y) {
    FeatureMatrix m;
    for (std::size_t i = 0; i < rows.size(); ++i) m.dates.push_back(th::day(2021, 1, 1) + std::chrono::days{static_cast<int>(i)});
    for (std::size_t j = 0; j < rows[0].size(); ++j) {
        std::vector<double> col;
        for (const auto& r : rows) col.push_back(r[j]);
        m.add_column("f" + std::to_string(j), ColumnKind::Continuous, col);
    }
    m.target = y;
    return m;
}

FeatureMatrix noisy_linear(std::uint64_t seed, std::size_t n, std::size_t p, double noise) {
    Rng rng(seed);
    std::vector<double> w(p);
    for (auto& v : w) v = rng.normal();
    std::vector<std::vector<double>> x(n, std::vector<double>(p));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.1;
        for (std::size_t j = 0; j < p; ++j) {
            x[i][j] = rng.normal();
            s += w[j] * x[i][j];
        }
        y[i] = s + noise * rng.normal();
    }
    return make(x, y);
}

ModelSpec spec(ModelKind kind, Task task, Grid grid = {}) {
    ModelSpec s;
    s.name = "m";
    s.kind = kind;
    s.task = task;
    s.grid = std::move(grid);
    s.seed = 3;
    return s;
}

std::vector<std::vector<double>> rows(const FeatureMatrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t r = 0; r < m.rows(); ++r) out.push_back(m.row(r));
    return out;
}

double ridge_loss(const std::vector<std::vector<double>>& x, const std::vector<double>& y, const std::vector<double>& w,
                  double b, double alpha) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double f = b;
        for (std::size_t j = 0; j < w.size(); ++j) f += w[j] * x[i][j];
        s += (y[i] - f) * (y[i] - f);
    }
    for (double v : w) s += alpha * v * v;
    return s;
}

}  // namespace

TEST_CASE("ridge closed form") {
    auto f = md::detail::fit_ridge({{1}, {2}}, {1, 2}, 1, false);
    CHECK(f.w[0] == doctest::Approx(5.0 / 6));
    CHECK(f.b == 0);
    auto exact = md::detail::fit_ridge({{1, 0}, {0, 1}, {1, 1}}, {2, 3, 6}, 0, true);
    CHECK(exact.w[0] == doctest::Approx(3));
    CHECK(exact.w[1] == doctest::Approx(4));
    CHECK(exact.b == doctest::Approx(-1));
    auto m = noisy_linear(4, 60, 3, 0.1);
    auto big = md::detail::fit_ridge(rows(m), m.target, 1e9, true);
    for (double v : big.w) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("ridge zeroes the penalised gradient") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto m = noisy_linear(seed, 25, 4, 0.5);
        const auto x = rows(m);
        const double alpha = 0.5 * static_cast<double>(seed);
        auto f = md::detail::fit_ridge(x, m.target, alpha, true);
        const double h = 1e-5;
        for (std::size_t j = 0; j <= f.w.size(); ++j) {
            auto wp = f.w, wm = f.w;
            double bp = f.b, bm = f.b;
            if (j < f.w.size()) {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            const double g = (ridge_loss(x, m.target, wp, bp, alpha) - ridge_loss(x, m.target, wm, bm, alpha)) / (2 * h);
            CHECK(std::abs(g) < 1e-8 * std::max(1.0, ridge_loss(x, m.target, f.w, f.b, alpha)));
        }
    }
}

TEST_CASE("logistic loss never increases") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto m = noisy_linear(seed, 80, 3, 1.0);
        std::vector<double> y;
        for (double v : m.target) y.push_back(v > 0 ? 1 : -1);
        auto f = md::detail::fit_logistic(rows(m), y, 0.5 + static_cast<double>(seed));
        REQUIRE(f.loss_trace.size() >= 2);
        for (std::size_t i = 1; i < f.loss_trace.size(); ++i) CHECK(f.loss_trace[i] <= f.loss_trace[i - 1]);
    }
}

TEST_CASE("perceptron separates a separable set") {
    std::vector<std::vector<double>> x;
    std::vector<double> y;
    Rng rng(8);
    for (int i = 0; i < 60; ++i) {
        double a = rng.normal(), b = rng.normal();
        if (std::abs(a + b) < 0.2) continue;
        x.push_back({a, b});
        y.push_back(a + b > 0 ? 0.01 : -0.01);
    }
    auto m = make(x, y);
    auto model = md::fit(spec(ModelKind::Perceptron, Task::Classification), m, {{"max_iter", 200}});
    auto pred = md::predict(model, m);
    CHECK(md::accuracy(md::direction(pred), md::direction(m.target)) == 1.0);
}

TEST_CASE("decision tree") {
    auto m = noisy_linear(12, 120, 3, 0.5);
    auto stump = md::fit(spec(ModelKind::DecisionTree, Task::Regression), m, {{"max_depth", 0}});
    double mean = 0;
    for (double v : m.target) mean += v / static_cast<double>(m.rows());
    for (double v : md::predict(stump, m)) CHECK(v == doctest::Approx(mean));

    double prev_acc = 0, prev_sse = 1e300;
    for (int d = 0; d <= 5; ++d) {
        auto c = md::fit(spec(ModelKind::DecisionTree, Task::Classification), m, {{"max_depth", d}});
        const double acc = md::accuracy(md::direction(md::predict(c, m)), md::direction(m.target));
        CHECK(acc >= prev_acc);
        prev_acc = acc;
        auto r = md::fit(spec(ModelKind::DecisionTree, Task::Regression), m, {{"max_depth", d}});
        auto p = md::predict(r, m);
        double sse = 0;
        for (std::size_t i = 0; i < p.size(); ++i) sse += (p[i] - m.target[i]) * (p[i] - m.target[i]);
        CHECK(sse <= prev_sse + 1e-9);
        prev_sse = sse;
    }
}

TEST_CASE("voting averages members") {
    // members predict 2 (depth-0 tree: the mean) and ~0 (shrunk ridge, no intercept)
    auto m = make({{0}, {1}, {2}, {3}}, {2, 2, 2, 2});
    auto v = spec(ModelKind::Voting, Task::Regression);
    auto a = spec(ModelKind::DecisionTree, Task::Regression, {{"max_depth", {0}}});
    auto b = spec(ModelKind::Ridge, Task::Regression, {{"alpha", {1e15}}, {"fit_intercept", {0}}});
    a.name = "a";
    b.name = "b";
    v.members = {a, b};
    CHECK(md::predict(md::fit(a, m), m)[0] == doctest::Approx(2));
    CHECK(std::abs(md::predict(md::fit(b, m, {{"alpha", 1e15}, {"fit_intercept", 0}}), m)[0]) < 1e-9);
    for (double p : md::predict(md::fit(v, m), m)) CHECK(p == doctest::Approx(1.0));
}

TEST_CASE("stacking and classification ensembles run") {
    auto m = noisy_linear(31, 100, 3, 0.3);
    auto a = spec(ModelKind::Ridge, Task::Classification, {{"alpha", {1}}});
    auto b = spec(ModelKind::DecisionTree, Task::Classification, {{"max_depth", {2}}});
    auto l = spec(ModelKind::Logistic, Task::Classification, {{"C", {1}}});
    a.name = "a";
    b.name = "b";
    l.name = "l";
    for (auto kind : {ModelKind::Voting, ModelKind::Stacking}) {
        auto e = spec(kind, Task::Classification);
        e.members = {a, b, l};
        auto model = md::fit(e, m);
        for (double p : md::predict(model, m)) CHECK((p == 1 || p == -1));
        CHECK(md::accuracy(md::direction(md::predict(model, m)), md::direction(m.target)) > 0.7);
    }
}

TEST_CASE("external model over the protocol") {
    auto m = noisy_linear(2, 30, 2, 0.1);
    auto e = spec(ModelKind::External, Task::Regression);
    e.command = {SENTITRADE_STUB_MODEL};
    auto model = md::fit(e, m);
    auto p = md::predict(model, m);
    CHECK(p == m.target);  // nearest neighbour of a training row is itself
    e.command = {SENTITRADE_STUB_MODEL, "drop"};
    auto broken = md::fit(e, m);
    CHECK(th::error_kind([&] { md::predict(broken, m); }) == "correlation");
}

TEST_CASE("direction and scores") {
    CHECK(md::direction({0.02, -0.01, 0.0}) == std::vector<Direction>{Direction::Up, Direction::Down, Direction::Down});
    using D = Direction;
    std::vector<D> gold{D::Up, D::Up, D::Down, D::Down};
    CHECK(md::balanced_accuracy(gold, gold) == 1);
    CHECK(md::balanced_accuracy({D::Up, D::Up, D::Up, D::Up}, gold) == 0.5);
    std::vector<D> g10, p10;
    for (int i = 0; i < 5; ++i) {
        g10.push_back(D::Up);
        p10.push_back(i < 4 ? D::Up : D::Down);
    }
    for (int i = 0; i < 5; ++i) {
        g10.push_back(D::Down);
        p10.push_back(i < 3 ? D::Down : D::Up);
    }
    CHECK(md::balanced_accuracy(p10, g10) == doctest::Approx(0.7));
    CHECK(th::error_kind([] { md::balanced_accuracy({D::Up}, {D::Up}); }) == "undefined-class");
}

TEST_CASE("grid expansion") {
    auto g = md::expand_grid({{"a", {1, 2}}, {"b", {10, 20, 30}}});
    REQUIRE(g.size() == 6);
    CHECK(g[0] == Hyper{{"a", 1}, {"b", 10}});
    CHECK(g[1] == Hyper{{"a", 1}, {"b", 20}});
    CHECK(g[5] == Hyper{{"a", 2}, {"b", 30}});
    CHECK(md::expand_grid({}).size() == 1);
}

TEST_CASE("stratified folds keep class shares") {
    Rng rng(4);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 20 + rng.below(80);
        std::vector<Direction> cls(n);
        for (auto& c : cls) c = rng.uniform() < 0.35 ? Direction::Up : Direction::Down;
        const int k = 5;
        if (std::count(cls.begin(), cls.end(), Direction::Up) < k ||
            std::count(cls.begin(), cls.end(), Direction::Down) < k) {
            continue;
        }
        auto folds = md::stratified_folds(cls, k, rep);
        for (int f = 0; f < k; ++f) {
            for (auto c : {Direction::Up, Direction::Down}) {
                double in_fold = 0, total = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (cls[i] == c) {
                        ++total;
                        in_fold += folds[i] == f;
                    }
                }
                CHECK(std::abs(in_fold - total / k) < 1.0);
            }
        }
    }
    CHECK(th::error_kind([] { md::stratified_folds({Direction::Up, Direction::Down, Direction::Up}, 2, 1); }) == "fold");
}

TEST_CASE("cv_tune") {
    auto m = noisy_linear(6, 90, 3, 0.5);
    auto s = spec(ModelKind::Ridge, Task::Regression, {{"alpha", {0.1, 1, 10}}});
    auto r = md::cv_tune(s, m, 5, 3, 9);
    REQUIRE(r.candidates.size() == 3);
    for (const auto& sc : r.scores) CHECK(sc.size() == 15);
    auto again = md::cv_tune(s, m, 5, 3, 9);
    CHECK(again.scores == r.scores);
    CHECK(again.winner == r.winner);
    for (std::size_t i = 0; i < r.mean.size(); ++i) CHECK(r.mean[r.winner] >= r.mean[i]);
    auto one = md::cv_tune(spec(ModelKind::Ridge, Task::Regression, {{"alpha", {2}}}), m, 5, 3, 9);
    CHECK(one.winner == 0);
}

TEST_CASE("fitting is deterministic and persists") {
    auto m = noisy_linear(13, 70, 3, 0.5);
    for (auto kind : {ModelKind::Ridge, ModelKind::Logistic, ModelKind::Perceptron, ModelKind::DecisionTree}) {
        auto s = spec(kind, Task::Classification);
        auto a = md::fit(s, m);
        auto b = md::fit(s, m);
        CHECK(a.params.dump() == b.params.dump());
        auto dir = th::scratch("model");
        md::save_model(a, dir / "m.json");
        auto back = md::load_model(dir / "m.json");
        CHECK(md::predict(back, m) == md::predict(a, m));
    }
    auto model = md::fit(spec(ModelKind::Ridge, Task::Regression), m);
    CHECK(th::error_kind([&] { md::predict(model, m.select_columns({"f1", "f0", "f2"})); }) == "schema");
}

TEST_CASE("spec parsing") {
    auto j = nlohmann::json::parse(R"({"name":"v","kind":"voting-ensemble","task":"regression",
        "members":[{"name":"a","kind":"ridge","task":"regression"}]})");
    CHECK(th::error_kind([&] { ModelSpec::from_json(j); }) == "spec");
    auto ok = ModelSpec::from_json(nlohmann::json::parse(R"({"name":"r","kind":"ridge","task":"regression","grid":{"alpha":[1,2]}})"));
    CHECK(ok.grid.at("alpha").size() == 2);
    CHECK(ModelSpec::from_json(ok.to_json()).to_json() == ok.to_json());
    CHECK(th::error_kind([] { ModelSpec::from_json(nlohmann::json::parse(R"({"name":"r","kind":"svm","task":"regression"})")); }) == "spec");
}
