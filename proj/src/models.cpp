#include "sentitrade/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "sentitrade/error.hpp"
#include "sentitrade/process.hpp"
#include "sentitrade/util.hpp"

namespace sentitrade {

using json = nlohmann::json;

namespace {

constexpr std::array<std::pair<ModelKind, const char*>, 7> kKindNames{{
    {ModelKind::Ridge, "ridge"},
    {ModelKind::Logistic, "logistic"},
    {ModelKind::Perceptron, "perceptron"},
    {ModelKind::DecisionTree, "decision-tree"},
    {ModelKind::Voting, "voting-ensemble"},
    {ModelKind::Stacking, "stacking-ensemble"},
    {ModelKind::External, "external"},
}};

}  // namespace

std::string_view to_string(ModelKind kind) {
    for (const auto& [k, n] : kKindNames) {
        if (k == kind) return n;
    }
    return "?";
}

std::string_view to_string(Task task) { return task == Task::Regression ? "regression" : "classification"; }

ModelKind parse_model_kind(std::string_view text) {
    for (const auto& [k, n] : kKindNames) {
        if (text == n) return k;
    }
    fail(ErrorKind::Spec, "unknown model kind '" + std::string(text) + "'");
}

Task parse_task(std::string_view text) {
    if (text == "regression") return Task::Regression;
    if (text == "classification") return Task::Classification;
    fail(ErrorKind::Spec, "unknown task '" + std::string(text) + "'");
}

json ModelSpec::to_json() const {
    json members_json = json::array();
    for (const auto& m : members) members_json.push_back(m.to_json());
    json j{{"name", name},        {"kind", to_string(kind)}, {"task", to_string(task)},
           {"grid", grid},        {"members", members_json}, {"seed", seed}};
    if (!command.empty()) j["command"] = command;
    return j;
}

ModelSpec ModelSpec::from_json(const json& j) {
    ModelSpec s;
    try {
        s.kind = parse_model_kind(j.at("kind").get<std::string>());
        s.name = j.value("name", std::string(to_string(s.kind)));
        s.task = parse_task(j.value("task", std::string("regression")));
        if (j.contains("grid")) s.grid = j.at("grid").get<Grid>();
        if (j.contains("members")) {
            for (const auto& m : j.at("members")) s.members.push_back(from_json(m));
        }
        if (j.contains("command")) {
            const auto& c = j.at("command");
            s.command = c.is_string() ? split_command(c.get<std::string>()) : c.get<std::vector<std::string>>();
        }
        s.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
        fail(ErrorKind::Spec, std::string("malformed model spec: ") + e.what());
    }
    for (const auto& [key, values] : s.grid) {
        if (values.empty()) fail(ErrorKind::Spec, "model '" + s.name + "': grid entry '" + key + "' is empty");
    }
    if ((s.kind == ModelKind::Voting || s.kind == ModelKind::Stacking) && s.members.size() < 2) {
        fail(ErrorKind::Spec, "model '" + s.name + "': ensembles need at least two members");
    }
    if (s.kind == ModelKind::External && s.command.empty()) {
        fail(ErrorKind::Spec, "model '" + s.name + "': external model needs a command");
    }
    return s;
}

json TrainedModel::to_json() const {
    return {{"spec", spec.to_json()}, {"hyper", hyper}, {"manifest", manifest}, {"params", params}};
}

TrainedModel TrainedModel::from_json(const json& j) {
    TrainedModel m;
    try {
        m.spec = ModelSpec::from_json(j.at("spec"));
        m.hyper = j.at("hyper").get<Hyper>();
        m.manifest = j.at("manifest").get<std::vector<std::string>>();
        m.params = j.at("params");
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("malformed trained model: ") + e.what());
    }
    return m;
}

namespace models {

namespace {

using Rows = std::vector<std::vector<double>>;

double hyper_or(const Hyper& h, const std::string& key, double fallback) {
    auto it = h.find(key);
    return it == h.end() ? fallback : it->second;
}

Hyper first_candidate(const Grid& grid) {
    Hyper h;
    for (const auto& [k, v] : grid) h[k] = v.front();
    return h;
}

Rows rows_of(const FeatureMatrix& m) {
    Rows x(m.rows(), std::vector<double>(m.cols()));
    for (std::size_t c = 0; c < m.cols(); ++c) {
        for (std::size_t r = 0; r < m.rows(); ++r) x[r][c] = m.columns[c][r];
    }
    return x;
}

Eigen::MatrixXd to_eigen(const Rows& x) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto p = static_cast<Eigen::Index>(x.empty() ? 0 : x[0].size());
    Eigen::MatrixXd out(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) out(i, j) = x[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return out;
}

std::vector<double> signs(const std::vector<double>& y) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] > 0 ? 1.0 : -1.0;
    return out;
}

double dot(const std::vector<double>& w, const std::vector<double>& x) {
    double s = 0;
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
    return s;
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// ---- decision tree ----------------------------------------------------------

struct TreeBuilder {
    const Rows& x;
    const std::vector<double>& y;
    bool classify;
    int max_depth;
    std::size_t min_leaf;
    json nodes = json::array();

    double leaf_value(const std::vector<std::size_t>& idx) const {
        if (classify) {
            int up = 0;
            for (auto i : idx) up += y[i] > 0;
            return 2 * up > static_cast<int>(idx.size()) ? 1.0 : -1.0;
        }
        double s = 0;
        for (auto i : idx) s += y[i];
        return s / static_cast<double>(idx.size());
    }

    // Total (not mean) impurity so parent and children compare directly.
    static double impurity(bool classify, double n, double sum, double sumsq) {
        if (n == 0) return 0;
        if (classify) {
            const double p_up = (sum + n) / (2 * n);  // labels are +-1
            return n * (1 - p_up * p_up - (1 - p_up) * (1 - p_up));
        }
        return sumsq - sum * sum / n;
    }

    std::size_t build(std::vector<std::size_t> idx, int depth) {
        const std::size_t id = nodes.size();
        nodes.push_back({{"feature", -1}, {"threshold", 0.0}, {"left", -1}, {"right", -1}, {"value", leaf_value(idx)}});
        if (depth >= max_depth || idx.size() < 2 * min_leaf) return id;

        double sum = 0, sumsq = 0;
        for (auto i : idx) {
            sum += y[i];
            sumsq += y[i] * y[i];
        }
        const double n = static_cast<double>(idx.size());
        const double parent = impurity(classify, n, sum, sumsq);
        double best_gain = 1e-12 * std::max(1.0, std::abs(parent));
        int best_feature = -1;
        double best_threshold = 0;
        const std::size_t p = x.empty() ? 0 : x[0].size();
        std::vector<std::size_t> order = idx;
        for (std::size_t f = 0; f < p; ++f) {
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a][f] < x[b][f]; });
            double ls = 0, lss = 0;
            for (std::size_t k = 0; k + 1 < order.size(); ++k) {
                ls += y[order[k]];
                lss += y[order[k]] * y[order[k]];
                const double lo = x[order[k]][f], hi = x[order[k + 1]][f];
                if (!(lo < hi)) continue;
                const std::size_t nl = k + 1, nr = order.size() - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                const double child = impurity(classify, static_cast<double>(nl), ls, lss) +
                                     impurity(classify, static_cast<double>(nr), sum - ls, sumsq - lss);
                const double gain = parent - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = lo + (hi - lo) / 2;
                }
            }
        }
        if (best_feature < 0) return id;
        std::vector<std::size_t> left, right;
        for (auto i : idx) (x[i][static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(i);
        const std::size_t l = build(std::move(left), depth + 1);
        const std::size_t r = build(std::move(right), depth + 1);
        nodes[id]["feature"] = best_feature;
        nodes[id]["threshold"] = best_threshold;
        nodes[id]["left"] = l;
        nodes[id]["right"] = r;
        return id;
    }
};

double tree_predict(const json& nodes, const std::vector<double>& row) {
    std::size_t id = 0;
    while (true) {
        const auto& node = nodes[id];
        const int f = node["feature"].get<int>();
        if (f < 0) return node["value"].get<double>();
        id = row[static_cast<std::size_t>(f)] <= node["threshold"].get<double>() ? node["left"].get<std::size_t>()
                                                                                 : node["right"].get<std::size_t>();
    }
}

// ---- generic fit/predict on plain rows -----------------------------------------

json fit_rows(const ModelSpec& spec, const Hyper& hyper, const Rows& x, const std::vector<double>& target,
              const std::vector<std::string>& manifest);
std::vector<double> predict_rows(const ModelSpec& spec, const Hyper& hyper, const json& params, const Rows& x,
                                 const std::vector<std::string>& manifest);

void require_classification(const ModelSpec& spec) {
    if (spec.task != Task::Classification) {
        fail(ErrorKind::Spec, "model '" + spec.name + "': " + std::string(to_string(spec.kind)) +
                                  " only supports classification");
    }
}

void check_members(const ModelSpec& spec) {
    if (spec.members.size() < 2) fail(ErrorKind::Spec, "model '" + spec.name + "': ensembles need two members");
    for (const auto& m : spec.members) {
        if (m.task != spec.task) {
            fail(ErrorKind::Spec, "model '" + spec.name + "': member '" + m.name + "' has a different task");
        }
    }
}

Rows take(const Rows& x, const std::vector<std::size_t>& idx) {
    Rows out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(x[i]);
    return out;
}

std::vector<double> take(const std::vector<double>& v, const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

std::vector<Direction> directions_of(const std::vector<double>& v) { return direction(v); }

json fit_rows(const ModelSpec& spec, const Hyper& hyper, const Rows& x, const std::vector<double>& target,
              const std::vector<std::string>& manifest) {
    if (x.empty()) fail(ErrorKind::InsufficientData, "model '" + spec.name + "': no training rows");
    const std::vector<double> y = spec.task == Task::Classification ? signs(target) : target;
    switch (spec.kind) {
        case ModelKind::Ridge: {
            auto fit = detail::fit_ridge(x, y, hyper_or(hyper, "alpha", 1.0), hyper_or(hyper, "fit_intercept", 1) != 0);
            return {{"w", fit.w}, {"b", fit.b}};
        }
        case ModelKind::Logistic: {
            require_classification(spec);
            auto fit = detail::fit_logistic(x, y, hyper_or(hyper, "C", 1.0),
                                            static_cast<int>(hyper_or(hyper, "max_iter", 100)));
            return {{"w", fit.w}, {"b", fit.b}};
        }
        case ModelKind::Perceptron: {
            require_classification(spec);
            const int epochs = static_cast<int>(hyper_or(hyper, "max_iter", 100));
            const double eta = hyper_or(hyper, "eta0", 1.0);
            std::vector<double> w(x[0].size(), 0.0);
            double b = 0;
            std::vector<std::size_t> order(x.size());
            std::iota(order.begin(), order.end(), 0);
            int epoch = 0;
            for (; epoch < epochs; ++epoch) {
                Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(epoch)));
                rng.shuffle(order);
                int mistakes = 0;
                for (auto i : order) {
                    if (y[i] * (dot(w, x[i]) + b) <= 0) {
                        for (std::size_t j = 0; j < w.size(); ++j) w[j] += eta * y[i] * x[i][j];
                        b += eta * y[i];
                        ++mistakes;
                    }
                }
                if (mistakes == 0) break;
            }
            return {{"w", w}, {"b", b}, {"epochs", epoch}};
        }
        case ModelKind::DecisionTree: {
            const double depth = hyper_or(hyper, "max_depth", 3);
            const double leaf = hyper_or(hyper, "min_samples_leaf", 1);
            if (depth < 0 || leaf < 1) fail(ErrorKind::Spec, "model '" + spec.name + "': bad tree hyperparameters");
            TreeBuilder tb{x, y, spec.task == Task::Classification, static_cast<int>(depth),
                           static_cast<std::size_t>(leaf)};
            std::vector<std::size_t> all(x.size());
            std::iota(all.begin(), all.end(), 0);
            tb.build(all, 0);
            return {{"nodes", tb.nodes}};
        }
        case ModelKind::Voting: {
            check_members(spec);
            json members = json::array();
            for (const auto& m : spec.members) {
                const Hyper h = first_candidate(m.grid);
                members.push_back({{"hyper", h}, {"params", fit_rows(m, h, x, target, manifest)}});
            }
            return {{"members", members}};
        }
        case ModelKind::Stacking: {
            check_members(spec);
            // Combiner weights come from out-of-fold member outputs so a
            // member that memorises the training rows gets no undue weight.
            const int k = static_cast<int>(hyper_or(hyper, "folds", 5));
            const auto folds = stratified_folds(directions_of(target), k, derive_seed(spec.seed, 7));
            const std::size_t m_count = spec.members.size();
            Eigen::MatrixXd z(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(m_count) + 1);
            z.col(0).setOnes();
            for (std::size_t m = 0; m < m_count; ++m) {
                const auto& member = spec.members[m];
                const Hyper h = first_candidate(member.grid);
                for (int f = 0; f < k; ++f) {
                    std::vector<std::size_t> tr, te;
                    for (std::size_t i = 0; i < x.size(); ++i) (folds[i] == f ? te : tr).push_back(i);
                    const json p = fit_rows(member, h, take(x, tr), take(target, tr), manifest);
                    const auto out = predict_rows(member, h, p, take(x, te), manifest);
                    for (std::size_t t = 0; t < te.size(); ++t) {
                        z(static_cast<Eigen::Index>(te[t]), static_cast<Eigen::Index>(m) + 1) = out[t];
                    }
                }
            }
            Eigen::VectorXd yy(static_cast<Eigen::Index>(y.size()));
            for (std::size_t i = 0; i < y.size(); ++i) yy(static_cast<Eigen::Index>(i)) = y[i];
            const Eigen::VectorXd coef = z.completeOrthogonalDecomposition().solve(yy);
            std::vector<double> combiner(coef.data(), coef.data() + coef.size());
            json members = json::array();
            for (const auto& m : spec.members) {
                const Hyper h = first_candidate(m.grid);
                members.push_back({{"hyper", h}, {"params", fit_rows(m, h, x, target, manifest)}});
            }
            return {{"members", members}, {"combiner", combiner}};
        }
        case ModelKind::External: {
            if (spec.command.empty()) fail(ErrorKind::Spec, "model '" + spec.name + "': external model needs a command");
            // The peer is stateless between runs, so training data travels
            // with the model and is replayed in the handshake at predict time.
            return {{"rows", x}, {"target", y}};
        }
    }
    fail(ErrorKind::Spec, "unknown model kind");
}

std::vector<double> predict_rows(const ModelSpec& spec, const Hyper& hyper, const json& params, const Rows& x,
                                 const std::vector<std::string>& manifest) {
    const bool classify = spec.task == Task::Classification;
    std::vector<double> out(x.size());
    switch (spec.kind) {
        case ModelKind::Ridge:
        case ModelKind::Logistic:
        case ModelKind::Perceptron: {
            const auto w = params.at("w").get<std::vector<double>>();
            const double b = params.at("b").get<double>();
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double f = dot(w, x[i]) + b;
                out[i] = classify ? (f > 0 ? 1.0 : -1.0) : f;
            }
            return out;
        }
        case ModelKind::DecisionTree: {
            const auto& nodes = params.at("nodes");
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = tree_predict(nodes, x[i]);
            return out;
        }
        case ModelKind::Voting: {
            const auto& members = params.at("members");
            std::vector<double> acc(x.size(), 0.0);
            for (std::size_t m = 0; m < spec.members.size(); ++m) {
                const auto p = predict_rows(spec.members[m], members[m].at("hyper").get<Hyper>(),
                                            members[m].at("params"), x, manifest);
                for (std::size_t i = 0; i < x.size(); ++i) acc[i] += p[i];
            }
            const double n = static_cast<double>(spec.members.size());
            // classification: a tied vote sums to zero and maps to down
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = classify ? (acc[i] > 0 ? 1.0 : -1.0) : acc[i] / n;
            return out;
        }
        case ModelKind::Stacking: {
            const auto& members = params.at("members");
            const auto coef = params.at("combiner").get<std::vector<double>>();
            std::vector<double> acc(x.size(), coef[0]);
            for (std::size_t m = 0; m < spec.members.size(); ++m) {
                const auto p = predict_rows(spec.members[m], members[m].at("hyper").get<Hyper>(),
                                            members[m].at("params"), x, manifest);
                for (std::size_t i = 0; i < x.size(); ++i) acc[i] += coef[m + 1] * p[i];
            }
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = classify ? (acc[i] > 0 ? 1.0 : -1.0) : acc[i];
            return out;
        }
        case ModelKind::External: {
            std::vector<std::string> requests;
            requests.push_back(json{{"manifest", manifest},
                                    {"task", to_string(spec.task)},
                                    {"hyper", hyper},
                                    {"rows", params.at("rows")},
                                    {"target", params.at("target")}}
                                   .dump());
            requests.emplace_back();
            for (std::size_t i = 0; i < x.size(); ++i) {
                requests.push_back(json{{"id", std::to_string(i)}, {"features", x[i]}}.dump());
            }
            requests.emplace_back();
            std::vector<bool> seen(x.size(), false);
            ChildProcess child(spec.command);
            exchange_lines(child, requests, [&](const std::string& line, std::size_t line_no) {
                const std::string where = "model response line " + std::to_string(line_no);
                json resp;
                try {
                    resp = json::parse(line);
                } catch (const json::parse_error&) {
                    fail(ErrorKind::Protocol, where + ": not valid JSON");
                }
                if (!resp.is_object() || !resp.contains("id") || !resp["id"].is_string()) {
                    fail(ErrorKind::Protocol, where + ": missing string id");
                }
                const std::string id = resp["id"].get<std::string>();
                if (resp.contains("error")) fail(ErrorKind::Protocol, where + ": peer reported an error for id '" + id + "'");
                std::size_t i = 0;
                try {
                    std::size_t used = 0;
                    i = std::stoul(id, &used);
                    if (used != id.size()) throw std::invalid_argument(id);
                } catch (const std::exception&) {
                    fail(ErrorKind::Correlation, where + ": unknown id '" + id + "'");
                }
                if (i >= x.size()) fail(ErrorKind::Correlation, where + ": unknown id '" + id + "'");
                if (seen[i]) fail(ErrorKind::Correlation, where + ": repeated id '" + id + "'");
                if (!resp.contains("value") || !resp["value"].is_number()) fail(ErrorKind::Protocol, where + ": missing value");
                const double v = resp["value"].get<double>();
                if (!std::isfinite(v)) fail(ErrorKind::Protocol, where + ": non-finite value");
                seen[i] = true;
                out[i] = classify ? (v > 0 ? 1.0 : -1.0) : v;
            });
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (!seen[i]) fail(ErrorKind::Correlation, "no model response for id '" + std::to_string(i) + "'");
            }
            return out;
        }
    }
    fail(ErrorKind::Spec, "unknown model kind");
}

}  // namespace

std::vector<Hyper> expand_grid(const Grid& grid) {
    std::vector<Hyper> out{Hyper{}};
    for (const auto& [key, values] : grid) {
        if (values.empty()) fail(ErrorKind::Spec, "grid entry '" + key + "' is empty");
        std::vector<Hyper> next;
        for (const auto& h : out) {
            for (double v : values) {
                Hyper c = h;
                c[key] = v;
                next.push_back(std::move(c));
            }
        }
        out = std::move(next);
    }
    return out;
}

std::vector<Direction> direction(const std::vector<double>& values) {
    std::vector<Direction> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] > 0 ? Direction::Up : Direction::Down;
    return out;
}

double balanced_accuracy(const std::vector<Direction>& pred, const std::vector<Direction>& gold) {
    if (pred.size() != gold.size()) fail(ErrorKind::Argument, "balanced_accuracy: lists differ in length");
    std::array<double, 2> hit{}, total{};
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto g = static_cast<std::size_t>(gold[i]);
        total[g] += 1;
        if (pred[i] == gold[i]) hit[g] += 1;
    }
    for (std::size_t c = 0; c < 2; ++c) {
        if (total[c] == 0) {
            fail(ErrorKind::UndefinedClass, std::string("balanced_accuracy: gold has no '") + (c ? "up" : "down") +
                                                "' samples");
        }
    }
    return (hit[0] / total[0] + hit[1] / total[1]) / 2;
}

double accuracy(const std::vector<Direction>& pred, const std::vector<Direction>& gold) {
    if (pred.size() != gold.size()) fail(ErrorKind::Argument, "accuracy: lists differ in length");
    if (gold.empty()) fail(ErrorKind::Argument, "accuracy: no samples");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hit += pred[i] == gold[i];
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

namespace {

void check_training_matrix(const FeatureMatrix& m) {
    if (m.target.size() != m.rows()) fail(ErrorKind::Argument, "training matrix has no target column");
    for (std::size_t c = 0; c < m.cols(); ++c) {
        for (double v : m.columns[c]) {
            if (!std::isfinite(v)) fail(ErrorKind::Numerical, "non-finite value in column '" + m.names[c] + "'");
        }
    }
    for (double v : m.target) {
        if (!std::isfinite(v)) fail(ErrorKind::Numerical, "non-finite target value");
    }
}

}  // namespace

TrainedModel fit(const ModelSpec& spec, const FeatureMatrix& train, const Hyper& hyper) {
    check_training_matrix(train);
    TrainedModel m;
    m.spec = spec;
    m.hyper = hyper;
    m.manifest = train.names;
    m.params = fit_rows(spec, hyper, rows_of(train), train.target, train.names);
    return m;
}

std::vector<double> predict(const TrainedModel& model, const FeatureMatrix& rows) {
    if (rows.names != model.manifest) {
        std::string detail;
        if (rows.cols() != model.manifest.size()) {
            detail = std::to_string(rows.cols()) + " columns given, " + std::to_string(model.manifest.size()) +
                     " expected";
        } else {
            for (std::size_t i = 0; i < rows.cols(); ++i) {
                if (rows.names[i] != model.manifest[i]) {
                    detail = "column " + std::to_string(i) + " is '" + rows.names[i] + "', expected '" +
                             model.manifest[i] + "'";
                    break;
                }
            }
        }
        fail(ErrorKind::Schema, "model '" + model.spec.name + "': column manifest mismatch: " + detail);
    }
    return predict_rows(model.spec, model.hyper, model.params, rows_of(rows), model.manifest);
}

std::vector<int> stratified_folds(const std::vector<Direction>& classes, int folds, std::uint64_t seed) {
    if (folds < 2) fail(ErrorKind::Fold, "need at least two folds");
    std::array<std::vector<std::size_t>, 2> members;
    for (std::size_t i = 0; i < classes.size(); ++i) members[static_cast<std::size_t>(classes[i])].push_back(i);
    std::vector<int> out(classes.size(), -1);
    std::size_t cursor = 0;  // carries across classes so fold sizes stay level
    for (std::size_t c = 0; c < 2; ++c) {
        if (members[c].size() < static_cast<std::size_t>(folds)) {
            fail(ErrorKind::Fold, std::string("class '") + (c ? "up" : "down") + "' has " +
                                      std::to_string(members[c].size()) + " samples, fewer than " +
                                      std::to_string(folds) + " folds");
        }
        Rng rng(derive_seed(seed, c));
        rng.shuffle(members[c]);
        for (auto i : members[c]) out[i] = static_cast<int>(cursor++ % static_cast<std::size_t>(folds));
    }
    return out;
}

CvResult cv_tune(const ModelSpec& spec, const FeatureMatrix& train, int folds, int repeats, std::uint64_t seed) {
    check_training_matrix(train);
    if (repeats < 1) fail(ErrorKind::Argument, "cv_tune needs at least one repeat");
    CvResult res;
    res.candidates = expand_grid(spec.grid);
    const Rows x = rows_of(train);
    const auto gold = direction(train.target);
    std::vector<std::vector<int>> assignment;
    for (int r = 0; r < repeats; ++r) {
        assignment.push_back(stratified_folds(gold, folds, derive_seed(seed, static_cast<std::uint64_t>(r))));
    }
    for (const auto& cand : res.candidates) {
        std::vector<double> scores;
        for (const auto& fold_of : assignment) {
            for (int f = 0; f < folds; ++f) {
                std::vector<std::size_t> tr, te;
                for (std::size_t i = 0; i < x.size(); ++i) (fold_of[i] == f ? te : tr).push_back(i);
                const json params = fit_rows(spec, cand, take(x, tr), take(train.target, tr), train.names);
                const auto pred = predict_rows(spec, cand, params, take(x, te), train.names);
                std::vector<Direction> g;
                for (auto i : te) g.push_back(gold[i]);
                scores.push_back(balanced_accuracy(direction(pred), g));
            }
        }
        const double n = static_cast<double>(scores.size());
        const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
        double ss = 0;
        for (double s : scores) ss += (s - mean) * (s - mean);
        res.mean.push_back(mean);
        res.sd.push_back(scores.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0);
        res.scores.push_back(std::move(scores));
    }
    for (std::size_t c = 1; c < res.mean.size(); ++c) {
        if (res.mean[c] > res.mean[res.winner]) res.winner = c;
    }
    return res;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    write_text_file(path, model.to_json().dump(1) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Format, path.string() + ": " + e.what());
    }
    return TrainedModel::from_json(j);
}

namespace detail {

RidgeFit fit_ridge(const std::vector<std::vector<double>>& x, const std::vector<double>& y, double alpha,
                   bool fit_intercept) {
    if (x.empty() || x.size() != y.size()) fail(ErrorKind::Argument, "ridge: rows and targets differ");
    if (alpha < 0) fail(ErrorKind::Argument, "ridge: alpha must be non-negative");
    Eigen::MatrixXd a = to_eigen(x);
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size()));
    Eigen::RowVectorXd x_mean = Eigen::RowVectorXd::Zero(a.cols());
    double y_mean = 0;
    if (fit_intercept) {
        x_mean = a.colwise().mean();
        y_mean = b.mean();
        a.rowwise() -= x_mean;
        b.array() -= y_mean;
    }
    Eigen::MatrixXd gram = a.transpose() * a;
    gram.diagonal().array() += alpha;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    if (qr.rank() < gram.cols()) {
        fail(ErrorKind::Numerical, "ridge: normal equations are singular (alpha = " + format_double(alpha) + ")");
    }
    const Eigen::VectorXd w = qr.solve(a.transpose() * b);
    RidgeFit fit;
    fit.w.assign(w.data(), w.data() + w.size());
    fit.b = fit_intercept ? y_mean - x_mean.dot(w) : 0.0;
    return fit;
}

LogisticFit fit_logistic(const std::vector<std::vector<double>>& x, const std::vector<double>& y, double c,
                         int max_iter, double tol) {
    if (x.empty() || x.size() != y.size()) fail(ErrorKind::Argument, "logistic: rows and targets differ");
    if (!(c > 0)) fail(ErrorKind::Argument, "logistic: C must be positive");
    const Eigen::MatrixXd a = to_eigen(x);
    const Eigen::Index n = a.rows(), p = a.cols();
    Eigen::MatrixXd ax(n, p + 1);
    ax.leftCols(p) = a;
    ax.col(p).setOnes();
    Eigen::VectorXd yy(n);
    for (Eigen::Index i = 0; i < n; ++i) yy(i) = y[static_cast<std::size_t>(i)] > 0 ? 1.0 : -1.0;

    auto loss = [&](const Eigen::VectorXd& theta) {
        const Eigen::VectorXd f = ax * theta;
        double l = 0.5 * theta.head(p).squaredNorm();
        for (Eigen::Index i = 0; i < n; ++i) l += c * softplus(-yy(i) * f(i));
        return l;
    };

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
    LogisticFit out;
    double current = loss(theta);
    out.loss_trace.push_back(current);
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd f = ax * theta;
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(p + 1);
        grad.head(p) = theta.head(p);
        Eigen::VectorXd weight(n);
        Eigen::VectorXd resid(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = sigmoid(-yy(i) * f(i));
            resid(i) = -yy(i) * s;
            weight(i) = s * (1 - s);
        }
        grad += c * ax.transpose() * resid;
        if (grad.lpNorm<Eigen::Infinity>() < tol) break;
        Eigen::MatrixXd hess = c * ax.transpose() * weight.asDiagonal() * ax;
        hess.diagonal().head(p).array() += 1.0;
        hess(p, p) += 1e-10;  // unpenalised intercept can be flat on separable data
        const Eigen::VectorXd step = hess.ldlt().solve(-grad);
        double t = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half, t /= 2) {
            const Eigen::VectorXd cand = theta + t * step;
            const double l = loss(cand);
            if (l <= current + 1e-4 * t * grad.dot(step)) {
                theta = cand;
                current = l;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        out.loss_trace.push_back(current);
    }
    out.w.assign(theta.data(), theta.data() + p);
    out.b = theta(p);
    return out;
}

}  // namespace detail
}  // namespace models
}  // namespace sentitrade
