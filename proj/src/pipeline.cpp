#include "sentitrade/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "sentitrade/backtest.hpp"
#include "sentitrade/featselect.hpp"
#include "sentitrade/hash.hpp"
#include "sentitrade/indicators.hpp"
#include "sentitrade/process.hpp"
#include "sentitrade/util.hpp"

namespace sentitrade::pipeline {

using json = nlohmann::json;

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::Ingest: return "ingest";
        case Stage::Label: return "label";
        case Stage::Features: return "features";
        case Stage::Select: return "select";
        case Stage::Train: return "train";
        case Stage::Backtest: return "backtest";
        case Stage::Report: return "report";
    }
    return "?";
}

Stage parse_stage(std::string_view text) {
    for (Stage s : kStages) {
        if (to_string(s) == text) return s;
    }
    fail(ErrorKind::Validation, "unknown stage '" + std::string(text) + "'");
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Validation:
        case ErrorKind::Configuration:
        case ErrorKind::Spec:
            return 2;
        case ErrorKind::Dependency:
            return 3;
        default:
            return 4;
    }
}

std::string RunConfig::hash() const {
    json copy = raw;
    copy.erase("output");
    return sha256_hex(copy.dump());
}

// ---- configuration ------------------------------------------------------------

namespace {

class Checker {
public:
    std::vector<std::string> problems;

    void add(const std::string& p) { problems.push_back(p); }

    void known_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
        if (!obj.is_object()) return;
        for (const auto& [k, v] : obj.items()) {
            bool ok = false;
            for (const char* key : keys) ok = ok || k == key;
            if (!ok) add(where + ": unknown key '" + k + "'");
        }
    }

    const json* section(const json& root, const char* key, bool required) {
        if (!root.contains(key)) {
            if (required) add("missing section '" + std::string(key) + "'");
            return nullptr;
        }
        if (!root.at(key).is_object()) {
            add("'" + std::string(key) + "' must be an object");
            return nullptr;
        }
        return &root.at(key);
    }

    template <typename T>
    std::optional<T> get(const json* obj, const std::string& where, const char* key, bool required) {
        if (!obj || !obj->contains(key) || obj->at(key).is_null()) {
            if (required) add(where + "." + key + " is required");
            return std::nullopt;
        }
        try {
            return obj->at(key).get<T>();
        } catch (const json::exception&) {
            add(where + "." + key + " has the wrong type");
            return std::nullopt;
        }
    }

    std::optional<Date> date(const json* obj, const std::string& where, const char* key) {
        auto s = get<std::string>(obj, where, key, true);
        if (!s) return std::nullopt;
        try {
            return parse_date(*s);
        } catch (const Error&) {
            add(where + "." + key + " is not a YYYY-MM-DD date");
            return std::nullopt;
        }
    }
};

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

}  // namespace

RunConfig parse_config(const json& raw_in, const fs::path& base_dir, const Overrides& overrides) {
    Checker ck;
    RunConfig cfg;
    cfg.raw = raw_in;
    cfg.base_dir = base_dir;
    if (!raw_in.is_object()) fail(ErrorKind::Validation, "configuration must be a JSON object");
    if (overrides.seed) cfg.raw["seed"] = *overrides.seed;
    if (overrides.out) cfg.raw["output"] = overrides.out->string();
    const json& raw = cfg.raw;

    ck.known_keys(raw, "config",
                  {"currency", "data", "period", "features", "filters", "sentiment", "selection", "models", "cv",
                   "backtest", "seed", "output"});

    if (auto c = ck.get<std::string>(&raw, "config", "currency", true)) {
        try {
            cfg.currency = parse_currency(*c);
        } catch (const Error&) {
            ck.add("config.currency must be BTC or ETH");
        }
    }
    if (auto s = ck.get<std::uint64_t>(&raw, "config", "seed", true)) cfg.seed = *s;
    if (auto o = ck.get<std::string>(&raw, "config", "output", true)) cfg.out_dir = resolve(base_dir, *o);

    const json* data = ck.section(raw, "data", true);
    ck.known_keys(data ? *data : json{}, "data", {"prices", "other_prices", "blockchain", "macro", "posts"});
    auto path_key = [&](const char* key, bool required) -> std::optional<fs::path> {
        auto p = ck.get<std::string>(data, "data", key, required);
        if (!p) return std::nullopt;
        fs::path full = resolve(base_dir, *p);
        if (!fs::exists(full)) ck.add("data." + std::string(key) + ": file not found: " + full.string());
        return full;
    };
    if (auto p = path_key("prices", true)) cfg.prices = *p;
    if (auto p = path_key("other_prices", true)) cfg.other_prices = *p;
    cfg.blockchain = path_key("blockchain", false);
    cfg.macro = path_key("macro", false);
    cfg.posts = path_key("posts", false);
    if (cfg.currency == Currency::ETH && cfg.blockchain) {
        ck.add("data.blockchain must be absent for ETH: blockchain features are only used for BTC");
    }

    const json* period = ck.section(raw, "period", true);
    ck.known_keys(period ? *period : json{}, "period", {"start", "train_end", "end"});
    auto start = ck.date(period, "period", "start");
    auto train_end = ck.date(period, "period", "train_end");
    auto end = ck.date(period, "period", "end");
    if (start && train_end && end) {
        if (!(*start <= *train_end && *train_end < *end)) ck.add("period: need start <= train_end < end");
        cfg.start = *start;
        cfg.train_end = *train_end;
        cfg.end = *end;
    }

    if (const json* f = ck.section(raw, "features", false)) {
        ck.known_keys(*f, "features",
                      {"price_lags", "lags", "technicals", "lagged_technicals", "sentiment", "indicator_params",
                       "feature_set"});
        auto lag_list = [&](const char* key, std::vector<int>& out) {
            if (auto v = ck.get<std::vector<int>>(f, "features", key, false)) {
                for (int k : *v) {
                    if (k < 0 || k > 2) ck.add("features." + std::string(key) + " values must lie in {0,1,2}");
                }
                out = *v;
            }
        };
        lag_list("price_lags", cfg.price_lags);
        lag_list("lags", cfg.lags);
        if (auto v = ck.get<bool>(f, "features", "technicals", false)) cfg.technicals = *v;
        if (auto v = ck.get<bool>(f, "features", "lagged_technicals", false)) cfg.lagged_technicals = *v;
        if (auto v = ck.get<bool>(f, "features", "sentiment", false)) cfg.sentiment = *v;
        if (auto v = ck.get<std::map<std::string, double>>(f, "features", "indicator_params", false)) {
            cfg.indicator_params = *v;
            try {
                auto params = indicators::IndicatorParams::defaults();
                params.override_with(*v);
            } catch (const Error& e) {
                ck.add(std::string("features.indicator_params: ") + e.what());
            }
        }
        if (auto v = ck.get<std::string>(f, "features", "feature_set", false)) cfg.feature_set = *v;
    }
    if (cfg.feature_set.empty()) cfg.feature_set = cfg.sentiment ? "all" : "no-sentiment";
    if (cfg.lagged_technicals && cfg.other_prices.empty()) ck.add("lagged technicals need data.other_prices");

    if (const json* fl = ck.section(raw, "filters", false)) {
        for (const auto& [name, rule] : fl->items()) {
            Source src;
            try {
                src = parse_source(name);
            } catch (const Error&) {
                ck.add("filters: unknown source '" + name + "'");
                continue;
            }
            const std::string where = "filters." + name;
            ck.known_keys(rule, where, {"min_engagement", "min_length", "reject_url_only"});
            ingest::SourceRule r;
            if (auto v = ck.get<std::map<std::string, std::int64_t>>(&rule, where, "min_engagement", false)) {
                r.min_engagement = *v;
            }
            if (auto v = ck.get<std::size_t>(&rule, where, "min_length", false)) r.min_length = *v;
            if (auto v = ck.get<bool>(&rule, where, "reject_url_only", false)) r.reject_url_only = *v;
            cfg.filters.per_source[src] = r;
        }
    }

    if (const json* s = ck.section(raw, "sentiment", cfg.sentiment)) {
        ck.known_keys(*s, "sentiment", {"classifiers", "bias"});
        if (auto b = ck.get<std::string>(s, "sentiment", "bias", false)) {
            try {
                cfg.bias = parse_bias(*b);
            } catch (const Error&) {
                ck.add("sentiment.bias must be nb or pb");
            }
        }
        if (s->contains("classifiers") && s->at("classifiers").is_array()) {
            std::size_t i = 0;
            for (const auto& c : s->at("classifiers")) {
                const std::string where = "sentiment.classifiers[" + std::to_string(i++) + "]";
                ck.known_keys(c, where, {"type", "lexicon", "command", "batch_size"});
                ClassifierConfig cc;
                if (auto t = ck.get<std::string>(&c, where, "type", true)) cc.type = *t;
                if (cc.type == "lexicon") {
                    if (auto l = ck.get<std::string>(&c, where, "lexicon", true)) {
                        cc.lexicon = resolve(base_dir, *l);
                        if (!fs::exists(cc.lexicon)) ck.add(where + ".lexicon: file not found: " + cc.lexicon.string());
                    }
                } else if (cc.type == "external") {
                    if (c.contains("command") && c.at("command").is_string()) {
                        cc.command = split_command(c.at("command").get<std::string>());
                    } else if (auto v = ck.get<std::vector<std::string>>(&c, where, "command", true)) {
                        cc.command = *v;
                    }
                    if (cc.command.empty()) ck.add(where + ".command is empty");
                    if (auto b = ck.get<std::size_t>(&c, where, "batch_size", false)) cc.batch_size = *b;
                } else {
                    ck.add(where + ".type must be lexicon or external");
                }
                cfg.classifiers.push_back(cc);
            }
        } else if (cfg.sentiment) {
            ck.add("sentiment.classifiers must be a non-empty list");
        }
    }
    if (cfg.sentiment) {
        if (!cfg.posts) ck.add("data.posts is required when sentiment features are enabled");
        if (cfg.classifiers.empty()) ck.add("sentiment.classifiers must name at least one classifier");
        if (cfg.classifiers.size() > 5) ck.add("sentiment.classifiers: at most five classifiers may vote");
    }

    if (const json* s = ck.section(raw, "selection", false)) {
        ck.known_keys(*s, "selection", {"vif_cutoff"});
        if (s->contains("vif_cutoff") && s->at("vif_cutoff").is_null()) {
            cfg.vif_cutoff.reset();
        } else if (auto v = ck.get<double>(s, "selection", "vif_cutoff", false)) {
            if (!(*v > 1)) ck.add("selection.vif_cutoff must exceed 1");
            cfg.vif_cutoff = *v;
        }
    }

    if (!raw.contains("models") || !raw.at("models").is_array() || raw.at("models").empty()) {
        ck.add("models must be a non-empty list");
    } else {
        std::set<std::string> names;
        const std::regex safe("[A-Za-z0-9_.-]+");
        std::size_t i = 0;
        for (const auto& m : raw.at("models")) {
            const std::string where = "models[" + std::to_string(i) + "]";
            try {
                ModelSpec spec = ModelSpec::from_json(m);
                if (!m.contains("seed")) spec.seed = derive_seed(cfg.seed, 1000 + i);
                if (!std::regex_match(spec.name, safe)) ck.add(where + ".name must match [A-Za-z0-9_.-]+");
                if (!names.insert(spec.name).second) ck.add(where + ": duplicate model name '" + spec.name + "'");
                cfg.models.push_back(spec);
            } catch (const Error& e) {
                ck.add(where + ": " + e.what());
            }
            ++i;
        }
    }

    if (const json* c = ck.section(raw, "cv", false)) {
        ck.known_keys(*c, "cv", {"folds", "repeats"});
        if (auto v = ck.get<int>(c, "cv", "folds", false)) cfg.cv_folds = *v;
        if (auto v = ck.get<int>(c, "cv", "repeats", false)) cfg.cv_repeats = *v;
        if (cfg.cv_folds < 2) ck.add("cv.folds must be at least 2");
        if (cfg.cv_repeats < 1) ck.add("cv.repeats must be at least 1");
    }

    if (const json* b = ck.section(raw, "backtest", false)) {
        ck.known_keys(*b, "backtest", {"frame_len", "shift", "cost_rate", "initial", "random_repetitions"});
        if (auto v = ck.get<std::size_t>(b, "backtest", "frame_len", false)) cfg.frame_len = *v;
        if (auto v = ck.get<std::size_t>(b, "backtest", "shift", false)) cfg.frame_shift = *v;
        if (auto v = ck.get<double>(b, "backtest", "cost_rate", false)) cfg.cost_rate = *v;
        if (auto v = ck.get<double>(b, "backtest", "initial", false)) cfg.initial = *v;
        if (auto v = ck.get<std::size_t>(b, "backtest", "random_repetitions", false)) cfg.random_repetitions = *v;
        if (cfg.frame_len < 2) ck.add("backtest.frame_len must be at least 2");
        if (cfg.frame_shift < 1) ck.add("backtest.shift must be at least 1");
        if (!(cfg.cost_rate >= 0 && cfg.cost_rate < 1)) ck.add("backtest.cost_rate must lie in [0, 1)");
        if (!(cfg.initial > 0)) ck.add("backtest.initial must be positive");
        if (cfg.random_repetitions < 1) ck.add("backtest.random_repetitions must be at least 1");
    }

    if (!ck.problems.empty()) {
        std::string msg = "invalid configuration (" + std::to_string(ck.problems.size()) + " problem" +
                          (ck.problems.size() == 1 ? "" : "s") + "):";
        for (const auto& p : ck.problems) msg += "\n  - " + p;
        fail(ErrorKind::Validation, msg);
    }
    return cfg;
}

RunConfig load_config(const fs::path& path, const Overrides& overrides) {
    if (!fs::exists(path)) fail(ErrorKind::Validation, "configuration file not found: " + path.string());
    json raw;
    try {
        raw = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Validation, path.string() + ": " + e.what());
    }
    return parse_config(raw, fs::absolute(path).parent_path(), overrides);
}

fs::path stage_dir(const RunConfig& config, Stage stage) { return config.out_dir / std::string(to_string(stage)); }

// ---- manifests --------------------------------------------------------------

namespace {

fs::path fresh_stage_dir(const RunConfig& cfg, Stage stage) {
    const fs::path dir = stage_dir(cfg, stage);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const RunConfig& cfg, Stage stage, const json& inputs, const std::vector<std::string>& outputs,
                    json extra = json::object()) {
    const fs::path dir = stage_dir(cfg, stage);
    json out = json::object();
    for (const auto& f : outputs) out[f] = sha256_file(dir / f);
    json m{{"stage", to_string(stage)}, {"config_sha256", cfg.hash()}, {"seed", cfg.seed},
           {"inputs", inputs},          {"outputs", out},              {"info", extra}};
    write_text_file(dir / "manifest.json", m.dump(1) + "\n");
}

json read_manifest_file(const fs::path& path, const std::string& stage) {
    if (!fs::exists(path)) {
        fail(ErrorKind::Dependency, "stage '" + stage + "' has not been run: no manifest at " + path.string());
    }
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error&) {
        fail(ErrorKind::Dependency, "stage '" + stage + "' manifest is unreadable: " + path.string());
    }
}

/// Verifies a completed prerequisite and returns its manifest.
json require(const RunConfig& cfg, Stage stage) {
    const std::string name(to_string(stage));
    const fs::path dir = stage_dir(cfg, stage);
    json m = read_manifest_file(dir / "manifest.json", name);
    if (m.value("config_sha256", std::string()) != cfg.hash()) {
        fail(ErrorKind::Dependency, "stage '" + name + "' was produced under a different configuration; rerun it");
    }
    for (const auto& [file, sha] : m.at("outputs").items()) {
        const fs::path p = dir / file;
        if (!fs::exists(p) || sha256_file(p) != sha.get<std::string>()) {
            fail(ErrorKind::Dependency, "stage '" + name + "' artifact '" + file + "' is missing or modified");
        }
    }
    return m;
}

std::string output_sha(const json& manifest, const std::string& file) { return manifest.at("outputs").at(file); }

void save_dated_table(const DatedTable& t, const fs::path& path) {
    std::ostringstream out;
    out << "date";
    for (const auto& n : t.names) out << ',' << n;
    out << "\n";
    for (std::size_t r = 0; r < t.dates.size(); ++r) {
        out << format_date(t.dates[r]);
        for (const auto& c : t.columns) out << ',' << format_double(c[r]);
        out << "\n";
    }
    write_text_file(path, out.str());
}

// ---- stages -------------------------------------------------------------------

void stage_ingest(const RunConfig& cfg) {
    const fs::path dir = fresh_stage_dir(cfg, Stage::Ingest);
    json inputs = json::object();
    std::vector<std::string> outputs;

    auto prices = ingest::load_price_series(cfg.prices);
    ingest::save_price_series(prices, dir / "prices.csv");
    inputs["prices"] = sha256_file(cfg.prices);
    outputs.push_back("prices.csv");

    auto other = ingest::load_price_series(cfg.other_prices);
    ingest::save_price_series(other, dir / "other_prices.csv");
    inputs["other_prices"] = sha256_file(cfg.other_prices);
    outputs.push_back("other_prices.csv");

    if (cfg.blockchain) {
        save_dated_table(ingest::load_dated_table(*cfg.blockchain), dir / "blockchain.csv");
        inputs["blockchain"] = sha256_file(*cfg.blockchain);
        outputs.push_back("blockchain.csv");
    }
    if (cfg.macro) {
        save_dated_table(ingest::load_dated_table(*cfg.macro), dir / "macro.csv");
        inputs["macro"] = sha256_file(*cfg.macro);
        outputs.push_back("macro.csv");
    }
    json info = json::object();
    if (cfg.posts) {
        auto posts = ingest::load_posts(*cfg.posts);
        std::vector<TextPost> mine;
        for (auto& p : posts) {
            if (p.currency == cfg.currency) mine.push_back(std::move(p));
        }
        auto kept = ingest::filter_posts(mine, cfg.filters);
        ingest::save_posts(kept, dir / "posts.jsonl");
        inputs["posts"] = sha256_file(*cfg.posts);
        outputs.push_back("posts.jsonl");
        info["posts_read"] = posts.size();
        info["posts_kept"] = kept.size();
    }
    write_manifest(cfg, Stage::Ingest, inputs, outputs, info);
}

void stage_label(const RunConfig& cfg) {
    const json ingest_m = require(cfg, Stage::Ingest);
    const fs::path dir = fresh_stage_dir(cfg, Stage::Label);
    json inputs{{"ingest/prices.csv", output_sha(ingest_m, "prices.csv")}};
    if (!cfg.sentiment) {
        write_manifest(cfg, Stage::Label, inputs, {}, {{"skipped", "sentiment features disabled"}});
        return;
    }
    const fs::path in_dir = stage_dir(cfg, Stage::Ingest);
    inputs["ingest/posts.jsonl"] = output_sha(ingest_m, "posts.jsonl");
    const auto posts = ingest::load_posts(in_dir / "posts.jsonl");

    std::vector<std::vector<Label>> votes;
    for (std::size_t c = 0; c < cfg.classifiers.size(); ++c) {
        const auto& cc = cfg.classifiers[c];
        std::vector<Label> labels;
        labels.reserve(posts.size());
        if (cc.type == "lexicon") {
            const auto lex = sentiment::load_lexicon(cc.lexicon);
            inputs["lexicon_" + std::to_string(c)] = sha256_file(cc.lexicon);
            for (const auto& p : posts) labels.push_back(sentiment::lexicon_classify(p, lex).value);
        } else {
            sentiment::ProtocolOptions opt;
            opt.batch_size = cc.batch_size;
            for (const auto& l : sentiment::classify_via_protocol(cc.command, posts, opt)) labels.push_back(l.value);
        }
        votes.push_back(std::move(labels));
    }
    std::vector<Label> final_labels(posts.size());
    for (std::size_t i = 0; i < posts.size(); ++i) {
        std::vector<Label> ballot;
        for (const auto& v : votes) ballot.push_back(v[i]);
        final_labels[i] = ballot.size() == 1 ? ballot[0] : sentiment::majority_vote(ballot, cfg.bias);
    }

    std::ostringstream lab;
    lab << "id,label\n";
    for (std::size_t i = 0; i < posts.size(); ++i) lab << posts[i].id << ',' << to_string(final_labels[i]) << "\n";
    write_text_file(dir / "labels.csv", lab.str());

    const auto prices = ingest::load_price_series(in_dir / "prices.csv");
    const auto daily = sentiment::aggregate_daily(posts, final_labels, prices.dates());
    std::ostringstream d;
    d << "date,source,pos,neu,neg,score\n";
    for (const auto& r : daily) {
        d << format_date(r.date) << ',' << to_string(r.source) << ',' << r.pos << ',' << r.neu << ',' << r.neg << ','
          << format_double(r.score) << "\n";
    }
    write_text_file(dir / "daily.csv", d.str());
    write_manifest(cfg, Stage::Label, inputs, {"labels.csv", "daily.csv"}, {{"posts", posts.size()}});
}

std::vector<DailySentiment> load_daily(const fs::path& path) {
    const CsvTable t = read_csv(path);
    std::vector<DailySentiment> out;
    const auto c_date = t.column("date"), c_src = t.column("source"), c_pos = t.column("pos"),
               c_neu = t.column("neu"), c_neg = t.column("neg");
    for (const auto& row : t.rows) {
        DailySentiment d;
        d.date = parse_date(row[c_date]);
        d.source = parse_source(row[c_src]);
        d.pos = std::stoi(row[c_pos]);
        d.neu = std::stoi(row[c_neu]);
        d.neg = std::stoi(row[c_neg]);
        d.score = sentiment::sentiment_score(d.pos, d.neu, d.neg);
        out.push_back(d);
    }
    return out;
}

void stage_features(const RunConfig& cfg) {
    const json ingest_m = require(cfg, Stage::Ingest);
    json label_m;
    if (cfg.sentiment) label_m = require(cfg, Stage::Label);
    const fs::path dir = fresh_stage_dir(cfg, Stage::Features);
    const fs::path in_dir = stage_dir(cfg, Stage::Ingest);
    json inputs = json::object();
    for (const auto& [f, sha] : ingest_m.at("outputs").items()) inputs["ingest/" + f] = sha;

    const auto prices = ingest::load_price_series(in_dir / "prices.csv");
    const auto other = ingest::load_price_series(in_dir / "other_prices.csv");
    auto params = indicators::IndicatorParams::defaults();
    params.override_with(cfg.indicator_params);

    std::vector<IndicatorColumn> lagged, tech;
    std::optional<DatedTable> chain, macro, senti;
    ingest::AssemblyInputs in;
    in.prices = &prices;
    if (cfg.lagged_technicals) {
        lagged = indicators::compute_lagged_technicals(prices, other, params);
        in.lagged_technicals = &lagged;
    }
    if (cfg.technicals) {
        tech = indicators::compute_technicals(prices, params);
        in.technicals = &tech;
    }
    if (cfg.blockchain) {
        chain = ingest::load_dated_table(in_dir / "blockchain.csv");
        in.blockchain = &*chain;
    }
    if (cfg.macro) {
        macro = ingest::load_dated_table(in_dir / "macro.csv");
        in.macro = &*macro;
    }
    if (cfg.sentiment) {
        inputs["label/daily.csv"] = output_sha(label_m, "daily.csv");
        senti = sentiment::build_sentiment_features(load_daily(stage_dir(cfg, Stage::Label) / "daily.csv"));
        in.sentiment = &*senti;
    }
    ingest::AssemblyConfig ac;
    ac.start = cfg.start;
    ac.end = cfg.end;
    ac.price_lags = cfg.price_lags;
    ac.lags = cfg.lags;
    const FeatureMatrix assembled = ingest::assemble_matrix(in, ac);
    const FeatureMatrix standardized = ingest::standardize(assembled, cfg.train_end);
    ingest::save_matrix(standardized, dir / "matrix.csv");
    write_manifest(cfg, Stage::Features, inputs, {"matrix.csv", "matrix.csv.meta.json"},
                   {{"columns", standardized.cols()},
                    {"rows", standardized.rows()},
                    {"first_date", format_date(standardized.dates.front())},
                    {"feature_set", cfg.feature_set}});
}

std::size_t train_rows(const FeatureMatrix& m, Date train_end) {
    std::size_t k = 0;
    while (k < m.rows() && m.dates[k] <= train_end) ++k;
    return k;
}

void stage_select(const RunConfig& cfg) {
    const json feat_m = require(cfg, Stage::Features);
    const fs::path dir = fresh_stage_dir(cfg, Stage::Select);
    const FeatureMatrix m = ingest::load_matrix(stage_dir(cfg, Stage::Features) / "matrix.csv");
    const std::size_t k = train_rows(m, cfg.train_end);
    if (k == 0 || k == m.rows()) fail(ErrorKind::Range, "train_end leaves no training or no test rows");

    VifReport report;
    std::vector<std::string> keep;
    if (cfg.vif_cutoff) {
        // VIF is computed on training rows only so the test period cannot
        // influence which columns survive.
        report = featselect::eliminate_by_vif(m.slice_rows(0, k), *cfg.vif_cutoff);
        std::set<std::string> survivors(report.survivors.begin(), report.survivors.end());
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (m.kinds[c] == ColumnKind::Dummy || survivors.count(m.names[c])) keep.push_back(m.names[c]);
        }
    } else {
        keep = m.names;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (m.kinds[c] == ColumnKind::Continuous) report.survivors.push_back(m.names[c]);
        }
    }
    const FeatureMatrix selected = m.select_columns(keep);
    ingest::save_matrix(selected, dir / "selected.csv");
    write_text_file(dir / "vif.json", report.to_json().dump(1) + "\n");
    write_text_file(dir / "vif.txt", report.to_text());
    write_manifest(cfg, Stage::Select, {{"features/matrix.csv", output_sha(feat_m, "matrix.csv")}},
                   {"selected.csv", "selected.csv.meta.json", "vif.json", "vif.txt"},
                   {{"columns", selected.cols()}, {"removed", report.trace.size()}});
}

void stage_train(const RunConfig& cfg) {
    const json sel_m = require(cfg, Stage::Select);
    const fs::path dir = fresh_stage_dir(cfg, Stage::Train);
    const FeatureMatrix m = ingest::load_matrix(stage_dir(cfg, Stage::Select) / "selected.csv");
    const FeatureMatrix train = m.slice_rows(0, train_rows(m, cfg.train_end));

    std::vector<std::string> outputs;
    json summary = json::object();
    for (std::size_t i = 0; i < cfg.models.size(); ++i) {
        const ModelSpec& spec = cfg.models[i];
        const CvResult cv = models::cv_tune(spec, train, cfg.cv_folds, cfg.cv_repeats, derive_seed(cfg.seed, 2000 + i));
        const TrainedModel model = models::fit(spec, train, cv.candidates[cv.winner]);
        models::save_model(model, dir / ("model_" + spec.name + ".json"));

        std::ostringstream out;
        out << "candidate,hyper,mean,sd,scores\n";
        for (std::size_t c = 0; c < cv.candidates.size(); ++c) {
            std::string h;
            for (const auto& [k, v] : cv.candidates[c]) h += (h.empty() ? "" : ";") + k + "=" + format_double(v);
            out << c << ',' << h << ',' << format_double(cv.mean[c]) << ',' << format_double(cv.sd[c]) << ',';
            for (std::size_t s = 0; s < cv.scores[c].size(); ++s) out << (s ? ";" : "") << format_double(cv.scores[c][s]);
            out << "\n";
        }
        write_text_file(dir / ("cv_" + spec.name + ".csv"), out.str());
        outputs.push_back("model_" + spec.name + ".json");
        outputs.push_back("cv_" + spec.name + ".csv");
        summary[spec.name] = {{"cv_accuracy", cv.mean[cv.winner]}, {"hyper", cv.candidates[cv.winner]}};
    }
    write_text_file(dir / "train.json", summary.dump(1) + "\n");
    outputs.push_back("train.json");
    write_manifest(cfg, Stage::Train, {{"select/selected.csv", output_sha(sel_m, "selected.csv")}}, outputs);
}

void stage_backtest(const RunConfig& cfg) {
    const json train_m = require(cfg, Stage::Train);
    const json sel_m = require(cfg, Stage::Select);
    const json feat_m = require(cfg, Stage::Features);
    const json ingest_m = require(cfg, Stage::Ingest);
    const fs::path dir = fresh_stage_dir(cfg, Stage::Backtest);
    const FeatureMatrix m = ingest::load_matrix(stage_dir(cfg, Stage::Select) / "selected.csv");
    const std::size_t k = train_rows(m, cfg.train_end);
    const FeatureMatrix test = m.slice_rows(k, m.rows());
    const auto prices = ingest::load_price_series(stage_dir(cfg, Stage::Ingest) / "prices.csv");
    std::vector<double> closes;
    for (Date d : test.dates) closes.push_back(prices.bars[*prices.index_of(d)].close);

    const auto frames = backtest::make_frames(test.dates, cfg.frame_len, cfg.frame_shift);
    const json train_summary = json::parse(read_text_file(stage_dir(cfg, Stage::Train) / "train.json"));
    auto frame_closes = [&](const Frame& f) {
        return std::vector<double>(closes.begin() + static_cast<std::ptrdiff_t>(f.first),
                                   closes.begin() + static_cast<std::ptrdiff_t>(f.first + f.length));
    };

    json baselines{{"hold", json::array()}, {"random", json::array()}, {"ideal", json::array()}};
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto c = frame_closes(frames[f]);
        baselines["hold"].push_back(backtest::hold_scenario(c, cfg.cost_rate, cfg.initial).final_value);
        baselines["random"].push_back(backtest::random_scenario(c, cfg.cost_rate, cfg.random_repetitions,
                                                                derive_seed(cfg.seed, 5000 + f), cfg.initial)
                                          .mean_value);
        baselines["ideal"].push_back(backtest::ideal_scenario(c, cfg.cost_rate, cfg.initial).final_value);
    }

    json model_results = json::array();
    std::vector<std::string> outputs;
    const auto gold = models::direction(test.target);
    for (const auto& spec : cfg.models) {
        const TrainedModel model = models::load_model(stage_dir(cfg, Stage::Train) / ("model_" + spec.name + ".json"));
        const auto dirs = models::direction(models::predict(model, test));
        json values = json::array(), costs = json::array(), tx = json::array();
        for (std::size_t f = 0; f < frames.size(); ++f) {
            const auto c = frame_closes(frames[f]);
            const std::vector<Direction> d(dirs.begin() + static_cast<std::ptrdiff_t>(frames[f].first),
                                           dirs.begin() + static_cast<std::ptrdiff_t>(frames[f].first + c.size() - 1));
            const auto ledger = backtest::simulate_strategy(c, d, cfg.cost_rate, cfg.initial);
            values.push_back(ledger.final_value);
            costs.push_back(ledger.total_cost);
            tx.push_back(ledger.transactions());
            if (f == 0) {
                const std::vector<Date> dates(test.dates.begin() + static_cast<std::ptrdiff_t>(frames[f].first),
                                              test.dates.begin() +
                                                  static_cast<std::ptrdiff_t>(frames[f].first + frames[f].length));
                const std::string plot = "plot_" + spec.name + ".csv";
                write_text_file(dir / plot, backtest::plot_data(dates, c, ledger));
                outputs.push_back(plot);
            }
        }
        model_results.push_back({{"name", spec.name},
                                 {"task", to_string(spec.task)},
                                 {"cv_accuracy", train_summary.at(spec.name).at("cv_accuracy")},
                                 {"test_accuracy", models::accuracy(dirs, gold)},
                                 {"values", values},
                                 {"costs", costs},
                                 {"transactions", tx}});
    }
    json frames_json = json::array();
    for (const auto& f : frames) frames_json.push_back({{"first", f.first}, {"start", format_date(f.start)}});
    const json results{{"currency", to_string(cfg.currency)},
                       {"feature_set", cfg.feature_set},
                       {"feature_columns", feat_m.at("info").at("columns")},
                       {"selected_columns", m.cols()},
                       {"frame_len", cfg.frame_len},
                       {"shift", cfg.frame_shift},
                       {"cost_rate", cfg.cost_rate},
                       {"frames", frames_json},
                       {"baselines", baselines},
                       {"models", model_results}};
    write_text_file(dir / "results.json", results.dump(1) + "\n");
    outputs.push_back("results.json");
    write_manifest(cfg, Stage::Backtest,
                   {{"train/train.json", output_sha(train_m, "train.json")},
                    {"select/selected.csv", output_sha(sel_m, "selected.csv")},
                    {"ingest/prices.csv", output_sha(ingest_m, "prices.csv")}},
                   outputs);
}

struct LoadedResults {
    json raw;
    std::vector<Frame> frames;
    std::vector<ModelResult> models;
};

LoadedResults load_results(const fs::path& path) {
    LoadedResults out;
    try {
        out.raw = json::parse(read_text_file(path));
        for (const auto& f : out.raw.at("frames")) {
            out.frames.push_back(Frame{f.at("first").get<std::size_t>(), out.raw.at("frame_len").get<std::size_t>(),
                                       parse_date(f.at("start").get<std::string>())});
        }
        const auto hold = out.raw.at("baselines").at("hold").get<std::vector<double>>();
        const auto random = out.raw.at("baselines").at("random").get<std::vector<double>>();
        for (const auto& mj : out.raw.at("models")) {
            ModelResult r;
            r.currency = out.raw.at("currency");
            r.feature_set = out.raw.at("feature_set");
            r.model = mj.at("name");
            r.model_type = mj.at("task");
            r.train_cv_accuracy = mj.at("cv_accuracy");
            r.test_accuracy = mj.at("test_accuracy");
            r.frame_values = mj.at("values").get<std::vector<double>>();
            r.frame_costs = mj.at("costs").get<std::vector<double>>();
            r.frame_transactions = mj.at("transactions").get<std::vector<std::size_t>>();
            r.gains["hold"] = backtest::gain_ratio_distribution(r.frame_values, hold);
            r.gains["random"] = backtest::gain_ratio_distribution(r.frame_values, random);
            out.models.push_back(std::move(r));
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, path.string() + ": " + e.what());
    }
    return out;
}

void stage_report(const RunConfig& cfg) {
    const json bt_m = require(cfg, Stage::Backtest);
    const json sel_m = require(cfg, Stage::Select);
    const fs::path dir = fresh_stage_dir(cfg, Stage::Report);
    const auto res = load_results(stage_dir(cfg, Stage::Backtest) / "results.json");

    std::vector<std::string> outputs{"models.csv", "summary.csv", "frames.csv", "baselines.csv", "vif.txt"};
    write_text_file(dir / "models.csv", backtest::models_table(res.models));
    write_text_file(dir / "summary.csv", backtest::summary_table(backtest::summarize(res.models)));
    write_text_file(dir / "frames.csv", backtest::frames_table(res.models, res.frames));
    std::ostringstream b;
    b << "frame,start,hold,random,ideal\n";
    const auto& bl = res.raw.at("baselines");
    for (std::size_t f = 0; f < res.frames.size(); ++f) {
        b << f << ',' << format_date(res.frames[f].start) << ',' << format_double(bl.at("hold")[f].get<double>())
          << ',' << format_double(bl.at("random")[f].get<double>()) << ','
          << format_double(bl.at("ideal")[f].get<double>()) << "\n";
    }
    write_text_file(dir / "baselines.csv", b.str());
    fs::copy_file(stage_dir(cfg, Stage::Select) / "vif.txt", dir / "vif.txt", fs::copy_options::overwrite_existing);
    for (const auto& spec : cfg.models) {
        const std::string plot = "plot_" + spec.name + ".csv";
        fs::copy_file(stage_dir(cfg, Stage::Backtest) / plot, dir / plot, fs::copy_options::overwrite_existing);
        outputs.push_back(plot);
    }
    write_manifest(cfg, Stage::Report,
                   {{"backtest/results.json", output_sha(bt_m, "results.json")},
                    {"select/vif.txt", output_sha(sel_m, "vif.txt")}},
                   outputs);
}

}  // namespace

void run_stage(const RunConfig& config, Stage stage) {
    switch (stage) {
        case Stage::Ingest: return stage_ingest(config);
        case Stage::Label: return stage_label(config);
        case Stage::Features: return stage_features(config);
        case Stage::Select: return stage_select(config);
        case Stage::Train: return stage_train(config);
        case Stage::Backtest: return stage_backtest(config);
        case Stage::Report: return stage_report(config);
    }
}

void run_all(const RunConfig& config) {
    for (Stage s : kStages) run_stage(config, s);
}

std::string compare_runs(const fs::path& run_a, const fs::path& run_b) {
    auto results_of = [](const fs::path& run) {
        const fs::path p = run / "backtest" / "results.json";
        if (!fs::exists(p)) fail(ErrorKind::Dependency, "run " + run.string() + " has not completed the backtest stage");
        return load_results(p);
    };
    const auto a = results_of(run_a);
    const auto b = results_of(run_b);
    if (a.raw.at("frame_len") != b.raw.at("frame_len") || a.raw.at("shift") != b.raw.at("shift")) {
        fail(ErrorKind::Comparison, "runs use different frame lengths or shifts");
    }
    if (a.frames.size() != b.frames.size()) fail(ErrorKind::Comparison, "runs cover different frame counts");
    for (std::size_t f = 0; f < a.frames.size(); ++f) {
        if (a.frames[f].start != b.frames[f].start) {
            fail(ErrorKind::Comparison, "frame " + std::to_string(f) + " starts on " + format_date(a.frames[f].start) +
                                            " in one run and " + format_date(b.frames[f].start) + " in the other");
        }
    }

    std::ostringstream out;
    out << "metric,currency,model_type,a,b,delta\n";
    auto row = [&](const std::string& metric, const std::string& cur, const std::string& type, std::optional<double> x,
                   std::optional<double> y) {
        out << metric << ',' << cur << ',' << type << ',' << (x ? format_double(*x) : "") << ','
            << (y ? format_double(*y) : "") << ',' << (x && y ? format_double(*y - *x) : "") << "\n";
    };
    row("feature_columns", "", "", a.raw.at("feature_columns").get<double>(), b.raw.at("feature_columns").get<double>());
    row("selected_columns", "", "", a.raw.at("selected_columns").get<double>(),
        b.raw.at("selected_columns").get<double>());

    using Key = std::pair<std::string, std::string>;
    std::map<Key, SummaryRow> sa, sb;
    for (auto& r : backtest::summarize(a.models)) sa[{r.currency, r.model_type}] = r;
    for (auto& r : backtest::summarize(b.models)) sb[{r.currency, r.model_type}] = r;
    std::set<Key> keys;
    for (const auto& [k, v] : sa) keys.insert(k);
    for (const auto& [k, v] : sb) keys.insert(k);
    for (const auto& k : keys) {
        const SummaryRow* x = sa.count(k) ? &sa.at(k) : nullptr;
        const SummaryRow* y = sb.count(k) ? &sb.at(k) : nullptr;
        auto field = [](const SummaryRow* r, auto get) -> std::optional<double> {
            if (!r) return std::nullopt;
            return get(*r);
        };
        row("mean_train_cv_accuracy", k.first, k.second, field(x, [](auto& r) { return r.mean_train_cv_accuracy; }),
            field(y, [](auto& r) { return r.mean_train_cv_accuracy; }));
        row("mean_test_accuracy", k.first, k.second, field(x, [](auto& r) { return r.mean_test_accuracy; }),
            field(y, [](auto& r) { return r.mean_test_accuracy; }));
        row("mean_output", k.first, k.second, field(x, [](auto& r) { return r.mean_output; }),
            field(y, [](auto& r) { return r.mean_output; }));
        for (const char* base : {"hold", "random"}) {
            row(std::string("pct_outperform_") + base, k.first, k.second,
                field(x, [&](auto& r) { return r.pct_outperform.at(base); }),
                field(y, [&](auto& r) { return r.pct_outperform.at(base); }));
            row(std::string("pct_significant_") + base, k.first, k.second,
                field(x, [&](auto& r) { return r.pct_significant.at(base); }),
                field(y, [&](auto& r) { return r.pct_significant.at(base); }));
        }
    }
    return out.str();
}

}  // namespace sentitrade::pipeline
