#include "sentitrade/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sentitrade/error.hpp"
#include "sentitrade/process.hpp"
#include "sentitrade/util.hpp"

namespace sentitrade {

using json = nlohmann::json;

std::string_view to_string(Label label) {
    switch (label) {
        case Label::Positive: return "positive";
        case Label::Neutral: return "neutral";
        case Label::Negative: return "negative";
    }
    return "?";
}

Label parse_label(std::string_view text) {
    if (text == "positive") return Label::Positive;
    if (text == "neutral") return Label::Neutral;
    if (text == "negative") return Label::Negative;
    fail(ErrorKind::Validation, "unknown sentiment label '" + std::string(text) + "'");
}

VoteBias parse_bias(std::string_view text) {
    std::string t = to_lower(text);
    if (t == "nb" || t == "neutrality") return VoteBias::Neutrality;
    if (t == "pb" || t == "polarity") return VoteBias::Polarity;
    fail(ErrorKind::Validation, "unknown vote bias '" + std::string(text) + "'");
}

namespace sentiment {

namespace {
std::size_t idx(Label l) { return static_cast<std::size_t>(l); }
}  // namespace

Label majority_vote(const std::vector<Label>& labels, VoteBias bias) {
    if (labels.empty()) fail(ErrorKind::Argument, "majority_vote needs at least one label");
    std::array<int, 3> count{};
    for (Label l : labels) ++count[idx(l)];
    const int top = *std::max_element(count.begin(), count.end());
    const bool pos = count[idx(Label::Positive)] == top;
    const bool neu = count[idx(Label::Neutral)] == top;
    const bool neg = count[idx(Label::Negative)] == top;
    const int leaders = pos + neu + neg;
    if (leaders == 1) return pos ? Label::Positive : (neu ? Label::Neutral : Label::Negative);
    if (leaders == 3) return Label::Neutral;
    if (pos && neg) return Label::Neutral;
    // neutral tied with exactly one polar class
    if (bias == VoteBias::Neutrality) return Label::Neutral;
    return pos ? Label::Positive : Label::Negative;
}

SentimentLabel majority_vote(const std::vector<SentimentLabel>& labels, VoteBias bias) {
    std::vector<Label> values;
    values.reserve(labels.size());
    for (const auto& l : labels) values.push_back(l.value);
    return SentimentLabel{majority_vote(values, bias), std::nullopt};
}

double sentiment_score(int pos, int neu, int neg) {
    if (pos < 0 || neu < 0 || neg < 0) fail(ErrorKind::Argument, "negative sentiment count");
    const int total = pos + neu + neg;
    if (total == 0) return 0.0;
    return static_cast<double>(pos - neg) / static_cast<double>(total);
}

std::vector<DailySentiment> aggregate_daily(const std::vector<TextPost>& posts, const std::vector<Label>& labels,
                                            const std::vector<Date>& calendar) {
    if (posts.size() != labels.size()) fail(ErrorKind::Argument, "posts and labels differ in length");
    constexpr std::array<Source, 3> sources{Source::News, Source::Twitter, Source::Reddit};
    std::map<Date, std::size_t> row;
    for (std::size_t i = 0; i < calendar.size(); ++i) row[calendar[i]] = i;
    std::vector<std::array<std::array<int, 3>, 3>> counts(calendar.size());  // [row][source][label]
    for (auto& c : counts) c = {};
    auto source_slot = [&](Source s) {
        return static_cast<std::size_t>(std::find(sources.begin(), sources.end(), s) - sources.begin());
    };
    for (std::size_t i = 0; i < posts.size(); ++i) {
        auto it = row.find(day_of(posts[i].timestamp));
        if (it == row.end()) continue;
        ++counts[it->second][source_slot(posts[i].source)][idx(labels[i])];
    }
    std::vector<DailySentiment> out;
    out.reserve(calendar.size() * 3);
    for (std::size_t r = 0; r < calendar.size(); ++r) {
        for (Source s : sources) {
            const auto& c = counts[r][source_slot(s)];
            DailySentiment d;
            d.date = calendar[r];
            d.source = s;
            d.pos = c[idx(Label::Positive)];
            d.neu = c[idx(Label::Neutral)];
            d.neg = c[idx(Label::Negative)];
            d.score = sentiment_score(d.pos, d.neu, d.neg);
            out.push_back(d);
        }
    }
    return out;
}

DatedTable build_sentiment_features(const std::vector<DailySentiment>& daily) {
    std::map<Date, std::map<Source, const DailySentiment*>> by_date;
    for (const auto& d : daily) {
        if (!by_date[d.date].emplace(d.source, &d).second) {
            fail(ErrorKind::Configuration, "duplicate sentiment record for " + format_date(d.date) + " " +
                                               std::string(to_string(d.source)));
        }
    }
    DatedTable t;
    t.names.assign(kFeatureNames.begin(), kFeatureNames.end());
    t.columns.assign(6, {});
    constexpr std::array<Source, 3> order{Source::News, Source::Twitter, Source::Reddit};
    for (const auto& [date, per_source] : by_date) {
        t.dates.push_back(date);
        for (std::size_t k = 0; k < 3; ++k) {
            auto it = per_source.find(order[k]);
            if (it == per_source.end()) {
                fail(ErrorKind::Configuration, "no " + std::string(to_string(order[k])) + " sentiment record for " +
                                                   format_date(date));
            }
            const DailySentiment& d = *it->second;
            t.columns[k].push_back(static_cast<double>(d.pos + d.neu + d.neg));
            t.columns[k + 3].push_back(d.score);
        }
    }
    return t;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    Lexicon lex;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto parts = split(t, ',');
        double v;
        if (parts.size() != 2 || !parse_double(trim(parts[1]), v)) {
            fail(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": expected token,polarity");
        }
        lex[to_lower(trim(parts[0]))] = v;
    }
    if (lex.empty()) fail(ErrorKind::Validation, path.string() + ": empty lexicon");
    return lex;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c >= 0x80 || c == '\'') {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

SentimentLabel lexicon_classify(const std::string& text, const Lexicon& lexicon) {
    if (lexicon.empty()) fail(ErrorKind::Argument, "lexicon is empty");
    double sum = 0;
    for (const auto& tok : tokenize(text)) {
        auto it = lexicon.find(tok);
        if (it != lexicon.end()) sum += it->second;
    }
    SentimentLabel out;
    out.value = sum > 0 ? Label::Positive : (sum < 0 ? Label::Negative : Label::Neutral);
    return out;
}

SentimentLabel lexicon_classify(const TextPost& post, const Lexicon& lexicon) {
    return lexicon_classify(post.text, lexicon);
}

std::vector<SentimentLabel> classify_via_protocol(const std::vector<std::string>& command,
                                                  const std::vector<TextPost>& posts,
                                                  const ProtocolOptions& options) {
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (!position.emplace(posts[i].id, i).second) {
            fail(ErrorKind::Argument, "duplicate post id '" + posts[i].id + "' in classification request");
        }
    }
    std::vector<std::optional<SentimentLabel>> result(posts.size());
    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    std::vector<std::string> requests;
    requests.reserve(posts.size() + posts.size() / batch + 1);
    for (std::size_t start = 0; start < posts.size(); start += batch) {
        const std::size_t stop = std::min(posts.size(), start + batch);
        for (std::size_t i = start; i < stop; ++i) {
            requests.push_back(json{{"id", posts[i].id}, {"text", posts[i].text}}.dump());
        }
        requests.emplace_back();  // blank line closes the batch
    }

    ChildProcess child(command);
    exchange_lines(child, requests, [&](const std::string& line, std::size_t line_no) {
        const std::string where = "classifier response line " + std::to_string(line_no);
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
        auto pos = position.find(id);
        if (pos == position.end()) fail(ErrorKind::Correlation, where + ": unknown id '" + id + "'");
        if (result[pos->second]) fail(ErrorKind::Correlation, where + ": repeated id '" + id + "'");
        if (!resp.contains("label") || !resp["label"].is_string()) fail(ErrorKind::Protocol, where + ": missing label");
        SentimentLabel label;
        try {
            label.value = parse_label(resp["label"].get<std::string>());
        } catch (const Error&) {
            fail(ErrorKind::Protocol, where + ": invalid label");
        }
        if (resp.contains("scores") && !resp["scores"].is_null()) {
            const auto& sc = resp["scores"];
            std::array<double, 3> s{};
            double total = 0;
            for (Label l : kLabels) {
                const std::string key(to_string(l));
                if (!sc.is_object() || !sc.contains(key) || !sc[key].is_number()) {
                    fail(ErrorKind::Protocol, where + ": scores must give a number for every class");
                }
                s[idx(l)] = sc[key].get<double>();
                total += s[idx(l)];
            }
            if (std::abs(total - 1.0) > 1e-6) fail(ErrorKind::Protocol, where + ": scores do not sum to 1");
            label.scores = s;
        }
        result[pos->second] = label;
    });
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (!result[i]) fail(ErrorKind::Correlation, "no classifier response for id '" + posts[i].id + "'");
    }
    std::vector<SentimentLabel> out;
    out.reserve(posts.size());
    for (const auto& r : result) out.push_back(*r);
    return out;
}

std::vector<std::size_t> agreement_filter(const std::vector<Label>& a, const std::vector<Label>& b) {
    if (a.size() != b.size()) fail(ErrorKind::Argument, "agreement_filter: label lists differ in length");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) out.push_back(i);
    }
    return out;
}

namespace {

std::size_t stratum_of(const TextPost& post, Label label) {
    return (idx(label) * 3 + static_cast<std::size_t>(post.source)) * 2 + static_cast<std::size_t>(post.currency);
}
constexpr std::size_t kStrata = 18;

std::vector<std::size_t> balanced_subset(const std::vector<TextPost>& posts, const std::vector<Label>& labels,
                                         const std::vector<std::size_t>& eligible, std::size_t target,
                                         std::uint64_t seed) {
    std::array<std::vector<std::size_t>, kStrata> pools;
    for (std::size_t i : eligible) pools[stratum_of(posts[i], labels[i])].push_back(i);
    for (std::size_t s = 0; s < kStrata; ++s) {
        Rng rng(derive_seed(seed, 100 + s));
        rng.shuffle(pools[s]);
    }
    std::vector<std::size_t> order(kStrata);
    for (std::size_t s = 0; s < kStrata; ++s) order[s] = s;
    Rng rng(derive_seed(seed, 1));
    rng.shuffle(order);

    std::array<std::size_t, kStrata> taken{};
    std::size_t allocated = 0;
    while (allocated < target) {
        bool progressed = false;
        for (std::size_t s : order) {
            if (allocated == target) break;
            if (taken[s] < pools[s].size()) {
                ++taken[s];
                ++allocated;
                progressed = true;
            }
        }
        if (!progressed) break;
    }
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < kStrata; ++s) out.insert(out.end(), pools[s].begin(), pools[s].begin() + taken[s]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<std::size_t> balanced_sample(const std::vector<TextPost>& posts, const std::vector<Label>& labels,
                                         std::size_t target, std::uint64_t seed) {
    if (posts.size() != labels.size()) fail(ErrorKind::Argument, "posts and labels differ in length");
    if (target > posts.size()) {
        fail(ErrorKind::Capacity, "balanced_sample: target " + std::to_string(target) + " exceeds the " +
                                      std::to_string(posts.size()) + " available posts");
    }
    std::vector<std::size_t> all(posts.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return balanced_subset(posts, labels, all, target, seed);
}

std::vector<std::size_t> eval_sample(const std::vector<TextPost>& posts, const std::vector<Label>& weak,
                                     const std::vector<std::vector<Label>>& models, std::size_t context,
                                     std::size_t target, std::uint64_t seed) {
    if (models.size() != 3) fail(ErrorKind::Argument, "eval_sample needs exactly three model prediction lists");
    if (context >= models.size()) fail(ErrorKind::Argument, "eval_sample: context model index out of range");
    if (weak.size() != posts.size()) fail(ErrorKind::Argument, "weak labels and posts differ in length");
    for (const auto& m : models) {
        if (m.size() != posts.size()) fail(ErrorKind::Argument, "model predictions and posts differ in length");
    }
    const std::array<const char*, 3> names{"all-models-agree", "context-differs-from-weak", "base-models-disagree"};
    auto eligible = [&](int third, std::size_t i) {
        switch (third) {
            case 0:
                return models[0][i] == weak[i] && models[1][i] == weak[i] && models[2][i] == weak[i];
            case 1:
                return models[context][i] != weak[i];
            default:
                return models[0][i] != models[1][i] && models[1][i] != models[2][i] && models[0][i] != models[2][i];
        }
    };
    std::vector<bool> chosen(posts.size(), false);
    std::vector<std::size_t> out;
    for (int third = 0; third < 3; ++third) {
        const std::size_t quota = target / 3 + (static_cast<std::size_t>(third) < target % 3 ? 1 : 0);
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < posts.size(); ++i) {
            if (!chosen[i] && eligible(third, i)) pool.push_back(i);
        }
        if (pool.size() < quota || (pool.empty() && target > 0)) {
            fail(ErrorKind::Capacity, std::string("eval_sample: third '") + names[third] + "' has " +
                                          std::to_string(pool.size()) + " eligible posts, needs " +
                                          std::to_string(quota));
        }
        for (std::size_t i : balanced_subset(posts, weak, pool, quota, derive_seed(seed, 10 + third))) {
            chosen[i] = true;
            out.push_back(i);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

ClassifierMetrics score_classifier(const std::vector<Label>& pred, const std::vector<Label>& gold) {
    if (pred.size() != gold.size()) fail(ErrorKind::Argument, "score_classifier: lists differ in length");
    if (pred.empty()) fail(ErrorKind::Argument, "score_classifier: no predictions");
    ClassifierMetrics m;
    for (std::size_t i = 0; i < pred.size(); ++i) ++m.confusion[idx(gold[i])][idx(pred[i])];
    std::int64_t trace = 0;
    for (std::size_t k = 0; k < 3; ++k) trace += m.confusion[k][k];
    m.accuracy = static_cast<double>(trace) / static_cast<double>(pred.size());
    for (std::size_t k = 0; k < 3; ++k) {
        std::int64_t predicted = 0, actual = 0;
        for (std::size_t j = 0; j < 3; ++j) {
            predicted += m.confusion[j][k];
            actual += m.confusion[k][j];
        }
        const double tp = static_cast<double>(m.confusion[k][k]);
        m.precision[k] = predicted > 0 ? tp / static_cast<double>(predicted) : 0.0;
        m.recall[k] = actual > 0 ? tp / static_cast<double>(actual) : 0.0;
        const double pr = m.precision[k] + m.recall[k];
        m.f1[k] = pr > 0 ? 2 * m.precision[k] * m.recall[k] / pr : 0.0;
    }
    m.macro_precision = (m.precision[0] + m.precision[1] + m.precision[2]) / 3.0;
    m.macro_recall = (m.recall[0] + m.recall[1] + m.recall[2]) / 3.0;
    m.macro_f1 = (m.f1[0] + m.f1[1] + m.f1[2]) / 3.0;
    const double pr = m.macro_precision + m.macro_recall;
    m.f1_of_macro = pr > 0 ? 2 * m.macro_precision * m.macro_recall / pr : 0.0;
    return m;
}

}  // namespace sentiment
}  // namespace sentitrade
