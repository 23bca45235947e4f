#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sentitrade/ingest.hpp"

namespace sentitrade {

enum class Label { Positive = 0, Neutral = 1, Negative = 2 };
inline constexpr std::array<Label, 3> kLabels{Label::Positive, Label::Neutral, Label::Negative};

std::string_view to_string(Label label);
Label parse_label(std::string_view text);  // "positive" | "neutral" | "negative"

struct SentimentLabel {
    Label value = Label::Neutral;
    std::optional<std::array<double, 3>> scores;  // positive, neutral, negative
};

enum class VoteBias { Neutrality, Polarity };
VoteBias parse_bias(std::string_view text);  // "nb" | "pb"

struct DailySentiment {
    Date date;
    Source source = Source::News;
    int pos = 0;
    int neu = 0;
    int neg = 0;
    double score = 0;
};

struct ClassifierMetrics {
    double accuracy = 0;
    double macro_precision = 0;
    double macro_recall = 0;
    /// Unweighted mean of per-class F1.
    double macro_f1 = 0;
    /// Harmonic mean of macro precision and macro recall, the other common
    /// reading of "macro F1".
    double f1_of_macro = 0;
    std::array<double, 3> precision{};
    std::array<double, 3> recall{};
    std::array<double, 3> f1{};
    std::array<std::array<std::int64_t, 3>, 3> confusion{};  // [gold][pred]
};

namespace sentiment {

Label majority_vote(const std::vector<Label>& labels, VoteBias bias);
SentimentLabel majority_vote(const std::vector<SentimentLabel>& labels, VoteBias bias);

/// (pos - neg) / (pos + neu + neg); 0 for an empty day.
double sentiment_score(int pos, int neu, int neg);

/// One record per calendar date and source, in (date, source) order. Posts
/// dated outside the calendar are ignored.
std::vector<DailySentiment> aggregate_daily(const std::vector<TextPost>& posts, const std::vector<Label>& labels,
                                            const std::vector<Date>& calendar);

inline const std::array<const char*, 6> kFeatureNames{"count_news",  "count_tweets", "count_reddit",
                                                      "score_news",  "score_tweets", "score_reddit"};
DatedTable build_sentiment_features(const std::vector<DailySentiment>& daily);

using Lexicon = std::map<std::string, double>;
/// `token,polarity` lines; `#` starts a comment.
Lexicon load_lexicon(const std::filesystem::path& path);
std::vector<std::string> tokenize(const std::string& text);
SentimentLabel lexicon_classify(const std::string& text, const Lexicon& lexicon);
SentimentLabel lexicon_classify(const TextPost& post, const Lexicon& lexicon);

struct ProtocolOptions {
    std::size_t batch_size = 32;
};

/// Sends {id, text} lines to a child process speaking the classifier
/// protocol and joins the {id, label, scores?} answers back by id.
std::vector<SentimentLabel> classify_via_protocol(const std::vector<std::string>& command,
                                                  const std::vector<TextPost>& posts,
                                                  const ProtocolOptions& options = {});

std::vector<std::size_t> agreement_filter(const std::vector<Label>& a, const std::vector<Label>& b);

/// Stratifies posts by (label, source, currency) and draws `target` of them
/// as evenly as availability allows. Returns indices in input order.
std::vector<std::size_t> balanced_sample(const std::vector<TextPost>& posts, const std::vector<Label>& labels,
                                         std::size_t target, std::uint64_t seed);

/// Manual-evaluation sample: a third where every model agrees with the weak
/// label, a third where the context model departs from the weak label, and a
/// third where the three base models all disagree. `models` holds exactly
/// three prediction vectors; `context` indexes the context model.
std::vector<std::size_t> eval_sample(const std::vector<TextPost>& posts, const std::vector<Label>& weak,
                                     const std::vector<std::vector<Label>>& models, std::size_t context,
                                     std::size_t target, std::uint64_t seed);

ClassifierMetrics score_classifier(const std::vector<Label>& pred, const std::vector<Label>& gold);

}  // namespace sentiment
}  // namespace sentitrade
