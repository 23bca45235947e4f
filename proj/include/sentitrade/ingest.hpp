#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sentitrade/date.hpp"
#include "sentitrade/indicator_column.hpp"

namespace sentitrade {

struct PriceBar {
    Date date;
    double open = 0;
    double high = 0;
    double low = 0;
    double close = 0;
    double adj_close = 0;
    double volume = 0;
};

/// Bars with strictly increasing dates; every bar satisfies the OHLC
/// ordering and non-negative volume.
struct PriceSeries {
    std::vector<PriceBar> bars;

    std::size_t size() const { return bars.size(); }
    bool empty() const { return bars.empty(); }
    std::vector<Date> dates() const;
    std::vector<double> closes() const;
    std::optional<std::size_t> index_of(Date d) const;
};

/// r_t = (C_{t+1} - C_t) / C_t, keyed by t.
struct ReturnSeries {
    std::vector<Date> dates;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

enum class Source { News, Reddit, Twitter };
enum class Currency { BTC, ETH };

std::string_view to_string(Source s);
std::string_view to_string(Currency c);
Source parse_source(std::string_view text);
Currency parse_currency(std::string_view text);

struct TextPost {
    std::string id;
    Timestamp timestamp;
    Source source = Source::News;
    Currency currency = Currency::BTC;
    std::string text;
    std::map<std::string, std::int64_t> engagement;
};

/// A dated numeric table as found in the blockchain and macro inputs.
struct DatedTable {
    std::vector<Date> dates;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;  // columns[c][row]
};

struct ColumnStats {
    double mean = 0;
    double sd = 1;
};

/// Dated design matrix. Column-major; `target` is aligned with `dates` and may
/// be empty for matrices that only carry features.
struct FeatureMatrix {
    std::vector<Date> dates;
    std::vector<std::string> names;
    std::vector<ColumnKind> kinds;
    std::vector<std::vector<double>> columns;
    std::vector<double> target;
    std::optional<Date> train_end;
    std::map<std::string, ColumnStats> stats;

    std::size_t rows() const { return dates.size(); }
    std::size_t cols() const { return names.size(); }
    std::size_t index_of(std::string_view name) const;  // throws Name
    bool has_column(std::string_view name) const;
    const std::vector<double>& column(std::string_view name) const { return columns[index_of(name)]; }

    /// Appends a column, enforcing unique names and row count.
    void add_column(std::string name, ColumnKind kind, std::vector<double> values);
    /// Keeps rows [first, last).
    FeatureMatrix slice_rows(std::size_t first, std::size_t last) const;
    FeatureMatrix select_columns(const std::vector<std::string>& keep) const;
    FeatureMatrix drop_columns(const std::vector<std::string>& drop) const;
    std::vector<double> row(std::size_t r) const;
};

namespace ingest {

/// Maps the roles of a price file onto its header names. An empty
/// `adj_close` means the file has none and close is reused.
struct PriceSchema {
    std::string date = "date";
    std::string open = "open";
    std::string high = "high";
    std::string low = "low";
    std::string close = "close";
    std::string adj_close = "adj_close";
    std::string volume = "volume";
};

void validate_bar(const PriceBar& bar, const std::string& where);
PriceSeries load_price_series(const std::filesystem::path& path, const PriceSchema& schema = {});
void save_price_series(const PriceSeries& series, const std::filesystem::path& path);

ReturnSeries compute_returns(const PriceSeries& series);

struct SourceRule {
    std::map<std::string, std::int64_t> min_engagement;
    std::size_t min_length = 0;
    bool reject_url_only = false;
};

struct FilterRules {
    std::map<Source, SourceRule> per_source;
};

/// Keeps posts passing their source's rule. News is never filtered on
/// engagement; its length and URL rules still apply when configured.
std::vector<TextPost> filter_posts(const std::vector<TextPost>& posts, const FilterRules& rules);

bool is_bare_url(std::string_view text);

std::vector<TextPost> load_posts(const std::filesystem::path& path,
                                 std::optional<std::pair<Date, Date>> range = std::nullopt);
void save_posts(const std::vector<TextPost>& posts, const std::filesystem::path& path);

/// For each column c and lag k > 0 adds `c_lag_k`, then drops the leading
/// max(lags) rows which lack a full history.
FeatureMatrix add_lags(const FeatureMatrix& matrix, const std::vector<std::string>& columns,
                       const std::vector<int>& lags);

inline constexpr std::array<const char*, 7> kWeekdayNames{"mon", "tue", "wed", "thu", "fri", "sat", "sun"};
FeatureMatrix weekday_dummies(const std::vector<Date>& dates);

/// z-scores continuous columns with the mean and population sd of rows dated
/// on or before `train_end`; test rows reuse the training statistics.
FeatureMatrix standardize(const FeatureMatrix& matrix, Date train_end);

std::pair<FeatureMatrix, FeatureMatrix> split_train_test(const FeatureMatrix& matrix, Date boundary);

DatedTable load_dated_table(const std::filesystem::path& path, const std::string& date_column = "date");
/// Carries the last observation forward onto every date of `calendar`.
/// Calendar dates before the first observation stay NaN.
DatedTable forward_fill(const DatedTable& table, const std::vector<Date>& calendar);

struct AssemblyConfig {
    Date start;
    Date end;
    std::vector<int> price_lags{0, 1, 2};
    std::vector<int> lags{0, 1, 2};
};

struct AssemblyInputs {
    const PriceSeries* prices = nullptr;
    const DatedTable* blockchain = nullptr;  // optional
    const DatedTable* macro = nullptr;       // optional (inventory may exclude it)
    const std::vector<IndicatorColumn>* lagged_technicals = nullptr;
    const std::vector<IndicatorColumn>* technicals = nullptr;
    const DatedTable* sentiment = nullptr;  // optional
};

/// Aligns every source onto the daily calendar [start, end], adds lags,
/// weekday dummies and the next-day return target, and drops leading rows
/// whose features are still warming up. A gap anywhere else is an alignment
/// error.
FeatureMatrix assemble_matrix(const AssemblyInputs& inputs, const AssemblyConfig& config);

/// Persists values as CSV and column kinds, split and statistics as a JSON
/// sidecar at `<path>.meta.json`.
void save_matrix(const FeatureMatrix& matrix, const std::filesystem::path& path);
FeatureMatrix load_matrix(const std::filesystem::path& path);

}  // namespace ingest
}  // namespace sentitrade
