#include "sentitrade/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sentitrade/error.hpp"
#include "sentitrade/util.hpp"

namespace sentitrade {

using json = nlohmann::json;

std::vector<Date> PriceSeries::dates() const {
    std::vector<Date> out;
    out.reserve(bars.size());
    for (const auto& b : bars) out.push_back(b.date);
    return out;
}

std::vector<double> PriceSeries::closes() const {
    std::vector<double> out;
    out.reserve(bars.size());
    for (const auto& b : bars) out.push_back(b.close);
    return out;
}

std::optional<std::size_t> PriceSeries::index_of(Date d) const {
    auto it = std::lower_bound(bars.begin(), bars.end(), d,
                               [](const PriceBar& b, Date x) { return b.date < x; });
    if (it == bars.end() || it->date != d) return std::nullopt;
    return static_cast<std::size_t>(it - bars.begin());
}

std::string_view to_string(Source s) {
    switch (s) {
        case Source::News: return "news";
        case Source::Reddit: return "reddit";
        case Source::Twitter: return "twitter";
    }
    return "?";
}

std::string_view to_string(Currency c) { return c == Currency::BTC ? "BTC" : "ETH"; }

Source parse_source(std::string_view text) {
    std::string t = to_lower(text);
    if (t == "news") return Source::News;
    if (t == "reddit") return Source::Reddit;
    if (t == "twitter") return Source::Twitter;
    fail(ErrorKind::Validation, "unknown source '" + std::string(text) + "'");
}

Currency parse_currency(std::string_view text) {
    if (text == "BTC") return Currency::BTC;
    if (text == "ETH") return Currency::ETH;
    fail(ErrorKind::Validation, "unknown currency '" + std::string(text) + "'");
}

std::size_t FeatureMatrix::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    fail(ErrorKind::Name, "unknown column '" + std::string(name) + "'");
}

bool FeatureMatrix::has_column(std::string_view name) const {
    return std::find(names.begin(), names.end(), name) != names.end();
}

void FeatureMatrix::add_column(std::string name, ColumnKind kind, std::vector<double> values) {
    if (values.size() != dates.size()) {
        fail(ErrorKind::Argument, "column '" + name + "' has " + std::to_string(values.size()) +
                                      " rows, matrix has " + std::to_string(dates.size()));
    }
    if (has_column(name)) fail(ErrorKind::Name, "duplicate column '" + name + "'");
    names.push_back(std::move(name));
    kinds.push_back(kind);
    columns.push_back(std::move(values));
}

FeatureMatrix FeatureMatrix::slice_rows(std::size_t first, std::size_t last) const {
    if (first > last || last > rows()) fail(ErrorKind::Range, "row slice out of range");
    FeatureMatrix out;
    out.dates.assign(dates.begin() + first, dates.begin() + last);
    out.names = names;
    out.kinds = kinds;
    out.columns.reserve(columns.size());
    for (const auto& c : columns) out.columns.emplace_back(c.begin() + first, c.begin() + last);
    if (!target.empty()) out.target.assign(target.begin() + first, target.begin() + last);
    out.train_end = train_end;
    out.stats = stats;
    return out;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::string>& keep) const {
    FeatureMatrix out;
    out.dates = dates;
    out.target = target;
    out.train_end = train_end;
    for (const auto& name : keep) {
        std::size_t i = index_of(name);
        out.names.push_back(names[i]);
        out.kinds.push_back(kinds[i]);
        out.columns.push_back(columns[i]);
        if (auto it = stats.find(name); it != stats.end()) out.stats.insert(*it);
    }
    return out;
}

FeatureMatrix FeatureMatrix::drop_columns(const std::vector<std::string>& drop) const {
    std::set<std::string> dropped(drop.begin(), drop.end());
    for (const auto& d : drop) index_of(d);
    std::vector<std::string> keep;
    for (const auto& n : names) {
        if (!dropped.count(n)) keep.push_back(n);
    }
    return select_columns(keep);
}

std::vector<double> FeatureMatrix::row(std::size_t r) const {
    std::vector<double> out(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) out[c] = columns[c][r];
    return out;
}

namespace ingest {

void validate_bar(const PriceBar& bar, const std::string& where) {
    auto bad = [&](const std::string& what) {
        fail(ErrorKind::Validation, where + " (" + format_date(bar.date) + "): " + what);
    };
    for (double v : {bar.open, bar.high, bar.low, bar.close, bar.adj_close, bar.volume}) {
        if (!std::isfinite(v)) bad("non-finite value");
    }
    if (bar.low > bar.high) bad("low > high");
    if (bar.low > std::min(bar.open, bar.close)) bad("low above min(open, close)");
    if (bar.high < std::max(bar.open, bar.close)) bad("high below max(open, close)");
    if (bar.volume < 0) bad("negative volume");
}

PriceSeries load_price_series(const std::filesystem::path& path, const PriceSchema& schema) {
    CsvTable table = read_csv(path);
    const std::size_t c_date = table.column(schema.date);
    const std::size_t c_open = table.column(schema.open);
    const std::size_t c_high = table.column(schema.high);
    const std::size_t c_low = table.column(schema.low);
    const std::size_t c_close = table.column(schema.close);
    const std::size_t c_volume = table.column(schema.volume);
    std::optional<std::size_t> c_adj;
    if (!schema.adj_close.empty() && table.has_column(schema.adj_close)) c_adj = table.column(schema.adj_close);

    PriceSeries series;
    series.bars.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path.filename().string() + " row " + std::to_string(r + 1);
        auto num = [&](std::size_t c) {
            double v;
            if (!parse_double(row[c], v)) {
                fail(ErrorKind::Format, path.string() + ":" + std::to_string(table.line_numbers[r]) +
                                            ": cannot parse '" + row[c] + "' in column " + table.header[c]);
            }
            return v;
        };
        PriceBar bar;
        try {
            bar.date = parse_date(row[c_date]);
        } catch (const Error& e) {
            fail(ErrorKind::Format, path.string() + ":" + std::to_string(table.line_numbers[r]) + ": " + e.what());
        }
        bar.open = num(c_open);
        bar.high = num(c_high);
        bar.low = num(c_low);
        bar.close = num(c_close);
        bar.adj_close = c_adj ? num(*c_adj) : bar.close;
        bar.volume = num(c_volume);
        validate_bar(bar, where);
        series.bars.push_back(bar);
    }
    std::stable_sort(series.bars.begin(), series.bars.end(),
                     [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < series.bars.size(); ++i) {
        if (series.bars[i].date == series.bars[i - 1].date) {
            fail(ErrorKind::Validation, path.filename().string() + ": duplicate date " +
                                            format_date(series.bars[i].date));
        }
    }
    return series;
}

void save_price_series(const PriceSeries& series, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "date,open,high,low,close,adj_close,volume\n";
    for (const auto& b : series.bars) {
        out << format_date(b.date) << ',' << format_double(b.open) << ',' << format_double(b.high) << ','
            << format_double(b.low) << ',' << format_double(b.close) << ',' << format_double(b.adj_close) << ','
            << format_double(b.volume) << '\n';
    }
    write_text_file(path, out.str());
}

ReturnSeries compute_returns(const PriceSeries& series) {
    if (series.size() < 2) {
        fail(ErrorKind::InsufficientData, "returns need at least 2 bars, got " + std::to_string(series.size()));
    }
    ReturnSeries out;
    out.dates.reserve(series.size() - 1);
    out.values.reserve(series.size() - 1);
    for (std::size_t t = 0; t + 1 < series.size(); ++t) {
        const double c0 = series.bars[t].close;
        const double c1 = series.bars[t + 1].close;
        if (c0 <= 0) fail(ErrorKind::Validation, "non-positive close on " + format_date(series.bars[t].date));
        out.dates.push_back(series.bars[t].date);
        out.values.push_back((c1 - c0) / c0);
    }
    return out;
}

bool is_bare_url(std::string_view text) {
    std::string t = trim(text);
    if (t.empty()) return false;
    if (t.find_first_of(" \t\r\n") != std::string::npos) return false;
    std::string lower = to_lower(t);
    return lower.rfind("http://", 0) == 0 || lower.rfind("https://", 0) == 0 || lower.rfind("www.", 0) == 0;
}

namespace {

std::size_t utf8_length(std::string_view text) {
    std::size_t n = 0;
    for (unsigned char c : text) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

}  // namespace

std::vector<TextPost> filter_posts(const std::vector<TextPost>& posts, const FilterRules& rules) {
    std::vector<TextPost> out;
    out.reserve(posts.size());
    for (const auto& post : posts) {
        auto it = rules.per_source.find(post.source);
        if (it == rules.per_source.end()) {
            out.push_back(post);
            continue;
        }
        const SourceRule& rule = it->second;
        bool keep = true;
        if (post.source != Source::News) {
            for (const auto& [metric, minimum] : rule.min_engagement) {
                auto e = post.engagement.find(metric);
                std::int64_t value = e == post.engagement.end() ? 0 : e->second;
                if (value < minimum) {
                    keep = false;
                    break;
                }
            }
        }
        const std::string text = trim(post.text);
        if (keep && utf8_length(text) < rule.min_length) keep = false;
        if (keep && rule.reject_url_only && is_bare_url(text)) keep = false;
        if (keep) out.push_back(post);
    }
    return out;
}

std::vector<TextPost> load_posts(const std::filesystem::path& path, std::optional<std::pair<Date, Date>> range) {
    std::string text = read_text_file(path);
    std::vector<TextPost> posts;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail(ErrorKind::Format, where + ": " + e.what());
        }
        TextPost post;
        try {
            post.id = j.at("id").get<std::string>();
            post.timestamp = parse_timestamp(j.at("timestamp").get<std::string>());
            post.source = parse_source(j.at("source").get<std::string>());
            post.currency = parse_currency(j.at("currency").get<std::string>());
            post.text = j.at("text").get<std::string>();
            if (j.contains("engagement")) {
                for (const auto& [k, v] : j.at("engagement").items()) {
                    post.engagement[k] = v.is_boolean() ? (v.get<bool>() ? 1 : 0) : v.get<std::int64_t>();
                }
            }
        } catch (const json::exception& e) {
            fail(ErrorKind::Format, where + ": " + e.what());
        } catch (const Error& e) {
            fail(e.kind(), where + ": " + e.what());
        }
        if (trim(post.text).empty()) fail(ErrorKind::Validation, where + ": post '" + post.id + "' has empty text");
        if (!seen.insert(post.id).second) fail(ErrorKind::Validation, where + ": duplicate post id '" + post.id + "'");
        if (range) {
            Date d = day_of(post.timestamp);
            if (d < range->first || d > range->second) {
                fail(ErrorKind::Validation, where + ": post '" + post.id + "' dated " + format_date(d) +
                                                " outside corpus range");
            }
        }
        posts.push_back(std::move(post));
    }
    return posts;
}

void save_posts(const std::vector<TextPost>& posts, const std::filesystem::path& path) {
    std::string out;
    for (const auto& p : posts) {
        json j;
        j["id"] = p.id;
        j["timestamp"] = format_timestamp(p.timestamp);
        j["source"] = std::string(to_string(p.source));
        j["currency"] = std::string(to_string(p.currency));
        j["text"] = p.text;
        json eng = json::object();
        for (const auto& [k, v] : p.engagement) eng[k] = v;
        j["engagement"] = eng;
        out += j.dump();
        out += '\n';
    }
    write_text_file(path, out);
}

namespace {

std::string lag_name(const std::string& column, int k) { return column + "_lag_" + std::to_string(k); }

int max_lag(const std::vector<int>& lags) {
    int m = 0;
    for (int k : lags) {
        if (k < 0) fail(ErrorKind::Argument, "negative lag " + std::to_string(k));
        m = std::max(m, k);
    }
    return m;
}

}  // namespace

FeatureMatrix add_lags(const FeatureMatrix& matrix, const std::vector<std::string>& columns,
                       const std::vector<int>& lags) {
    for (const auto& c : columns) matrix.index_of(c);
    const int deepest = max_lag(lags);
    if (deepest == 0) return matrix;
    if (static_cast<std::size_t>(deepest) >= matrix.rows()) {
        fail(ErrorKind::InsufficientData, "lag " + std::to_string(deepest) + " leaves no rows");
    }
    FeatureMatrix out = matrix;
    std::set<int> unique(lags.begin(), lags.end());
    for (const auto& c : columns) {
        const std::size_t idx = matrix.index_of(c);
        const auto& src = matrix.columns[idx];
        for (int k : unique) {
            if (k == 0) continue;
            std::vector<double> shifted(src.size(), kNaN);
            for (std::size_t r = static_cast<std::size_t>(k); r < src.size(); ++r) shifted[r] = src[r - k];
            out.add_column(lag_name(c, k), matrix.kinds[idx], std::move(shifted));
        }
    }
    return out.slice_rows(static_cast<std::size_t>(deepest), out.rows());
}

FeatureMatrix weekday_dummies(const std::vector<Date>& dates) {
    FeatureMatrix out;
    out.dates = dates;
    std::array<std::vector<double>, 7> cols;
    for (auto& c : cols) c.assign(dates.size(), 0.0);
    for (std::size_t r = 0; r < dates.size(); ++r) cols[static_cast<std::size_t>(weekday_index(dates[r]))][r] = 1.0;
    for (std::size_t d = 0; d < 7; ++d) out.add_column(kWeekdayNames[d], ColumnKind::Dummy, std::move(cols[d]));
    return out;
}

FeatureMatrix standardize(const FeatureMatrix& matrix, Date train_end) {
    std::size_t n_train = 0;
    while (n_train < matrix.rows() && matrix.dates[n_train] <= train_end) ++n_train;
    if (n_train < 2) fail(ErrorKind::InsufficientData, "standardization needs at least 2 training rows");
    bool any_continuous = std::any_of(matrix.kinds.begin(), matrix.kinds.end(),
                                      [](ColumnKind k) { return k == ColumnKind::Continuous; });
    if (!any_continuous) fail(ErrorKind::Argument, "no continuous columns to standardize");

    FeatureMatrix out = matrix;
    out.train_end = train_end;
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
        if (matrix.kinds[c] != ColumnKind::Continuous) continue;
        const auto& src = matrix.columns[c];
        double sum = 0;
        for (std::size_t r = 0; r < n_train; ++r) sum += src[r];
        const double mean = sum / static_cast<double>(n_train);
        double ss = 0;
        for (std::size_t r = 0; r < n_train; ++r) ss += (src[r] - mean) * (src[r] - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n_train));
        if (!std::isfinite(mean) || !std::isfinite(sd)) {
            fail(ErrorKind::Validation, "column '" + matrix.names[c] + "' has non-finite training values");
        }
        if (sd == 0) fail(ErrorKind::ZeroVariance, "column '" + matrix.names[c] + "' has zero training variance");
        auto& dst = out.columns[c];
        for (auto& v : dst) v = (v - mean) / sd;
        out.stats[matrix.names[c]] = ColumnStats{mean, sd};
    }
    return out;
}

std::pair<FeatureMatrix, FeatureMatrix> split_train_test(const FeatureMatrix& matrix, Date boundary) {
    if (matrix.rows() == 0) fail(ErrorKind::Range, "cannot split an empty matrix");
    if (boundary < matrix.dates.front() || boundary >= matrix.dates.back()) {
        fail(ErrorKind::Range, "split boundary " + format_date(boundary) + " outside (" +
                                   format_date(matrix.dates.front()) + ", " + format_date(matrix.dates.back()) + ")");
    }
    std::size_t n_train = 0;
    while (n_train < matrix.rows() && matrix.dates[n_train] <= boundary) ++n_train;
    auto train = matrix.slice_rows(0, n_train);
    auto test = matrix.slice_rows(n_train, matrix.rows());
    train.train_end = boundary;
    test.train_end = boundary;
    return {std::move(train), std::move(test)};
}

DatedTable load_dated_table(const std::filesystem::path& path, const std::string& date_column) {
    CsvTable table = read_csv(path);
    const std::size_t c_date = table.column(date_column);
    DatedTable out;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c != c_date) out.names.push_back(table.header[c]);
    }
    out.columns.assign(out.names.size(), {});
    std::vector<std::pair<Date, std::size_t>> order;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        Date d;
        try {
            d = parse_date(row[c_date]);
        } catch (const Error& e) {
            fail(ErrorKind::Format, path.string() + ":" + std::to_string(table.line_numbers[r]) + ": " + e.what());
        }
        order.emplace_back(d, r);
    }
    std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto [d, r] = order[i];
        if (i > 0 && order[i - 1].first == d) {
            fail(ErrorKind::Validation, path.filename().string() + ": duplicate date " + format_date(d));
        }
        out.dates.push_back(d);
        std::size_t k = 0;
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (c == c_date) continue;
            double v;
            const std::string& cell = table.rows[r][c];
            if (cell.empty()) {
                v = kNaN;
            } else if (!parse_double(cell, v)) {
                fail(ErrorKind::Format, path.string() + ":" + std::to_string(table.line_numbers[r]) +
                                            ": cannot parse '" + cell + "' in column " + table.header[c]);
            }
            out.columns[k++].push_back(v);
        }
    }
    return out;
}

DatedTable forward_fill(const DatedTable& table, const std::vector<Date>& calendar) {
    DatedTable out;
    out.dates = calendar;
    out.names = table.names;
    out.columns.assign(table.names.size(), std::vector<double>(calendar.size(), kNaN));
    for (std::size_t c = 0; c < table.names.size(); ++c) {
        std::size_t src = 0;
        double last = kNaN;
        for (std::size_t r = 0; r < calendar.size(); ++r) {
            while (src < table.dates.size() && table.dates[src] <= calendar[r]) {
                if (!std::isnan(table.columns[c][src])) last = table.columns[c][src];
                ++src;
            }
            out.columns[c][r] = last;
        }
    }
    return out;
}

namespace {

/// Values of a dated source looked up on the daily axis.
std::vector<double> on_axis(const std::vector<Date>& axis, const std::vector<Date>& dates,
                            const std::vector<double>& values) {
    std::vector<double> out(axis.size(), kNaN);
    std::size_t j = 0;
    for (std::size_t i = 0; i < axis.size(); ++i) {
        while (j < dates.size() && dates[j] < axis[i]) ++j;
        if (j < dates.size() && dates[j] == axis[i]) out[i] = values[j];
    }
    return out;
}

std::vector<double> indicator_on_axis(const std::vector<Date>& axis, const IndicatorColumn& col) {
    std::vector<double> masked = col.values;
    for (std::size_t i = 0; i < masked.size() && i < col.valid_from; ++i) masked[i] = kNaN;
    return on_axis(axis, col.dates, masked);
}

}  // namespace

FeatureMatrix assemble_matrix(const AssemblyInputs& in, const AssemblyConfig& config) {
    if (!in.prices || in.prices->empty()) fail(ErrorKind::Argument, "assemble_matrix needs a price series");
    if (config.end < config.start) fail(ErrorKind::Range, "calendar end precedes start");
    for (int k : config.lags) {
        if (k < 0 || k > 2) fail(ErrorKind::Argument, "lags must lie in {0,1,2}");
    }
    for (int k : config.price_lags) {
        if (k < 0 || k > 2) fail(ErrorKind::Argument, "price lags must lie in {0,1,2}");
    }
    const PriceSeries& prices = *in.prices;

    // The daily axis runs from the first bar to one day past the calendar so
    // that lags may reach into history and the last row has a target.
    const Date axis_first = std::min(prices.bars.front().date, config.start);
    const Date axis_last = config.end + std::chrono::days{1};
    std::vector<Date> axis;
    for (Date d = axis_first; d <= axis_last; d += std::chrono::days{1}) axis.push_back(d);

    std::vector<std::string> missing;
    for (Date d = config.start; d <= axis_last; d += std::chrono::days{1}) {
        if (!prices.index_of(d)) missing.push_back(format_date(d));
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
        if (missing.size() > 20) list += ", ...";
        fail(ErrorKind::Alignment, "price series misses " + std::to_string(missing.size()) +
                                       " calendar date(s) (the day after the calendar end is needed for the target): " +
                                       list);
    }

    struct Pending {
        std::string name;
        ColumnKind kind;
        std::vector<double> values;  // on the axis
    };
    std::vector<Pending> base;
    auto push_lagged = [&](const std::string& name, ColumnKind kind, const std::vector<double>& values,
                           const std::vector<int>& lags) {
        base.push_back({name, kind, values});
        std::set<int> unique(lags.begin(), lags.end());
        for (int k : unique) {
            if (k == 0) continue;
            std::vector<double> shifted(values.size(), kNaN);
            for (std::size_t r = static_cast<std::size_t>(k); r < values.size(); ++r) shifted[r] = values[r - k];
            base.push_back({lag_name(name, k), kind, std::move(shifted)});
        }
    };

    const auto price_dates = prices.dates();
    auto price_field = [&](double PriceBar::*field) {
        std::vector<double> v;
        v.reserve(prices.size());
        for (const auto& b : prices.bars) v.push_back(b.*field);
        return on_axis(axis, price_dates, v);
    };
    push_lagged("open", ColumnKind::Continuous, price_field(&PriceBar::open), config.price_lags);
    push_lagged("high", ColumnKind::Continuous, price_field(&PriceBar::high), config.price_lags);
    push_lagged("low", ColumnKind::Continuous, price_field(&PriceBar::low), config.price_lags);
    push_lagged("close", ColumnKind::Continuous, price_field(&PriceBar::close), config.price_lags);
    push_lagged("adj_close", ColumnKind::Continuous, price_field(&PriceBar::adj_close), config.price_lags);

    if (in.blockchain) {
        for (std::size_t c = 0; c < in.blockchain->names.size(); ++c) {
            push_lagged(in.blockchain->names[c], ColumnKind::Continuous,
                        on_axis(axis, in.blockchain->dates, in.blockchain->columns[c]), config.lags);
        }
    }
    if (in.macro) {
        DatedTable filled = forward_fill(*in.macro, axis);
        for (std::size_t c = 0; c < filled.names.size(); ++c) {
            push_lagged(filled.names[c], ColumnKind::Continuous, filled.columns[c], config.lags);
        }
    }
    if (in.lagged_technicals) {
        for (const auto& col : *in.lagged_technicals) {
            push_lagged(col.name, col.kind, indicator_on_axis(axis, col), config.lags);
        }
    }
    if (in.technicals) {
        for (const auto& col : *in.technicals) base.push_back({col.name, col.kind, indicator_on_axis(axis, col)});
    }
    if (in.sentiment) {
        for (std::size_t c = 0; c < in.sentiment->names.size(); ++c) {
            base.push_back({in.sentiment->names[c], ColumnKind::Continuous,
                            on_axis(axis, in.sentiment->dates, in.sentiment->columns[c])});
        }
    }

    // Calendar rows [row0, row0 + n) on the axis.
    const std::size_t row0 = static_cast<std::size_t>((config.start - axis_first).count());
    const std::size_t n = days_between_inclusive(config.start, config.end);

    std::size_t cut = 0;
    for (const auto& col : base) {
        std::size_t last_bad = 0;
        bool any_bad = false;
        for (std::size_t r = 0; r < n; ++r) {
            if (!std::isfinite(col.values[row0 + r])) {
                last_bad = r;
                any_bad = true;
            }
        }
        if (!any_bad) continue;
        // Leading warm-up only: everything before the last gap must also be a gap.
        std::size_t first_good = 0;
        while (first_good < n && !std::isfinite(col.values[row0 + first_good])) ++first_good;
        if (last_bad >= first_good && first_good < n) {
            fail(ErrorKind::Alignment, "column '" + col.name + "' has no value on " +
                                           format_date(axis[row0 + last_bad]) + " inside the calendar");
        }
        cut = std::max(cut, first_good);
    }
    if (cut >= n) fail(ErrorKind::Alignment, "warm-up consumes the whole calendar");

    FeatureMatrix out;
    for (std::size_t r = cut; r < n; ++r) out.dates.push_back(axis[row0 + r]);
    for (auto& col : base) {
        std::vector<double> v(col.values.begin() + static_cast<std::ptrdiff_t>(row0 + cut),
                              col.values.begin() + static_cast<std::ptrdiff_t>(row0 + n));
        out.add_column(std::move(col.name), col.kind, std::move(v));
    }
    FeatureMatrix dummies = weekday_dummies(out.dates);
    for (std::size_t c = 0; c < dummies.cols(); ++c) {
        out.add_column(dummies.names[c], ColumnKind::Dummy, std::move(dummies.columns[c]));
    }

    out.target.reserve(out.rows());
    for (Date d : out.dates) {
        const PriceBar& today = prices.bars[*prices.index_of(d)];
        const PriceBar& next = prices.bars[*prices.index_of(d + std::chrono::days{1})];
        out.target.push_back((next.close - today.close) / today.close);
    }
    return out;
}

void save_matrix(const FeatureMatrix& matrix, const std::filesystem::path& path) {
    const bool has_target = !matrix.target.empty();
    for (const auto& n : matrix.names) {
        if (n == "date" || n == "target") fail(ErrorKind::Name, "reserved column name '" + n + "'");
    }
    std::string csv = "date";
    for (const auto& n : matrix.names) csv += "," + n;
    if (has_target) csv += ",target";
    csv += '\n';
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        csv += format_date(matrix.dates[r]);
        for (const auto& col : matrix.columns) {
            csv += ',';
            csv += format_double(col[r]);
        }
        if (has_target) {
            csv += ',';
            csv += format_double(matrix.target[r]);
        }
        csv += '\n';
    }
    write_text_file(path, csv);

    json meta;
    meta["has_target"] = has_target;
    meta["train_end"] = matrix.train_end ? json(format_date(*matrix.train_end)) : json(nullptr);
    json cols = json::array();
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
        json jc;
        jc["name"] = matrix.names[c];
        jc["kind"] = matrix.kinds[c] == ColumnKind::Dummy ? "dummy" : "continuous";
        if (auto it = matrix.stats.find(matrix.names[c]); it != matrix.stats.end()) {
            jc["mean"] = format_double(it->second.mean);
            jc["sd"] = format_double(it->second.sd);
        }
        cols.push_back(jc);
    }
    meta["columns"] = cols;
    write_text_file(path.string() + ".meta.json", meta.dump(2) + "\n");
}

FeatureMatrix load_matrix(const std::filesystem::path& path) {
    json meta;
    try {
        meta = json::parse(read_text_file(path.string() + ".meta.json"));
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Format, path.string() + ".meta.json: " + e.what());
    }
    CsvTable table = read_csv(path);
    const bool has_target = meta.at("has_target").get<bool>();
    const auto& cols = meta.at("columns");
    if (table.header.size() != cols.size() + 1 + (has_target ? 1 : 0)) {
        fail(ErrorKind::Schema, path.string() + ": header does not match metadata");
    }
    FeatureMatrix m;
    for (const auto& row : table.rows) m.dates.push_back(parse_date(row[0]));
    if (!meta.at("train_end").is_null()) m.train_end = parse_date(meta.at("train_end").get<std::string>());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const std::string name = cols[c].at("name").get<std::string>();
        if (table.header[c + 1] != name) fail(ErrorKind::Schema, path.string() + ": column order mismatch at " + name);
        const std::string kind = cols[c].at("kind").get<std::string>();
        std::vector<double> values;
        values.reserve(table.rows.size());
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            double v;
            if (!parse_double(table.rows[r][c + 1], v)) {
                fail(ErrorKind::Format, path.string() + ":" + std::to_string(table.line_numbers[r]) +
                                            ": cannot parse value in column " + name);
            }
            values.push_back(v);
        }
        m.add_column(name, kind == "dummy" ? ColumnKind::Dummy : ColumnKind::Continuous, std::move(values));
        if (cols[c].contains("mean")) {
            ColumnStats s;
            parse_double(cols[c].at("mean").get<std::string>(), s.mean);
            parse_double(cols[c].at("sd").get<std::string>(), s.sd);
            m.stats[name] = s;
        }
    }
    if (has_target) {
        const std::size_t tc = table.header.size() - 1;
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            double v;
            if (!parse_double(table.rows[r][tc], v)) fail(ErrorKind::Format, path.string() + ": bad target value");
            m.target.push_back(v);
        }
    }
    return m;
}

}  // namespace ingest
}  // namespace sentitrade
