#include "sentitrade/util.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sentitrade/date.hpp"
#include "sentitrade/error.hpp"

namespace sentitrade {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Io: return "io";
        case ErrorKind::Format: return "format";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::InsufficientData: return "insufficient-data";
        case ErrorKind::Name: return "name";
        case ErrorKind::ZeroVariance: return "zero-variance";
        case ErrorKind::Alignment: return "alignment";
        case ErrorKind::Range: return "range";
        case ErrorKind::Argument: return "argument";
        case ErrorKind::Protocol: return "protocol";
        case ErrorKind::Correlation: return "correlation";
        case ErrorKind::Capacity: return "capacity";
        case ErrorKind::Rank: return "rank";
        case ErrorKind::Numerical: return "numerical";
        case ErrorKind::Spec: return "spec";
        case ErrorKind::Schema: return "schema";
        case ErrorKind::UndefinedClass: return "undefined-class";
        case ErrorKind::Fold: return "fold";
        case ErrorKind::Division: return "division";
        case ErrorKind::Configuration: return "configuration";
        case ErrorKind::Dependency: return "dependency";
        case ErrorKind::Comparison: return "comparison";
    }
    return "unknown";
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

bool parse_double(std::string_view text, double& out) {
    if (text.empty()) return false;
    if (text == "nan" || text == "NaN") {
        out = kNaN;
        return true;
    }
    if (text == "inf" || text == "+inf") {
        out = kInf;
        return true;
    }
    if (text == "-inf") {
        out = -kInf;
        return true;
    }
    if (text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::string trim(std::string_view text) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t b = 0, e = text.size();
    while (b < e && is_space(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.emplace_back(text.substr(start));
            break;
        }
        parts.emplace_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    fail(ErrorKind::Name, "unknown column '" + std::string(name) + "'");
}

bool CsvTable::has_column(std::string_view name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail(ErrorKind::Io, "short write to " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line(text.data() + pos,
                              (nl == std::string::npos ? text.size() : nl) - pos);
        ++line_no;
        pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (trim(line).empty()) continue;
        auto fields = split(line, ',');
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size()) {
            fail(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(table.header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) fail(ErrorKind::Format, path.string() + ": missing header row");
    return table;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) fail(ErrorKind::Argument, "Rng::below with zero bound");
    // Rejection keeps the draw exactly uniform.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

double Rng::normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    // splitmix64 finalizer over the pair
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------- dates

namespace {

int parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
    if (pos + len > text.size()) fail(ErrorKind::Format, "malformed date/time '" + std::string(whole) + "'");
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        char c = text[i];
        if (c < '0' || c > '9') fail(ErrorKind::Format, "malformed date/time '" + std::string(whole) + "'");
        value = value * 10 + (c - '0');
    }
    return value;
}

}  // namespace

Date parse_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        fail(ErrorKind::Format, "malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
    }
    int y = parse_fixed_int(text, 0, 4, text);
    int m = parse_fixed_int(text, 5, 2, text);
    int d = parse_fixed_int(text, 8, 2, text);
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) fail(ErrorKind::Format, "invalid calendar date '" + std::string(text) + "'");
    return Date{ymd};
}

std::string format_date(Date date) {
    std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

Timestamp parse_timestamp(std::string_view text) {
    if (text.size() < 17 || (text[10] != 'T' && text[10] != ' ')) {
        fail(ErrorKind::Format, "malformed timestamp '" + std::string(text) + "'");
    }
    Date day = parse_date(text.substr(0, 10));
    int hh = parse_fixed_int(text, 11, 2, text);
    if (text[13] != ':') fail(ErrorKind::Format, "malformed timestamp '" + std::string(text) + "'");
    int mm = parse_fixed_int(text, 14, 2, text);
    std::size_t pos = 16;
    int ss = 0;
    if (pos < text.size() && text[pos] == ':') {
        ss = parse_fixed_int(text, pos + 1, 2, text);
        pos += 3;
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) fail(ErrorKind::Format, "out-of-range time in '" + std::string(text) + "'");
    if (pos >= text.size()) {
        fail(ErrorKind::Format, "timestamp '" + std::string(text) + "' lacks a zone designator");
    }
    int offset_minutes = 0;
    if (text[pos] == 'Z' || text[pos] == 'z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        int sign = text[pos] == '-' ? -1 : 1;
        int oh = parse_fixed_int(text, pos + 1, 2, text);
        std::size_t mpos = pos + 3;
        if (mpos < text.size() && text[mpos] == ':') ++mpos;
        int om = parse_fixed_int(text, mpos, 2, text);
        offset_minutes = sign * (oh * 60 + om);
        pos = mpos + 2;
    } else {
        fail(ErrorKind::Format, "timestamp '" + std::string(text) + "' has an invalid zone designator");
    }
    if (pos != text.size()) fail(ErrorKind::Format, "trailing characters in timestamp '" + std::string(text) + "'");
    using namespace std::chrono;
    return Timestamp{day} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    Date day = day_of(ts);
    auto rem = ts - Timestamp{day};
    auto h = duration_cast<hours>(rem);
    auto m = duration_cast<minutes>(rem - h);
    auto s = rem - h - m;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", format_date(day).c_str(), static_cast<int>(h.count()),
                  static_cast<int>(m.count()), static_cast<int>(s.count()));
    return buf;
}

int weekday_index(Date date) {
    std::chrono::weekday wd{date};
    return static_cast<int>(wd.iso_encoding()) - 1;
}

std::size_t days_between_inclusive(Date first, Date last) {
    if (last < first) return 0;
    return static_cast<std::size_t>((last - first).count()) + 1;
}

}  // namespace sentitrade
