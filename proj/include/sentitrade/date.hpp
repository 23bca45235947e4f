#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace sentitrade {

/// Calendar day; the boundary between days is 00:00 UTC.
using Date = std::chrono::sys_days;
using Timestamp = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DD`. Throws Error(Format) on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date date);

/// Parses ISO-8601 `YYYY-MM-DDTHH:MM[:SS[.fff]](Z|±HH:MM)` and normalizes to UTC.
/// A zone designator is mandatory.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

inline Date day_of(Timestamp ts) { return std::chrono::floor<std::chrono::days>(ts); }

/// Monday = 0 ... Sunday = 6.
int weekday_index(Date date);

/// Inclusive day range [first, last].
std::size_t days_between_inclusive(Date first, Date last);

}  // namespace sentitrade
