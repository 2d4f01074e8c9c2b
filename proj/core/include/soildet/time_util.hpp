#pragma once

#include <cstdint>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace soildet {

/// UTC instants are epoch milliseconds throughout; wire timestamps are RFC 3339.
using UtcMillis = std::int64_t;

struct CivilDate {
    int year = 0;
    unsigned month = 1;  // 1..12
    unsigned day = 1;    // 1..31

    auto operator<=>(const CivilDate&) const = default;
};

/// Days since 1970-01-01 for a proleptic Gregorian date (negative before epoch).
std::int64_t days_from_civil(CivilDate d);
CivilDate civil_from_days(std::int64_t days);

bool is_leap_year(int year);
unsigned days_in_month(int year, unsigned month);

/// 1-based ordinal day of the year (Jan 1 = 1).
int day_of_year(CivilDate d);

/// Calendar date of `ts` shifted by a fixed site offset (minutes east of UTC).
CivilDate local_date(UtcMillis ts, int utc_offset_min);

/// Seconds since local midnight for `ts` under the fixed offset.
int local_seconds_of_day(UtcMillis ts, int utc_offset_min);

/// Epoch millis of local midnight starting `date` under the fixed offset.
UtcMillis local_midnight_utc(CivilDate date, int utc_offset_min);

/// Strict RFC 3339 subset: YYYY-MM-DDTHH:MM:SS[.fff...][Z|+HH:MM|-HH:MM].
/// Fractional seconds beyond milliseconds are truncated.
std::optional<UtcMillis> parse_rfc3339(std::string_view text);

/// Canonical form: second resolution when millis are zero, else .mmm; always Z.
std::string format_rfc3339(UtcMillis ts);

/// "YYYY-MM-DD"; returns nullopt on malformed input or out-of-range fields.
std::optional<CivilDate> parse_date(std::string_view text);
std::string format_date(CivilDate d);

}  // namespace soildet
