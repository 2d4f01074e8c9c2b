#include "soildet/time_util.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>

namespace soildet {

namespace {
constexpr std::int64_t kMillisPerDay = 86400000;

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

int to_int(std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}
}  // namespace

// Howard Hinnant's civil-days algorithms (public domain).
std::int64_t days_from_civil(CivilDate d) {
    auto y = static_cast<std::int64_t>(d.year);
    const unsigned m = d.month;
    const unsigned day = d.day;
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (m <= 2)), m, day};
}

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

unsigned days_in_month(int year, unsigned month) {
    static constexpr std::array<unsigned, 12> lengths{31, 28, 31, 30, 31, 30,
                                                      31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) return 29;
    return lengths[month - 1];
}

int day_of_year(CivilDate d) {
    return static_cast<int>(days_from_civil(d) -
                            days_from_civil({d.year, 1, 1})) + 1;
}

CivilDate local_date(UtcMillis ts, int utc_offset_min) {
    std::int64_t shifted = ts + static_cast<std::int64_t>(utc_offset_min) * 60000;
    std::int64_t days = shifted / kMillisPerDay;
    if (shifted < 0 && shifted % kMillisPerDay != 0) --days;
    return civil_from_days(days);
}

int local_seconds_of_day(UtcMillis ts, int utc_offset_min) {
    std::int64_t shifted = ts + static_cast<std::int64_t>(utc_offset_min) * 60000;
    std::int64_t rem = shifted % kMillisPerDay;
    if (rem < 0) rem += kMillisPerDay;
    return static_cast<int>(rem / 1000);
}

UtcMillis local_midnight_utc(CivilDate date, int utc_offset_min) {
    return days_from_civil(date) * kMillisPerDay -
           static_cast<std::int64_t>(utc_offset_min) * 60000;
}

std::optional<UtcMillis> parse_rfc3339(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SS with optional fraction and offset
    if (s.size() < 20) return std::nullopt;
    if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') ||
        s[13] != ':' || s[16] != ':')
        return std::nullopt;
    if (!all_digits(s.substr(0, 4)) || !all_digits(s.substr(5, 2)) ||
        !all_digits(s.substr(8, 2)) || !all_digits(s.substr(11, 2)) ||
        !all_digits(s.substr(14, 2)) || !all_digits(s.substr(17, 2)))
        return std::nullopt;

    CivilDate d{to_int(s.substr(0, 4)), static_cast<unsigned>(to_int(s.substr(5, 2))),
                static_cast<unsigned>(to_int(s.substr(8, 2)))};
    int hh = to_int(s.substr(11, 2));
    int mm = to_int(s.substr(14, 2));
    int ss = to_int(s.substr(17, 2));
    if (d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
        return std::nullopt;
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    if (ss == 60) ss = 59;  // leap second: clamp

    std::size_t pos = 19;
    std::int64_t millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos == start) return std::nullopt;
        std::string_view frac = s.substr(start, pos - start);
        for (std::size_t i = 0; i < 3; ++i)
            millis = millis * 10 + (i < frac.size() ? frac[i] - '0' : 0);
    }

    std::int64_t offset_min = 0;
    if (pos >= s.size()) return std::nullopt;
    if (s[pos] == 'Z' || s[pos] == 'z') {
        ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
        if (pos + 6 > s.size() || s[pos + 3] != ':') return std::nullopt;
        if (!all_digits(s.substr(pos + 1, 2)) || !all_digits(s.substr(pos + 4, 2)))
            return std::nullopt;
        offset_min = to_int(s.substr(pos + 1, 2)) * 60 + to_int(s.substr(pos + 4, 2));
        if (s[pos] == '-') offset_min = -offset_min;
        pos += 6;
    } else {
        return std::nullopt;
    }
    if (pos != s.size()) return std::nullopt;

    std::int64_t t = days_from_civil(d) * kMillisPerDay;
    t += (static_cast<std::int64_t>(hh) * 3600 + mm * 60 + ss) * 1000 + millis;
    t -= offset_min * 60000;
    return t;
}

std::string format_rfc3339(UtcMillis ts) {
    std::int64_t days = ts / kMillisPerDay;
    std::int64_t rem = ts % kMillisPerDay;
    if (rem < 0) {
        rem += kMillisPerDay;
        --days;
    }
    CivilDate d = civil_from_days(days);
    int secs = static_cast<int>(rem / 1000);
    int millis = static_cast<int>(rem % 1000);
    char buf[40];
    if (millis == 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", d.year,
                      d.month, d.day, secs / 3600, (secs / 60) % 60, secs % 60);
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                      d.year, d.month, d.day, secs / 3600, (secs / 60) % 60,
                      secs % 60, millis);
    }
    return buf;
}

std::optional<CivilDate> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    if (!all_digits(s.substr(0, 4)) || !all_digits(s.substr(5, 2)) ||
        !all_digits(s.substr(8, 2)))
        return std::nullopt;
    CivilDate d{to_int(s.substr(0, 4)), static_cast<unsigned>(to_int(s.substr(5, 2))),
                static_cast<unsigned>(to_int(s.substr(8, 2)))};
    if (d.month < 1 || d.month > 12 || d.day < 1 ||
        d.day > days_in_month(d.year, d.month))
        return std::nullopt;
    return d;
}

std::string format_date(CivilDate d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year, d.month, d.day);
    return buf;
}

}  // namespace soildet
