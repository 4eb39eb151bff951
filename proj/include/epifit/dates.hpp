#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace epifit {

// Calendar date as a count of days since 1970-01-01 (proleptic Gregorian).
// Telemetry timestamps are day-granular, so this is all we need.
struct Date {
    std::int32_t days_since_epoch = 0;

    static Date from_civil(int year, unsigned month, unsigned day);
    static Date parse_iso(std::string_view text); // "YYYY-MM-DD", throws ParseError
    std::string to_iso() const;

    friend Date operator+(Date d, int days) { return Date{d.days_since_epoch + days}; }
    friend int operator-(Date a, Date b) { return a.days_since_epoch - b.days_since_epoch; }
    auto operator<=>(const Date&) const = default;
};

} // namespace epifit
