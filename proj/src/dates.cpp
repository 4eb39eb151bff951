#include "epifit/dates.hpp"

#include "epifit/errors.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace epifit {

namespace {

// Days from civil date, from Howard Hinnant's public-domain calendar algorithms.
std::int32_t days_from_civil(int y, unsigned m, unsigned d)
{
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(std::int32_t z, int& y, unsigned& m, unsigned& d)
{
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yy = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = yy + (m <= 2);
}

bool parse_component(std::string_view text, std::size_t begin, std::size_t len, int& out)
{
    const char* first = text.data() + begin;
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc{} && ptr == first + len;
}

} // namespace

Date Date::from_civil(int year, unsigned month, unsigned day)
{
    return Date{days_from_civil(year, month, day)};
}

Date Date::parse_iso(std::string_view text)
{
    int y = 0, m = 0, d = 0;
    const bool shape_ok = text.size() == 10 && text[4] == '-' && text[7] == '-' &&
                          parse_component(text, 0, 4, y) && parse_component(text, 5, 2, m) &&
                          parse_component(text, 8, 2, d);
    if (!shape_ok || m < 1 || m > 12 || d < 1 || d > 31)
        throw ParseError("invalid ISO date '" + std::string(text) + "'");
    // days_from_civil would silently roll 2024-02-30 into March; reject instead.
    static constexpr std::array<int, 12> month_days = {31, 28, 31, 30, 31, 30,
                                                       31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    if (d > month_days[static_cast<std::size_t>(m - 1)] + ((m == 2 && leap) ? 1 : 0))
        throw ParseError("invalid ISO date '" + std::string(text) + "'");
    return from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::string Date::to_iso() const
{
    int y;
    unsigned m, d;
    civil_from_days(days_since_epoch, y, m, d);
    std::array<char, 16> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02u", y, m, d);
    return std::string(buf.data());
}

} // namespace epifit
