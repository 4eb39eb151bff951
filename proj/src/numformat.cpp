#include "epifit/numformat.hpp"

#include "epifit/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace epifit {

std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";

    std::array<char, 64> buf{};
    // Try increasing precision until the printed form round-trips. 17
    // significant digits always do for IEEE double; most values need fewer.
    for (int prec = 15; prec <= 17; ++prec) {
        const int n = std::snprintf(buf.data(), buf.size(), "%.*g", prec, v);
        double back = 0.0;
        auto [ptr, ec] = std::from_chars(buf.data(), buf.data() + n, back);
        if (ec == std::errc{} && ptr == buf.data() + n && back == v)
            break;
    }
    return std::string(buf.data());
}

double parse_double(std::string_view text)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ParseError("invalid number '" + std::string(text) + "'");
    return v;
}

std::int64_t parse_int(std::string_view text)
{
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ParseError("invalid integer '" + std::string(text) + "'");
    return v;
}

} // namespace epifit
