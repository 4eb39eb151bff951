#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace epifit {

// Shortest decimal form of v that parses back to exactly v.
// Used everywhere doubles are written to artifacts so that re-reading a
// file reproduces the in-memory value bit for bit.
std::string format_double(double v);

// Strict numeric parsing: the whole token must be consumed.
// Both throw ParseError on malformed input.
double parse_double(std::string_view text);
std::int64_t parse_int(std::string_view text);

} // namespace epifit
