#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace epifit {

// Tiny CSV layer, just enough for the comma-separated artifacts this
// project reads and writes: no quoting, no embedded separators. Every
// record keeps its 1-based source line for error messages.
struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

// Splits on ','; skips blank lines; tolerates a trailing '\r' (CRLF input).
std::vector<CsvRow> read_csv(std::istream& in);

std::string join_csv(const std::vector<std::string>& fields);

} // namespace epifit
