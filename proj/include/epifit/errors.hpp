#pragma once

#include <stdexcept>
#include <string>

namespace epifit {

// Base class for all epifit errors. Subclasses pick the CLI exit code:
// usage/configuration -> 1, input/parse -> 2, numerical/fit -> 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument or parameter outside its documented domain.
class DomainError : public Error {
public:
    using Error::Error;
};

// A run configuration that cannot produce output (e.g. empty dictionary).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input data; carries a line number when one is known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

// Integration blew up, a solver failed to converge, or a matrix is singular.
class NumericalError : public Error {
public:
    using Error::Error;
};

// No usable correlation / no admissible fit for the given series.
class FitError : public Error {
public:
    using Error::Error;
};

// Fewer samples than an estimator needs.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

} // namespace epifit
