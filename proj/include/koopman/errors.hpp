// errors.hpp — error types shared across the library
#pragma once

#include <stdexcept>
#include <string>

namespace koopman {

// Invalid arguments, dimension mismatches, violated preconditions.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Numerical failures: divergence, overflow, solver breakdown.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed files; carries the 1-based line number of the offending row.
struct ParseError : std::runtime_error {
    long line;
    ParseError(const std::string& what, long line_number)
        : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
};

}  // namespace koopman
