#pragma once

#include <stdexcept>
#include <string>

namespace deidkit {

/// Base class for all deidkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed document markup. Carries the 1-based source position.
struct ParseError : Error {
    ParseError(const std::string& message, int line_, int column_)
        : Error(message + " (line " + std::to_string(line_) + ", column " +
                std::to_string(column_) + ")"),
          line(line_),
          column(column_) {}

    int line;
    int column;
};

/// A document, span, or label violates a structural invariant.
struct ValidationError : Error {
    using Error::Error;
};

/// Invalid configuration value (model dimensions, ratios, vocabulary size, ...).
struct ConfigError : Error {
    using Error::Error;
};

/// Caller-supplied inputs are inconsistent: shape or length mismatches,
/// ids out of range.
struct InputError : Error {
    using Error::Error;
};

/// A runtime condition made the requested computation undefined
/// (zero elapsed time, empty loss, every sweep run failed).
struct RunError : Error {
    using Error::Error;
};

}  // namespace deidkit
