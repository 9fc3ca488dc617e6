#pragma once

#include <stdexcept>
#include <string>

namespace pdm {

/// Malformed input data (C-MAPSS text, CSV, checkpoint files).
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// A configuration violates a documented invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An operation was called in a state or with arguments it does not accept.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Numerical failure: non-finite values, singular problems, non-convergence.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pdm
