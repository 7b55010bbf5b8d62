#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairauc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public Error {
  public:
    ParseError(const std::string &msg, std::size_t line)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_{ line } {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Violated precondition on arguments (dimensions, ranges, empty groups).
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// Configuration schema violation. `field()` holds the offending path, e.g. "solver.smd.iterations".
class ConfigError : public Error {
  public:
    ConfigError(const std::string &field, const std::string &msg)
        : Error(field + ": " + msg), field_{ field } {}

    [[nodiscard]] const std::string &field() const noexcept { return field_; }

  private:
    std::string field_;
};

/// Numerical failure inside a solver (non-finite gradient, etc.).
class SolverError : public Error {
  public:
    using Error::Error;
};

}  // namespace fairauc
