#pragma once

#include <stdexcept>
#include <string>

namespace cotpi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid data handed to an operation (shape mismatch, non-finite values,
/// empty groups, points outside the unit cube, ...).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid tuning parameters (rate exponent, cell constant, sample counts).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed tabular input. Carries the 1-based line number when known.
class SchemaError : public InputError {
 public:
  SchemaError(const std::string& what, long line = -1)
      : InputError(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// A solver failed to reach a valid answer (iteration cap, infeasibility
/// caused by round-off).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cotpi
