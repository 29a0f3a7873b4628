#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace okdrop {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the documented domain of an operation.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a point where the quantity is singular (e.g. G at a lattice point).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A droplet configuration violates its invariants (overlap, mass budget, ...).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// A construction cannot be realised with the requested parameters.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A configuration document failed to parse or validate.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& message, std::size_t line = 0, std::size_t column = 0)
      : Error(format(message, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& message, std::size_t line, std::size_t column) {
    if (line == 0) return message;
    return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
  }

  std::size_t line_;
  std::size_t column_;
};

}  // namespace okdrop
