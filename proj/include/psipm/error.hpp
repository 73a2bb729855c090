#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psipm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix sizes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input that violates a documented invariant (disconnected graph,
/// unbalanced supplies, parameter outside its range, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// NaN/Inf or a loss of definiteness inside a numerical kernel.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Non-positive pivot in a complete Cholesky factorization.
class DefinitenessError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Non-positive pivot in an incomplete factorization, after the shifted retry.
class BreakdownError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// The step search could not find an admissible step length.
class StallError : public Error {
 public:
  using Error::Error;
};

/// An iteration cap was exceeded.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// The transport problem has no feasible flow.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace psipm
