#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace hybreg {

using Index = Eigen::Index;

/// A documented precondition was not met (dimension mismatch, bad argument).
class ContractViolation : public std::invalid_argument {
public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// A Krylov process terminated: an alpha or beta fell below the breakdown
/// threshold. `step()` is the bidiagonalization step at which it happened.
class BreakdownError : public std::runtime_error {
public:
  BreakdownError(const std::string& what, Index step)
      : std::runtime_error(what), step_(step) {}

  Index step() const noexcept { return step_; }

private:
  Index step_;
};

class SingularMatrixError : public std::runtime_error {
public:
  explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values appeared during an iteration.
class NumericalFailure : public std::runtime_error {
public:
  explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// relative_error with a vanishing denominator.
class UndefinedMetricError : public std::domain_error {
public:
  explicit UndefinedMetricError(const std::string& what) : std::domain_error(what) {}
};

/// Dense oracles refuse problems past their size guard.
class OracleSizeError : public std::length_error {
public:
  explicit OracleSizeError(const std::string& what) : std::length_error(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

inline std::string dims(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace detail
}  // namespace hybreg
