#pragma once

#include <stdexcept>
#include <string>

namespace flatdisc {

/// Evaluation requested outside a domain of validity: a system guard
/// predicate returned false, or a point left the chart of a coordinate
/// change (negative discriminant of the inverse branch, etc.).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required solve hit a (near-)singular matrix: feedback determinant
/// below the guard margin, chart Jacobian condition number past the
/// threshold, and similar.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The implicit discretization matrix (I - alpha*h*A) is not invertible at
/// the requested stepsize; a smaller h typically fixes it.
class StepsizeError : public SingularityError {
 public:
  using SingularityError::SingularityError;
};

/// Newton iteration failed to reach the residual tolerance within the
/// configured iteration budget. Carries the final residual norm.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double final_residual)
      : std::runtime_error(what), final_residual_(final_residual) {}

  [[nodiscard]] double final_residual() const noexcept { return final_residual_; }

 private:
  double final_residual_;
};

/// A trace or report file could not be opened or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace flatdisc
