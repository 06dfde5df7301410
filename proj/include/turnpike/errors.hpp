#pragma once

#include <stdexcept>
#include <string>

namespace turnpike {

/// Bad dimensions, non-positive tolerances, malformed configuration.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization failed or a system matrix was numerically singular.
class LinearAlgebraError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver ran out of iterations. Carries the last residuals.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double adjoint_residual,
                   double stationarity_residual, double dynamics_residual)
      : std::runtime_error(what),
        adjoint_residual(adjoint_residual),
        stationarity_residual(stationarity_residual),
        dynamics_residual(dynamics_residual) {}

  double adjoint_residual;
  double stationarity_residual;
  double dynamics_residual;
};

/// Per-step Newton failure inside the implicit Euler forward sweep.
class StiffStepError : public std::runtime_error {
 public:
  StiffStepError(const std::string& what, int step)
      : std::runtime_error(what), step(step) {}
  int step;
};

/// The spectrum cannot be separated at the requested abscissa.
class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// fit_exponential had nothing to fit.
class FitUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An audit was asked for on an empty interval or with an unusable certificate.
class AuditUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace turnpike
