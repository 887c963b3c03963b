#pragma once

#include <stdexcept>
#include <string>

namespace nvlock {

/// Input rejected before any computation (bad parameter, bad config key, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine could not produce a trustworthy answer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Steady-state linear solve failed; carries the reciprocal condition estimate.
class SolverError : public NumericalError {
 public:
  SolverError(const std::string& what, double rcond)
      : NumericalError(what), rcond_(rcond) {}
  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

/// Second-order perturbation theory evaluated on a level crossing.
class SingularDetuningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Adaptive quadrature did not reach its tolerance in some grid cell.
class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, double theta, double phi,
                  double error_estimate)
      : NumericalError(what),
        theta_(theta),
        phi_(phi),
        error_estimate_(error_estimate) {}
  double theta() const noexcept { return theta_; }
  double phi() const noexcept { return phi_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double theta_;
  double phi_;
  double error_estimate_;
};

}  // namespace nvlock
