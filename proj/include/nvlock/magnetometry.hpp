#pragma once

// Forward and inverse NV magnetometry from the two |0>-connected lines.

#include <vector>

#include "nvlock/spin_core.hpp"

namespace nvlock {

/// Frequencies in Hz. nu_minus is the |0> <-> |-1> line and keeps that label
/// through the anticrossing; nu_plus is the |0> <-> |+1> line.
struct TransitionPair {
  double nu_minus = 0.0;
  double nu_plus = 0.0;
  double linewidth_minus = 0.0;  // Hz, FWHM-like; 0 when unknown
  double linewidth_plus = 0.0;
};

/// Eigenstates sorted by energy with their |0> weight |<0|psi>|^2.
struct SortedLevels {
  std::array<double, 3> energies{};  // rad/s, ascending
  Matrix3c vectors = Matrix3c::Identity();
  std::array<double, 3> zero_weight{};
};

SortedLevels sorted_levels(const SpinParams& params, const Vector3& b_nv);

/// Line labelling used everywhere: nu_minus = E_mid - E_low, and nu_plus is
/// E_high minus the mean of E_low and E_mid weighted by |<0|psi>|^8.
TransitionPair transitions_for_field(const SpinParams& params, const Vector3& b_nv);

/// Field of magnitude `field` at angle theta from the NV axis.
TransitionPair transition_frequencies(const SpinParams& params, double theta, double field);

struct AngleField {
  double theta = 0.0;  // rad
  double field = 0.0;  // T
};

struct AngleFieldEstimate {
  double theta = 0.0;      // rad
  double field = 0.0;      // T
  double residual = 0.0;   // Hz, max of the two line mismatches
  double theta_err = 0.0;  // rad
  double field_err = 0.0;  // T
  int iterations = 0;
  /// Other (theta, B) in range that reproduce both lines within tolerance.
  /// Near the anticrossing the minus line folds back, and at large angles the
  /// mixing does, so a pair can have two exact preimages.
  std::vector<AngleField> alternatives;
};

struct InversionOptions {
  double theta_min = 0.0;
  double theta_max = constants::pi / 2.0;
  double field_min = 0.0;
  double field_max = 0.3;
  int theta_steps = 46;
  int field_steps = 61;
  /// Accepted mismatch is max(tolerance_hz, linewidth / 100).
  double tolerance_hz = 1e3;
};

/// Levenberg-Marquardt on the two line frequencies, started from the local
/// minima of a grid search and from the closed-form solutions for lines that
/// share their lower level or their middle level. The
/// linewidths set the error bars through the local Jacobian (zero linewidths
/// give zero errors); near theta = 0 the second-order sensitivity bounds
/// theta_err instead. Throws NumericalError when no grid start converges.
AngleFieldEstimate invert_angle_field(const SpinParams& params, const TransitionPair& pair,
                                      const InversionOptions& options = {});

}  // namespace nvlock
