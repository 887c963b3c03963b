#pragma once

// Mechanically detected magnetic resonance: microwave-driven steady states,
// frequency scans of the equilibrium angle, and up/down hysteresis.
//
// The drive is an incoherent population transfer between eigenstates with a
// Lorentzian rate W = (Omega_R^2 / 2) G / (dw^2 + G^2). Every |0>-connected
// transition of every class sees the drive at once.

#include <array>
#include <vector>

#include "nvlock/magnetometry.hpp"
#include "nvlock/mechanics.hpp"

namespace nvlock {

enum class SweepDirection { Up, Down };

const char* to_string(SweepDirection d);

struct MicrowaveDrive {
  double frequency = 2.87e9;    // Hz, used by mw_steady_state
  double rabi_rate = 0.0;       // Omega_R, rad/s
  std::vector<double> sweep;    // Hz, monotone in `direction`
  SweepDirection direction = SweepDirection::Up;
  int averages = 1;             // label only
  double extra_broadening = 0.0;  // rad/s added to Gamma2* in the line shape
  bool power_broadening = false;

  void validate() const;
  /// Line half width G in rad/s.
  double linewidth(const SpinParams& params) const;
  /// W for a drive detuned by `detuning` (rad/s) from a transition.
  double transfer_rate(const SpinParams& params, double detuning) const;
};

/// Jump operators sqrt(W w) |a><b| and the reverse for the driven pairs.
std::vector<Matrix3c> mw_jump_operators(const SpinParams& params, const Vector3& b_nv,
                                        const MicrowaveDrive& drive, double frequency_hz);

/// Steady state with the drive at `drive.frequency`.
DensityMatrix3 mw_steady_state(const SpinParams& params, const FieldVector& b_nv,
                               const MicrowaveDrive& drive);

/// Class solver with the drive held at `frequency_hz`.
ClassSolver mw_solver(const SpinParams& params, const MicrowaveDrive& drive,
                      double frequency_hz);

struct MdmrRecord {
  double frequency = 0.0;    // Hz
  double theta = 0.0;        // rad
  double delta_theta = 0.0;  // rad, relative to the MW-off equilibrium
  std::array<TransitionPair, 4> transitions{};  // per class, at this theta
  bool converged = false;
  int iterations = 0;
};

struct MdmrSpectrum {
  double field = 0.0;
  SweepDirection direction = SweepDirection::Up;
  MdmrRecord baseline;  // MW off
  std::vector<MdmrRecord> records;
};

/// Sweeps the drive frequency in the given order, warm-starting each
/// equilibrium from the previous one. Throws NumericalError when there is no
/// stable MW-off equilibrium; records without a stable root are flagged.
MdmrSpectrum mdmr_scan(const SpinParams& params, const CrystalGeometry& geometry,
                       const TrapModel& trap, double field, const MicrowaveDrive& drive,
                       const EquilibriumOptions& options = {});

struct HysteresisPair {
  MdmrSpectrum up;
  MdmrSpectrum down;
};

/// Runs the sweep frequencies ascending and then descending.
HysteresisPair hysteresis_pair(const SpinParams& params, const CrystalGeometry& geometry,
                               const TrapModel& trap, double field,
                               const MicrowaveDrive& drive,
                               const EquilibriumOptions& options = {});

enum class EdgeSide { Low, High, None };

const char* to_string(EdgeSide s);

struct EdgeReport {
  EdgeSide side = EdgeSide::None;
  double jump_frequency = 0.0;  // Hz, midpoint of the largest one-step jump
  double jump_size = 0.0;       // rad
  SweepDirection sweep = SweepDirection::Up;
};

/// Largest one-step change of theta across both sweeps within
/// |nu - line_center| <= half_window, and on which side of the line it sits.
/// `min_jump` (rad) below which no edge is reported.
EdgeReport jump_edge(const HysteresisPair& pair, double line_center_hz,
                     double half_window_hz, double min_jump = 1e-6);

}  // namespace nvlock
