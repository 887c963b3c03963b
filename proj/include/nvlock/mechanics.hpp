#pragma once

/**
 * @file  mechanics.hpp
 * @brief Spin torques on the diamond, magnetic energy landscapes, equilibrium
 *        against a harmonic trap, and librational frequencies.
 *
 * The angular problem is one-dimensional: theta is the angle between the
 * tracked NV axis and the field, swept at fixed azimuth phi. The spin steady
 * state is assumed to follow the orientation adiabatically.
 *
 * Sign conventions: the torque vector on the crystal is M x B (lab frame).
 * The generalised torque along theta is -d<H>/d theta, so positive values
 * push the tracked axis away from the field.
 */

#include <functional>
#include <limits>
#include <vector>

#include "nvlock/crystal.hpp"
#include "nvlock/spin_core.hpp"

namespace nvlock {

struct TrapModel {
  double inertia = 1e-22;                                   // kg m^2
  double angular_frequency = constants::two_pi * 155.0;     // rad/s
  double theta0 = 8.0 * constants::deg;                     // rad

  double stiffness() const { return inertia * angular_frequency * angular_frequency; }
  void validate() const;
};

/// Density matrix of one class for a field in its NV frame.
using ClassSolver = std::function<DensityMatrix3(int class_index, const FieldVector& b_nv)>;

/// The default solver: plain optically pumped steady state.
ClassSolver steady_state_solver(const SpinParams& params);

/// Net moment (J/T) of all four classes for a lab field, lab frame.
Vector3 total_moment_lab(const SpinParams& params, const CrystalOrientation& orientation,
                         const FieldVector& b_lab, const ClassSolver& solver);

/// Torque M x B on a crystal with the given attitude in a lab field.
Vector3 spin_torque_lab(const SpinParams& params, const CrystalOrientation& orientation,
                        const FieldVector& b_lab);

struct SpinTorque {
  Vector3 lab = Vector3::Zero();  // N m, torque vector on the crystal
  double theta = 0.0;             // generalised torque along theta, N m / rad
  double phi = 0.0;               // generalised torque along phi
  Vector3 field_lab = Vector3::Zero();
  Vector3 moment_lab = Vector3::Zero();
};

/// Field of magnitude `field` placed at (state.theta, state.phi) relative to
/// the tracked class of a crystal held at `geometry.orientation`.
FieldVector lab_field_for_state(const CrystalGeometry& geometry, double field,
                                const AngularState& state);

SpinTorque spin_torque(const SpinParams& params, const CrystalGeometry& geometry,
                       double field, const AngularState& state);

SpinTorque spin_torque(const SpinParams& params, const CrystalGeometry& geometry,
                       double field, const AngularState& state, const ClassSolver& solver);

// ---------------------------------------------------------------------------
// Energy landscape

struct QuadratureOptions {
  double abs_tol = 1e-28;  // J
  double rel_tol = 1e-9;
  int max_depth = 24;
};

/// U(theta, phi) = -integral_0^theta tau_theta dtheta' at fixed phi.
double magnetic_energy(const SpinParams& params, const CrystalGeometry& geometry,
                       double field, double theta, double phi,
                       const QuadratureOptions& options = {});

/// U(theta_to) - U(theta_from) along one constant-phi path.
double magnetic_energy_difference(const SpinParams& params, const CrystalGeometry& geometry,
                                  double field, double theta_from, double theta_to,
                                  double phi, const QuadratureOptions& options = {});

struct EnergyLandscape {
  std::vector<double> theta;          // rad, increasing
  std::vector<double> phi;            // rad, increasing
  std::vector<std::vector<double>> energy;  // energy[i][j] at (theta[i], phi[j]), J
  double field = 0.0;
  SpinParams params;
  /// Largest |circulation| of the torque field around a grid cell, divided by
  /// the largest |energy| on the grid.
  double max_relative_curl = 0.0;
  double max_quadrature_error = 0.0;

  double min_energy() const;
  double max_energy() const;
};

/// Grids must be monotone increasing. Integration runs from theta = 0 along
/// each phi column, so theta may include negative values (theta < 0 is the
/// phi + pi direction). Throws QuadratureError naming the worst cell.
EnergyLandscape magnetic_energy_landscape(const SpinParams& params,
                                          const CrystalGeometry& geometry, double field,
                                          const std::vector<double>& theta_grid,
                                          const std::vector<double>& phi_grid,
                                          const QuadratureOptions& options = {});

// ---------------------------------------------------------------------------
// Equilibrium

struct EquilibriumResult {
  double theta_star = std::numeric_limits<double>::quiet_NaN();  // rad
  bool bound = false;     // false: no stable root in the search interval
  bool stable = false;
  double stiffness = 0.0;       // -d(total torque)/d theta at theta_star, N m/rad
  double torque_residual = 0.0; // N m
  int iterations = 0;
};

struct EquilibriumOptions {
  double phi = 0.0;
  /// Added to the trap's preferred angle (a field rotation in the trap plane).
  double trap_offset = 0.0;
  /// Starting guess; NaN means start from the trap's preferred angle.
  double warm_start = std::numeric_limits<double>::quiet_NaN();
  double search_min = 0.0;
  double search_max = constants::pi / 2.0;
};

/// Balances a generalised torque tau(theta) against the trap -k (theta - ref).
EquilibriumResult solve_torque_balance(const std::function<double(double)>& spin_torque_theta,
                                       double stiffness, double reference,
                                       double warm_start, double search_min,
                                       double search_max);

EquilibriumResult equilibrium_angle(const SpinParams& params, const CrystalGeometry& geometry,
                                    const TrapModel& trap, double field,
                                    const EquilibriumOptions& options = {});

struct SweepPoint {
  double field = 0.0;
  EquilibriumResult result;
};

/// Equilibrium along a field sweep, warm-started from the previous point in
/// the given order (construct the field list descending for a down-sweep).
std::vector<SweepPoint> equilibrium_sweep(const SpinParams& params,
                                          const CrystalGeometry& geometry,
                                          const TrapModel& trap,
                                          const std::vector<double>& fields,
                                          const EquilibriumOptions& options = {});

struct CriticalFieldOptions {
  double field_min = 0.05;
  double field_max = 0.2;
  double coarse_step = 1e-3;
  double tolerance = 1e-6;
  double phi = 0.0;
};

/// Field of the steep drop of theta*(B) on an up-sweep. Without trap torque
/// it is the zero of chi_perp of the tracked class. Throws NumericalError
/// when nothing is found in the range.
double critical_field(const SpinParams& params, const CrystalGeometry& geometry,
                      const TrapModel& trap, const CriticalFieldOptions& options = {});

struct RotationPoint {
  double field_angle = 0.0;    // theta_B, rad
  double theta = 0.0;          // equilibrium NV-field angle, rad
  double no_spin_theta = 0.0;  // trap-only response, theta0 + theta_B
  EquilibriumResult result;
};

/// Field of fixed magnitude rotated in the trap plane. theta is signed here
/// (negative is the phi + pi side). The starting branch is the one reached by
/// ramping the field from zero at the first angle in `ramp_steps` steps
/// (ramp_steps <= 1 starts from the trap angle instead).
std::vector<RotationPoint> field_rotation_sweep(const SpinParams& params,
                                                const CrystalGeometry& geometry,
                                                const TrapModel& trap, double field,
                                                const std::vector<double>& field_angles,
                                                double phi = 0.0, int ramp_steps = 101);

struct LibrationResult {
  double omega_numeric = 0.0;   // rad/s, trap included
  double omega_analytic = 0.0;  // rad/s, dispersive single-class formula
  double magnetic_stiffness = 0.0;
  double total_stiffness = 0.0;
  double theta_star = std::numeric_limits<double>::quiet_NaN();
  bool bound = false;  // an equilibrium was found
  bool stable = false;
};

/// Small-oscillation frequency around the equilibrium. The numeric value is
/// sqrt(k_eff / I) with k_eff the second difference of the magnetic energy
/// plus the trap stiffness; `stable` is false when k_eff <= 0.
LibrationResult librational_frequency(const SpinParams& params,
                                      const CrystalGeometry& geometry,
                                      const TrapModel& trap, double field,
                                      double phi = 0.0);

/// sqrt(hbar N P / (I |D - gamma_e B|)) gamma_e B with N the tracked-class count.
double librational_frequency_analytic(const SpinParams& params, int tracked_class,
                                      double inertia, double field);

}  // namespace nvlock
