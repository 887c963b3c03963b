#pragma once

/**
 * @file  spin_core.hpp
 * @brief Ground-state spin-1 model of a single NV orientation class.
 *
 * Everything in this header works in the NV frame: z along the N-V axis.
 * Matrices use the basis ordering (|+1>, |0>, |-1>), so index 0 is m_s=+1,
 * index 1 is m_s=0 and index 2 is m_s=-1.
 *
 * Rates are stored as they enter the master equation: the zero-field splitting,
 * the dephasing rate and the gyromagnetic ratio are angular (rad/s, rad/(s T)),
 * the longitudinal and pumping rates are plain population rates (1/s).
 */

#include <array>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nvlock/constants.hpp"

namespace nvlock {

using Matrix3c = Eigen::Matrix3cd;
using Vector3 = Eigen::Vector3d;

struct SpinParams {
  double zero_field_splitting = constants::two_pi * 2.87e9;  // rad/s
  double gyromagnetic_ratio = constants::two_pi * 28.024e9;  // rad/(s T)
  double longitudinal_rate = 2.0e3;                          // 1/s
  double dephasing_rate = constants::two_pi * 5.0e6;         // rad/s
  double pumping_rate = 1.0e5;                               // 1/s
  /// NV number density of one orientation class (m^-3). Default is 1 ppm.
  double density = 1.0e-6 * constants::diamond_carbon_density;
  /// Number of spins in each of the four orientation classes.
  std::array<double, 4> spins_per_class{2.5e8, 2.5e8, 2.5e8, 2.5e8};

  /// gamma_las / (3 Gamma_1 + gamma_las), the steady-state polarisation factor.
  double pumping_factor() const;
  double total_spins() const;
  /// Throws ValidationError on non-positive rates or negative counts.
  void validate() const;
};

enum class Frame { Lab, Crystal, Nv };

const char* to_string(Frame frame);

/// A magnetic field in tesla, tagged with the frame its components refer to.
struct FieldVector {
  Vector3 tesla = Vector3::Zero();
  Frame frame = Frame::Lab;

  static FieldVector nv(double bx, double by, double bz) {
    return {Vector3(bx, by, bz), Frame::Nv};
  }
  static FieldVector lab(const Vector3& b) { return {b, Frame::Lab}; }
  double norm() const { return tesla.norm(); }
};

/// Throws ValidationError when a field is non-finite or carries the wrong frame.
void require_frame(const FieldVector& b, Frame expected, const char* who);

/// 3x3 density matrix of one class. The constructor does not check anything;
/// call check() where the invariants matter.
class DensityMatrix3 {
 public:
  DensityMatrix3() = default;
  explicit DensityMatrix3(const Matrix3c& m) : m_(m) {}

  const Matrix3c& matrix() const { return m_; }
  std::complex<double> operator()(int i, int j) const { return m_(i, j); }

  double population_plus() const { return m_(0, 0).real(); }
  double population_zero() const { return m_(1, 1).real(); }
  double population_minus() const { return m_(2, 2).real(); }

  double hermiticity_error() const;
  double trace_error() const;
  double min_eigenvalue() const;

  /// Hermitian to 1e-12, unit trace to 1e-10 and eigenvalues >= -1e-10.
  bool valid() const;

 private:
  Matrix3c m_ = Matrix3c::Identity() / 3.0;
};

namespace spin1 {
const Matrix3c& sx();
const Matrix3c& sy();
const Matrix3c& sz();
}  // namespace spin1

/// H / hbar in rad/s for a field given in NV-frame components.
Matrix3c hamiltonian_angular(const SpinParams& params, const Vector3& b_nv);

/// hbar D Sz^2 + hbar gamma_e B.S, in joules.
Matrix3c build_hamiltonian(const SpinParams& params, const FieldVector& b_nv);

/// Steady state of the pumped, relaxing and dephasing master equation.
/// Throws SolverError if the Liouvillian turns out singular.
DensityMatrix3 steady_state(const SpinParams& params, const FieldVector& b_nv);

/// Same, with additional Lindblad jump operators (rates folded into the
/// operators, i.e. L = sqrt(W) |a><b|). Used by the microwave model.
DensityMatrix3 steady_state(const SpinParams& params, const FieldVector& b_nv,
                            std::span<const Matrix3c> extra_jumps);

/// <S> = tr(rho S) for the three spin-1 operators.
Vector3 spin_expectation(const DensityMatrix3& rho);

/// Magnetic moment of one spin, -hbar gamma_e <S>, in J/T (NV frame).
Vector3 moment_per_spin(const SpinParams& params, const DensityMatrix3& rho);

/// Magnetisation -d hbar gamma_e <S> in A/m (NV frame).
Vector3 magnetization(const SpinParams& params, const DensityMatrix3& rho);

struct SusceptibilityTensor {
  double chi_perp = 0.0;
  double chi_d = 0.0;
  double chi_par = 0.0;

  /// Full tensor with chi_xx = chi_yy = chi_perp, chi_yx = -chi_xy = chi_d.
  Eigen::Matrix3d tensor() const;
};

/// Detuning of the |0> <-> |-1> pair, D - gamma_e B0 (rad/s).
double detuning_minus(const SpinParams& params, double b0);
/// Detuning of the |0> <-> |+1> pair, D + gamma_e B0 (rad/s).
double detuning_plus(const SpinParams& params, double b0);

/// Finite-difference linear response of the steady-state magnetisation around
/// an axial field b0, with Richardson extrapolation and step refinement.
SusceptibilityTensor susceptibility_numeric(const SpinParams& params, double b0);

/// Closed-form first-order solution of the master equation.
SusceptibilityTensor susceptibility_analytic(const SpinParams& params, double b0);

struct Populations {
  double minus = 0.0;
  double zero = 1.0;
  double plus = 0.0;
};

/// Second-order (Van Vleck) transverse susceptibility. Throws
/// SingularDetuningError when b0 sits on a level crossing.
double susceptibility_van_vleck(const SpinParams& params, const Populations& p,
                                double b0);

/// Eigenvalues (J) and eigenvectors labelled by continuation from the bare
/// states, index 0 = |+1>, 1 = |0>, 2 = |-1>.
struct SpinLevelSet {
  double field = 0.0;
  std::array<double, 3> energies{};
  Matrix3c vectors = Matrix3c::Identity();  // column k belongs to energies[k]
  std::array<double, 3> populations{};      // steady-state weights, same labels
};

/// Eigen-energy curves for a field at angle theta to the NV axis, tracked by
/// maximum eigenvector overlap between successive fields.
std::vector<SpinLevelSet> eigen_energies_vs_field(const SpinParams& params,
                                                  double theta,
                                                  std::span<const double> fields);

}  // namespace nvlock
