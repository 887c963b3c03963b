#include "nvlock/spin_core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvlock/errors.hpp"

namespace nvlock {

namespace {

using Complex = std::complex<double>;
using Matrix9c = Eigen::Matrix<Complex, 9, 9>;
using Vector9c = Eigen::Matrix<Complex, 9, 1>;

constexpr int kPlus = 0;
constexpr int kZero = 1;
constexpr int kMinus = 2;

constexpr int vec_index(int i, int j) { return 3 * i + j; }

bool finite(const Vector3& v) { return v.allFinite(); }

// Liouvillian of d(rho)/dt acting on the row-major vectorisation of rho.
Matrix9c liouvillian(const SpinParams& p, const Matrix3c& h,
                     std::span<const Matrix3c> extra_jumps) {
  Matrix9c l = Matrix9c::Zero();
  const Complex i_unit(0.0, 1.0);

  // -i [H, rho]
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      for (int k = 0; k < 3; ++k) {
        l(vec_index(i, j), vec_index(k, j)) += -i_unit * h(i, k);
        l(vec_index(i, j), vec_index(i, k)) += i_unit * h(k, j);
      }
    }
  }

  // Population sector: |+-1> relax to |0> at Gamma_1 and are pumped at gamma_las.
  const double g1 = p.longitudinal_rate;
  const double gl = p.pumping_rate;
  for (int s : {kPlus, kMinus}) {
    l(vec_index(s, s), vec_index(s, s)) += -g1 - gl;
    l(vec_index(s, s), vec_index(kZero, kZero)) += g1;
    l(vec_index(kZero, kZero), vec_index(s, s)) += g1 + gl;
    l(vec_index(kZero, kZero), vec_index(kZero, kZero)) += -g1;
  }

  // Pure dephasing of every coherence.
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) l(vec_index(i, j), vec_index(i, j)) += -p.dephasing_rate;
    }
  }

  for (const Matrix3c& jump : extra_jumps) {
    const Matrix3c a = jump.adjoint() * jump;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        for (int k = 0; k < 3; ++k) {
          for (int m = 0; m < 3; ++m) {
            l(vec_index(i, j), vec_index(k, m)) += jump(i, k) * std::conj(jump(j, m));
          }
          l(vec_index(i, j), vec_index(k, j)) += -0.5 * a(i, k);
          l(vec_index(i, j), vec_index(i, k)) += -0.5 * a(k, j);
        }
      }
    }
  }
  return l;
}

}  // namespace

double SpinParams::pumping_factor() const {
  return pumping_rate / (3.0 * longitudinal_rate + pumping_rate);
}

double SpinParams::total_spins() const {
  double n = 0.0;
  for (double c : spins_per_class) n += c;
  return n;
}

void SpinParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw ValidationError(std::string("spin parameter '") + name +
                            "' must be finite and > 0");
    }
  };
  positive(zero_field_splitting, "zero_field_splitting");
  positive(gyromagnetic_ratio, "gyromagnetic_ratio");
  positive(longitudinal_rate, "longitudinal_rate");
  positive(dephasing_rate, "dephasing_rate");
  if (!(std::isfinite(pumping_rate) && pumping_rate >= 0.0)) {
    throw ValidationError("spin parameter 'pumping_rate' must be finite and >= 0");
  }
  // Pumping and relaxation act on populations only, so the coherences must
  // decay at least as fast as the populations they connect for the master
  // equation to stay completely positive.
  const double floor = std::max(longitudinal_rate + pumping_rate, 2.0 * longitudinal_rate);
  if (dephasing_rate < floor) {
    std::ostringstream msg;
    msg << "spin parameters: dephasing_rate (" << dephasing_rate
        << " rad/s) must be >= max(Gamma_1 + gamma_las, 2 Gamma_1) = " << floor
        << "; slower dephasing gives negative populations";
    throw ValidationError(msg.str());
  }
  if (!(std::isfinite(density) && density >= 0.0)) {
    throw ValidationError("spin parameter 'density' must be finite and >= 0");
  }
  for (double c : spins_per_class) {
    if (!(std::isfinite(c) && c >= 0.0)) {
      throw ValidationError("spins_per_class entries must be finite and >= 0");
    }
  }
}

const char* to_string(Frame frame) {
  switch (frame) {
    case Frame::Lab: return "lab";
    case Frame::Crystal: return "crystal";
    case Frame::Nv: return "nv";
  }
  return "?";
}

void require_frame(const FieldVector& b, Frame expected, const char* who) {
  if (!finite(b.tesla)) {
    throw ValidationError(std::string(who) + ": non-finite field component");
  }
  if (b.frame != expected) {
    throw ValidationError(std::string(who) + ": field expressed in the " +
                          to_string(b.frame) + " frame, expected " +
                          to_string(expected));
  }
}

double DensityMatrix3::hermiticity_error() const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix3::trace_error() const {
  return std::abs(m_.trace() - Complex(1.0, 0.0));
}

double DensityMatrix3::min_eigenvalue() const {
  const Matrix3c herm = 0.5 * (m_ + m_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix3c> es(herm, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool DensityMatrix3::valid() const {
  return hermiticity_error() <= 1e-12 && trace_error() <= 1e-10 &&
         min_eigenvalue() >= -1e-10;
}

namespace spin1 {

const Matrix3c& sx() {
  static const Matrix3c m = [] {
    const double r = 1.0 / std::sqrt(2.0);
    Matrix3c s;
    s << 0, r, 0,
         r, 0, r,
         0, r, 0;
    return s;
  }();
  return m;
}

const Matrix3c& sy() {
  static const Matrix3c m = [] {
    const Complex r(0.0, 1.0 / std::sqrt(2.0));
    Matrix3c s;
    s << 0.0, -r, 0.0,
          r, 0.0, -r,
         0.0,  r, 0.0;
    return s;
  }();
  return m;
}

const Matrix3c& sz() {
  static const Matrix3c m = [] {
    Matrix3c s = Matrix3c::Zero();
    s(0, 0) = 1.0;
    s(2, 2) = -1.0;
    return s;
  }();
  return m;
}

}  // namespace spin1

Matrix3c hamiltonian_angular(const SpinParams& params, const Vector3& b_nv) {
  const Matrix3c& sz = spin1::sz();
  const double g = params.gyromagnetic_ratio;
  return params.zero_field_splitting * sz * sz +
         g * (b_nv.x() * spin1::sx() + b_nv.y() * spin1::sy() + b_nv.z() * sz);
}

Matrix3c build_hamiltonian(const SpinParams& params, const FieldVector& b_nv) {
  require_frame(b_nv, Frame::Nv, "build_hamiltonian");
  return constants::hbar * hamiltonian_angular(params, b_nv.tesla);
}

DensityMatrix3 steady_state(const SpinParams& params, const FieldVector& b_nv) {
  return steady_state(params, b_nv, {});
}

DensityMatrix3 steady_state(const SpinParams& params, const FieldVector& b_nv,
                            std::span<const Matrix3c> extra_jumps) {
  params.validate();
  require_frame(b_nv, Frame::Nv, "steady_state");
  const Matrix3c h = hamiltonian_angular(params, b_nv.tesla);
  Matrix9c l = liouvillian(params, h, extra_jumps);

  // The |0><0| population equation is redundant with trace conservation;
  // replace it by tr(rho) = 1.
  const double scale = params.dephasing_rate;
  const int row = vec_index(kZero, kZero);
  l.row(row).setZero();
  Vector9c rhs = Vector9c::Zero();
  for (int k = 0; k < 3; ++k) l(row, vec_index(k, k)) = scale;
  rhs(row) = scale;

  Eigen::PartialPivLU<Matrix9c> lu(l);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-15)) {
    std::ostringstream msg;
    msg << "steady_state: singular Liouvillian (rcond = " << rcond << ")";
    throw SolverError(msg.str(), rcond);
  }
  const Vector9c x = lu.solve(rhs);
  if (!x.allFinite()) {
    throw SolverError("steady_state: non-finite solution", rcond);
  }

  Matrix3c rho;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) rho(i, j) = x(vec_index(i, j));
  }
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  return DensityMatrix3(rho);
}

Vector3 spin_expectation(const DensityMatrix3& rho) {
  const Matrix3c& m = rho.matrix();
  return {(m * spin1::sx()).trace().real(), (m * spin1::sy()).trace().real(),
          (m * spin1::sz()).trace().real()};
}

Vector3 moment_per_spin(const SpinParams& params, const DensityMatrix3& rho) {
  return -constants::hbar * params.gyromagnetic_ratio * spin_expectation(rho);
}

Vector3 magnetization(const SpinParams& params, const DensityMatrix3& rho) {
  return params.density * moment_per_spin(params, rho);
}

Eigen::Matrix3d SusceptibilityTensor::tensor() const {
  Eigen::Matrix3d t;
  t << chi_perp, -chi_d, 0.0,
       chi_d, chi_perp, 0.0,
       0.0, 0.0, chi_par;
  return t;
}

double detuning_minus(const SpinParams& params, double b0) {
  return params.zero_field_splitting - params.gyromagnetic_ratio * b0;
}

double detuning_plus(const SpinParams& params, double b0) {
  return params.zero_field_splitting + params.gyromagnetic_ratio * b0;
}

namespace {

// mu0 * dM/dB along `probe`, central difference of step h around (0,0,b0).
Vector3 central_response(const SpinParams& params, double b0,
                         const Vector3& probe, double h) {
  const Vector3 base(0.0, 0.0, b0);
  const Vector3 mp =
      magnetization(params, steady_state(params, FieldVector{base + h * probe, Frame::Nv}));
  const Vector3 mm =
      magnetization(params, steady_state(params, FieldVector{base - h * probe, Frame::Nv}));
  return constants::mu0 * (mp - mm) / (2.0 * h);
}

// Richardson-extrapolated derivative with successive step refinement.
Vector3 extrapolated_response(const SpinParams& params, double b0,
                              const Vector3& probe, double scale) {
  const double g = params.gyromagnetic_ratio;
  double h = std::max(1e-9, 1e-5 * params.dephasing_rate / g);
  constexpr double kMinStep = 1e-15;
  Vector3 coarse = central_response(params, b0, probe, h);
  for (int attempt = 0; attempt < 12; ++attempt) {
    const double half = 0.5 * h;
    if (half < kMinStep) break;
    const Vector3 fine = central_response(params, b0, probe, half);
    const Vector3 extrap = (4.0 * fine - coarse) / 3.0;
    const double change = (fine - coarse).cwiseAbs().maxCoeff();
    const double magnitude = std::max(extrap.cwiseAbs().maxCoeff(), 1e-6 * scale);
    // Second-order convergence: the h^2 error of `fine` is change / 3, and
    // the extrapolated value is a further order better.
    if (change <= 1e-5 * magnitude) return extrap;
    coarse = fine;
    h = half;
  }
  std::ostringstream msg;
  msg << "susceptibility_numeric: finite difference did not converge at B0 = " << b0
      << " T (last step " << h << " T)";
  throw NumericalError(msg.str());
}

}  // namespace

SusceptibilityTensor susceptibility_numeric(const SpinParams& params, double b0) {
  params.validate();
  if (!std::isfinite(b0)) throw ValidationError("susceptibility_numeric: non-finite B0");
  const double g = params.gyromagnetic_ratio;
  const double scale =
      params.density * constants::hbar * g * g * constants::mu0 / params.dephasing_rate;

  const Vector3 dx = extrapolated_response(params, b0, Vector3::UnitX(), scale);
  const Vector3 dz = extrapolated_response(params, b0, Vector3::UnitZ(), scale);
  return {dx.x(), dx.y(), dz.z()};
}

SusceptibilityTensor susceptibility_analytic(const SpinParams& params, double b0) {
  params.validate();
  const double g = params.gyromagnetic_ratio;
  const double g2 = params.dephasing_rate;
  const double dm = detuning_minus(params, b0);
  const double dp = detuning_plus(params, b0);
  const double pref = params.density * constants::hbar * g * g * constants::mu0 *
                      params.pumping_factor();
  const double lm = 1.0 / (dm * dm + g2 * g2);
  const double lp = 1.0 / (dp * dp + g2 * g2);
  return {pref * (dm * lm + dp * lp), pref * (g2 * lm - g2 * lp), 0.0};
}

double susceptibility_van_vleck(const SpinParams& params, const Populations& p,
                                double b0) {
  const double sum = p.minus + p.zero + p.plus;
  if (!(std::abs(sum - 1.0) <= 1e-9)) {
    throw ValidationError("susceptibility_van_vleck: populations must sum to 1");
  }
  const double dm = detuning_minus(params, b0);
  const double dp = detuning_plus(params, b0);
  const double tiny = 1e-12 * params.zero_field_splitting;
  if (std::abs(dm) <= tiny || std::abs(dp) <= tiny) {
    throw SingularDetuningError(
        "susceptibility_van_vleck: vanishing detuning, perturbation theory invalid");
  }
  const double g = params.gyromagnetic_ratio;
  return params.density * constants::hbar * constants::mu0 * g * g *
         ((p.zero - p.minus) / dm + (p.zero - p.plus) / dp);
}

namespace {

using Permutation = std::array<int, 3>;

// perm[label] = column of `vectors` assigned to that label.
Permutation best_assignment(const Matrix3c& reference, const Matrix3c& vectors) {
  Permutation perm{0, 1, 2};
  Permutation best = perm;
  double best_score = -1.0;
  const Eigen::Matrix3d overlap = (reference.adjoint() * vectors).cwiseAbs2();
  do {
    double score = 0.0;
    for (int k = 0; k < 3; ++k) score += overlap(k, perm[k]);
    if (score > best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

std::vector<SpinLevelSet> eigen_energies_vs_field(const SpinParams& params,
                                                  double theta,
                                                  std::span<const double> fields) {
  params.validate();
  std::vector<SpinLevelSet> out;
  out.reserve(fields.size());
  Matrix3c reference = Matrix3c::Identity();  // bare |+1>, |0>, |-1>
  const Vector3 dir(std::sin(theta), 0.0, std::cos(theta));
  for (double b : fields) {
    const Vector3 b_nv = b * dir;
    const Matrix3c h = constants::hbar * hamiltonian_angular(params, b_nv);
    Eigen::SelfAdjointEigenSolver<Matrix3c> es(h);
    const Permutation perm = best_assignment(reference, es.eigenvectors());

    SpinLevelSet level;
    level.field = b;
    const DensityMatrix3 rho = steady_state(params, FieldVector{b_nv, Frame::Nv});
    for (int k = 0; k < 3; ++k) {
      level.energies[k] = es.eigenvalues()(perm[k]);
      level.vectors.col(k) = es.eigenvectors().col(perm[k]);
      const auto v = level.vectors.col(k);
      level.populations[k] = (v.adjoint() * rho.matrix() * v)(0, 0).real();
    }
    reference = level.vectors;
    out.push_back(level);
  }
  return out;
}

}  // namespace nvlock
