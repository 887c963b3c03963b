#include "nvlock/mechanics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvlock/errors.hpp"
#include "nvlock/numerics.hpp"

namespace nvlock {

void TrapModel::validate() const {
  if (!(std::isfinite(inertia) && inertia > 0.0)) {
    throw ValidationError("trap inertia must be finite and > 0");
  }
  if (!(std::isfinite(angular_frequency) && angular_frequency >= 0.0)) {
    throw ValidationError("trap angular frequency must be finite and >= 0");
  }
  if (!std::isfinite(theta0)) throw ValidationError("trap theta0 must be finite");
}

ClassSolver steady_state_solver(const SpinParams& params) {
  return [params](int, const FieldVector& b_nv) { return steady_state(params, b_nv); };
}

Vector3 total_moment_lab(const SpinParams& params, const CrystalOrientation& orientation,
                         const FieldVector& b_lab, const ClassSolver& solver) {
  require_frame(b_lab, Frame::Lab, "total_moment_lab");
  Vector3 total = Vector3::Zero();
  for (int c = 0; c < kNumClasses; ++c) {
    const double n = params.spins_per_class[c];
    if (n == 0.0) continue;
    const NvFrame frame = nv_frame(orientation, c, b_lab);
    const FieldVector b_nv{frame.from_lab(b_lab.tesla), Frame::Nv};
    const DensityMatrix3 rho = solver(c, b_nv);
    total += n * frame.to_lab(moment_per_spin(params, rho));
  }
  return total;
}

Vector3 spin_torque_lab(const SpinParams& params, const CrystalOrientation& orientation,
                        const FieldVector& b_lab) {
  const Vector3 m = total_moment_lab(params, orientation, b_lab, steady_state_solver(params));
  return m.cross(b_lab.tesla);
}

FieldVector lab_field_for_state(const CrystalGeometry& geometry, double field,
                                const AngularState& state) {
  const Vector3 dir = field_direction_crystal(geometry.tracked_class, state.theta, state.phi);
  return FieldVector::lab(field * geometry.orientation.to_lab(dir));
}

SpinTorque spin_torque(const SpinParams& params, const CrystalGeometry& geometry,
                       double field, const AngularState& state) {
  return spin_torque(params, geometry, field, state, steady_state_solver(params));
}

SpinTorque spin_torque(const SpinParams& params, const CrystalGeometry& geometry,
                       double field, const AngularState& state, const ClassSolver& solver) {
  const FieldVector b_lab = lab_field_for_state(geometry, field, state);
  SpinTorque out;
  out.field_lab = b_lab.tesla;
  out.moment_lab = total_moment_lab(params, geometry.orientation, b_lab, solver);
  out.lab = out.moment_lab.cross(b_lab.tesla);
  const Vector3 b_cross_m = b_lab.tesla.cross(out.moment_lab);
  const Vector3 w =
      geometry.orientation.to_lab(theta_generator_crystal(geometry.tracked_class, state.phi));
  const Vector3 a = geometry.orientation.to_lab(phi_generator_crystal(geometry.tracked_class));
  out.theta = w.dot(b_cross_m);
  out.phi = a.dot(b_cross_m);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double integrate_torque(const SpinParams& params, const CrystalGeometry& geometry,
                        double field, double phi, double from, double to,
                        const QuadratureOptions& options, double* error_out = nullptr) {
  const ClassSolver solver = steady_state_solver(params);
  auto tau = [&](double theta) {
    return spin_torque(params, geometry, field, AngularState{theta, phi, 0.0}, solver).theta;
  };
  const auto q = numerics::integrate(tau, from, to, options.abs_tol, options.rel_tol,
                                     options.max_depth);
  if (error_out != nullptr) *error_out = q.error;
  if (!q.converged) {
    std::ostringstream msg;
    msg << "magnetic energy quadrature did not converge on theta in [" << from << ", "
        << to << "], phi = " << phi << " (error estimate " << q.error << " J)";
    throw QuadratureError(msg.str(), to, phi, q.error);
  }
  return -q.value;
}

}  // namespace

double magnetic_energy(const SpinParams& params, const CrystalGeometry& geometry,
                       double field, double theta, double phi,
                       const QuadratureOptions& options) {
  params.validate();
  return integrate_torque(params, geometry, field, phi, 0.0, theta, options);
}

double magnetic_energy_difference(const SpinParams& params, const CrystalGeometry& geometry,
                                  double field, double theta_from, double theta_to,
                                  double phi, const QuadratureOptions& options) {
  params.validate();
  return integrate_torque(params, geometry, field, phi, theta_from, theta_to, options);
}

double EnergyLandscape::min_energy() const {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& row : energy) {
    for (double u : row) v = std::min(v, u);
  }
  return v;
}

double EnergyLandscape::max_energy() const {
  double v = -std::numeric_limits<double>::infinity();
  for (const auto& row : energy) {
    for (double u : row) v = std::max(v, u);
  }
  return v;
}

EnergyLandscape magnetic_energy_landscape(const SpinParams& params,
                                          const CrystalGeometry& geometry, double field,
                                          const std::vector<double>& theta_grid,
                                          const std::vector<double>& phi_grid,
                                          const QuadratureOptions& options) {
  params.validate();
  auto monotone = [](const std::vector<double>& g) {
    return std::adjacent_find(g.begin(), g.end(), std::greater_equal<>()) == g.end();
  };
  if (!monotone(theta_grid) || !monotone(phi_grid)) {
    throw ValidationError("landscape grids must be strictly increasing");
  }

  EnergyLandscape out;
  out.theta = theta_grid;
  out.phi = phi_grid;
  out.field = field;
  out.params = params;
  const std::size_t nt = theta_grid.size();
  const std::size_t np = phi_grid.size();
  out.energy.assign(nt, std::vector<double>(np, 0.0));
  std::vector<double> column_error(np, 0.0);
  std::vector<std::vector<double>> tau_phi(nt, std::vector<double>(np, 0.0));

  // Index of the first theta >= 0; integrate outward from zero both ways.
  const std::size_t split = static_cast<std::size_t>(
      std::lower_bound(theta_grid.begin(), theta_grid.end(), 0.0) - theta_grid.begin());

  numerics::parallel_for(np, [&](std::size_t j) {
    const double phi = phi_grid[j];
    double err = 0.0;
    double u = 0.0;
    double prev = 0.0;
    for (std::size_t i = split; i < nt; ++i) {
      double e = 0.0;
      u += integrate_torque(params, geometry, field, phi, prev, theta_grid[i], options, &e);
      err += e;
      prev = theta_grid[i];
      out.energy[i][j] = u;
    }
    u = 0.0;
    prev = 0.0;
    for (std::size_t i = split; i-- > 0;) {
      double e = 0.0;
      u += integrate_torque(params, geometry, field, phi, prev, theta_grid[i], options, &e);
      err += e;
      prev = theta_grid[i];
      out.energy[i][j] = u;
    }
    column_error[j] = err;
    for (std::size_t i = 0; i < nt; ++i) {
      tau_phi[i][j] =
          spin_torque(params, geometry, field, AngularState{theta_grid[i], phi, 0.0}).phi;
    }
  });

  out.max_quadrature_error = *std::max_element(column_error.begin(), column_error.end());

  // Circulation of (tau_theta, tau_phi) around each cell; theta legs come
  // from the energy differences, phi legs from the trapezoid rule.
  double scale = 0.0;
  for (const auto& row : out.energy) {
    for (double u : row) scale = std::max(scale, std::abs(u));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < nt; ++i) {
    for (std::size_t j = 0; j + 1 < np; ++j) {
      const double dphi = phi_grid[j + 1] - phi_grid[j];
      const double leg_theta_lo = -(out.energy[i + 1][j] - out.energy[i][j]);
      const double leg_theta_hi = -(out.energy[i + 1][j + 1] - out.energy[i][j + 1]);
      const double leg_phi_top = 0.5 * dphi * (tau_phi[i + 1][j] + tau_phi[i + 1][j + 1]);
      const double leg_phi_bottom = 0.5 * dphi * (tau_phi[i][j] + tau_phi[i][j + 1]);
      const double circulation = leg_theta_lo + leg_phi_top - leg_theta_hi - leg_phi_bottom;
      worst = std::max(worst, std::abs(circulation));
    }
  }
  out.max_relative_curl = scale > 0.0 ? worst / scale : 0.0;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Bracket {
  double lo;
  double hi;
};

double refine_root(const std::function<double(double)>& f, double lo, double hi,
                   double flo, double fhi, int& iterations) {
  // Illinois variant of regula falsi.
  int side = 0;
  double x = lo;
  for (int it = 0; it < 200; ++it) {
    ++iterations;
    x = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(x > std::min(lo, hi) && x < std::max(lo, hi))) x = 0.5 * (lo + hi);
    const double fx = f(x);
    if (fx == 0.0 || std::abs(hi - lo) < 1e-14) return x;
    if ((fx > 0.0) == (flo > 0.0)) {
      lo = x;
      flo = fx;
      if (side == -1) fhi *= 0.5;
      side = -1;
    } else {
      hi = x;
      fhi = fx;
      if (side == 1) flo *= 0.5;
      side = 1;
    }
  }
  return x;
}

}  // namespace

EquilibriumResult solve_torque_balance(const std::function<double(double)>& spin_torque_theta,
                                       double stiffness, double reference,
                                       double warm_start, double search_min,
                                       double search_max) {
  auto f = [&](double theta) { return spin_torque_theta(theta) - stiffness * (theta - reference); };
  auto slope = [&](double theta) {
    const double h = 1e-7;
    return (f(theta + h) - f(theta - h)) / (2.0 * h);
  };

  EquilibriumResult res;
  const double span = search_max - search_min;
  const double margin = 1e-6;
  const double stiffness_scale = std::abs(stiffness) * span;

  auto finish = [&](double theta, int iterations) {
    res.theta_star = theta;
    res.iterations = iterations;
    res.torque_residual = f(theta);
    res.stiffness = -slope(theta);
    res.stable = res.stiffness > 0.0;
    res.bound = res.stable;
    return res;
  };

  // Damped Newton from the warm start.
  double x = std::clamp(std::isfinite(warm_start) ? warm_start : reference, search_min,
                        search_max);
  const double fscale0 = std::max({stiffness_scale, std::abs(spin_torque_theta(x)), 1e-300});
  int iterations = 0;
  bool newton_ok = false;
  for (; iterations < 80; ++iterations) {
    const double fx = f(x);
    const double d = slope(x);
    if (!(d < 0.0) || !std::isfinite(fx)) break;
    if (std::abs(fx) <= 1e-15 * fscale0) {
      newton_ok = true;
      break;
    }
    double step = -fx / d;
    step = std::clamp(step, -0.05, 0.05);
    x += step;
    if (x < search_min - 0.05 || x > search_max + 0.05) break;
    if (std::abs(step) < 1e-13 || std::abs(fx) <= 1e-15 * fscale0) {
      ++iterations;
      newton_ok = true;
      break;
    }
  }
  if (newton_ok && x >= search_min - margin && x <= search_max + margin && slope(x) < 0.0) {
    return finish(x, iterations);
  }

  // Scan for downward zero crossings (stable roots) and take the nearest.
  constexpr int kSamples = 361;
  std::vector<double> xs(kSamples), fs(kSamples);
  double fmax = stiffness_scale;
  for (int i = 0; i < kSamples; ++i) {
    xs[i] = search_min + span * i / (kSamples - 1);
    fs[i] = f(xs[i]);
    fmax = std::max(fmax, std::abs(fs[i]));
  }
  iterations += kSamples;
  const double target = std::isfinite(warm_start) ? warm_start : reference;
  std::vector<Bracket> brackets;
  // A root sitting on the lower edge (e.g. theta = 0 by symmetry).
  if (std::abs(fs[0]) <= 1e-12 * std::max(fmax, 1e-300) && fmax > 0.0 &&
      slope(xs[0]) < 0.0) {
    brackets.push_back({xs[0], xs[0]});
  }
  for (int i = 0; i + 1 < kSamples; ++i) {
    if (fs[i] > 0.0 && fs[i + 1] <= 0.0) brackets.push_back({xs[i], xs[i + 1]});
  }
  if (brackets.empty()) {
    res.iterations = iterations;
    res.bound = false;
    res.stable = false;
    res.theta_star = std::numeric_limits<double>::quiet_NaN();
    return res;
  }
  const Bracket* best = &brackets.front();
  auto distance = [&](const Bracket& b) { return std::abs(0.5 * (b.lo + b.hi) - target); };
  for (const Bracket& b : brackets) {
    if (distance(b) < distance(*best)) best = &b;
  }
  double root = best->lo;
  if (best->hi != best->lo) {
    root = refine_root(f, best->lo, best->hi, f(best->lo), f(best->hi), iterations);
  }
  return finish(root, iterations);
}

EquilibriumResult equilibrium_angle(const SpinParams& params, const CrystalGeometry& geometry,
                                    const TrapModel& trap, double field,
                                    const EquilibriumOptions& options) {
  params.validate();
  trap.validate();
  const ClassSolver solver = steady_state_solver(params);
  auto tau = [&](double theta) {
    return spin_torque(params, geometry, field, AngularState{theta, options.phi, trap.theta0},
                       solver)
        .theta;
  };
  const double reference = trap.theta0 + options.trap_offset;
  return solve_torque_balance(tau, trap.stiffness(), reference, options.warm_start,
                              options.search_min, options.search_max);
}

std::vector<SweepPoint> equilibrium_sweep(const SpinParams& params,
                                          const CrystalGeometry& geometry,
                                          const TrapModel& trap,
                                          const std::vector<double>& fields,
                                          const EquilibriumOptions& options) {
  std::vector<SweepPoint> out;
  out.reserve(fields.size());
  EquilibriumOptions opt = options;
  for (double b : fields) {
    const EquilibriumResult r = equilibrium_angle(params, geometry, trap, b, opt);
    if (r.bound) opt.warm_start = r.theta_star;
    out.push_back({b, r});
  }
  return out;
}

double critical_field(const SpinParams& params, const CrystalGeometry& geometry,
                      const TrapModel& trap, const CriticalFieldOptions& options) {
  params.validate();
  trap.validate();
  if (!(options.field_max > options.field_min) || !(options.coarse_step > 0.0)) {
    throw ValidationError("critical_field: empty field range");
  }
  const auto coarse = static_cast<std::size_t>(
      std::ceil((options.field_max - options.field_min) / options.coarse_step)) + 1;
  const std::vector<double> fields =
      numerics::linspace(options.field_min, options.field_max, coarse);

  if (trap.stiffness() == 0.0) {
    auto chi = [&](double b) { return susceptibility_numeric(params, b).chi_perp; };
    double lo = fields.front();
    double flo = chi(lo);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const double hi = fields[i];
      const double fhi = chi(hi);
      if (flo > 0.0 && fhi <= 0.0) {
        int it = 0;
        double a = lo, b = hi;
        while (b - a > options.tolerance && it++ < 200) {
          const double m = 0.5 * (a + b);
          if (chi(m) > 0.0) a = m; else b = m;
        }
        return 0.5 * (a + b);
      }
      lo = hi;
      flo = fhi;
    }
    throw NumericalError("critical_field: chi_perp has no sign change in the field range");
  }

  EquilibriumOptions eq;
  eq.phi = options.phi;
  const std::vector<SweepPoint> sweep = equilibrium_sweep(params, geometry, trap, fields, eq);
  double best_drop = 0.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i + 1 < sweep.size(); ++i) {
    const auto& a = sweep[i].result;
    const auto& b = sweep[i + 1].result;
    if (!a.bound || !b.bound) continue;
    const double drop = a.theta_star - b.theta_star;
    if (drop > best_drop) {
      best_drop = drop;
      at = i;
    }
  }
  if (!(best_drop > 1e-6)) {
    throw NumericalError("critical_field: no drop of the equilibrium angle in the field range");
  }
  double lo = sweep[at].field;
  double hi = sweep[at + 1].field;
  double theta_lo = sweep[at].result.theta_star;
  const double threshold = 0.5 * (theta_lo + sweep[at + 1].result.theta_star);
  for (int it = 0; it < 200 && hi - lo > options.tolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    eq.warm_start = theta_lo;
    const EquilibriumResult r = equilibrium_angle(params, geometry, trap, mid, eq);
    if (r.bound && r.theta_star > threshold) {
      lo = mid;
      theta_lo = r.theta_star;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<RotationPoint> field_rotation_sweep(const SpinParams& params,
                                                const CrystalGeometry& geometry,
                                                const TrapModel& trap, double field,
                                                const std::vector<double>& field_angles,
                                                double phi, int ramp_steps) {
  std::vector<RotationPoint> out;
  out.reserve(field_angles.size());
  EquilibriumOptions opt;
  opt.phi = phi;
  opt.search_min = -constants::pi / 2.0;
  if (field_angles.empty()) return out;
  opt.trap_offset = field_angles.front();
  if (ramp_steps > 1) {
    const auto ramp = equilibrium_sweep(params, geometry, trap,
                                        numerics::linspace(0.0, field, ramp_steps), opt);
    if (ramp.back().result.bound) opt.warm_start = ramp.back().result.theta_star;
  }
  for (double tb : field_angles) {
    opt.trap_offset = tb;
    RotationPoint p;
    p.field_angle = tb;
    p.no_spin_theta = trap.theta0 + tb;
    p.result = equilibrium_angle(params, geometry, trap, field, opt);
    p.theta = p.result.theta_star;
    if (p.result.bound) opt.warm_start = p.result.theta_star;
    out.push_back(p);
  }
  return out;
}

double librational_frequency_analytic(const SpinParams& params, int tracked_class,
                                      double inertia, double field) {
  require_class_index(tracked_class);
  const double n = params.spins_per_class[tracked_class];
  const double detuning = std::abs(detuning_minus(params, field));
  if (detuning == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(constants::hbar * n * params.pumping_factor() / (inertia * detuning)) *
         params.gyromagnetic_ratio * field;
}

LibrationResult librational_frequency(const SpinParams& params,
                                      const CrystalGeometry& geometry,
                                      const TrapModel& trap, double field, double phi) {
  LibrationResult out;
  out.omega_analytic =
      librational_frequency_analytic(params, geometry.tracked_class, trap.inertia, field);
  EquilibriumOptions opt;
  opt.phi = phi;
  const EquilibriumResult eq = equilibrium_angle(params, geometry, trap, field, opt);
  if (!eq.bound) return out;
  out.bound = true;
  out.theta_star = eq.theta_star;

  const double h = 1e-3;
  const QuadratureOptions q;
  const double up = integrate_torque(params, geometry, field, phi, eq.theta_star,
                                     eq.theta_star + h, q);
  const double down = integrate_torque(params, geometry, field, phi, eq.theta_star,
                                       eq.theta_star - h, q);
  out.magnetic_stiffness = (up + down) / (h * h);
  out.total_stiffness = out.magnetic_stiffness + trap.stiffness();
  out.stable = out.total_stiffness > 0.0;
  out.omega_numeric = out.stable ? std::sqrt(out.total_stiffness / trap.inertia) : 0.0;
  return out;
}

}  // namespace nvlock
