#include "nvlock/mdmr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nvlock/errors.hpp"

namespace nvlock {

const char* to_string(SweepDirection d) { return d == SweepDirection::Up ? "up" : "down"; }

const char* to_string(EdgeSide s) {
  switch (s) {
    case EdgeSide::Low: return "low";
    case EdgeSide::High: return "high";
    case EdgeSide::None: break;
  }
  return "none";
}

void MicrowaveDrive::validate() const {
  if (!(std::isfinite(rabi_rate) && rabi_rate >= 0.0)) {
    throw ValidationError("microwave rabi rate must be finite and >= 0");
  }
  if (!(std::isfinite(frequency) && frequency > 0.0)) {
    throw ValidationError("microwave frequency must be finite and > 0");
  }
  if (!(std::isfinite(extra_broadening) && extra_broadening >= 0.0)) {
    throw ValidationError("microwave extra broadening must be finite and >= 0");
  }
  if (averages < 1) throw ValidationError("microwave averages must be >= 1");
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (!(std::isfinite(sweep[i]) && sweep[i] > 0.0)) {
      throw ValidationError("microwave sweep frequencies must be finite and > 0");
    }
    if (i == 0) continue;
    const bool ok = direction == SweepDirection::Up ? sweep[i] > sweep[i - 1]
                                                    : sweep[i] < sweep[i - 1];
    if (!ok) {
      std::ostringstream msg;
      msg << "microwave sweep must be strictly " << (direction == SweepDirection::Up ? "increasing" : "decreasing")
          << " (index " << i << ")";
      throw ValidationError(msg.str());
    }
  }
}

double MicrowaveDrive::linewidth(const SpinParams& params) const {
  const double g = params.dephasing_rate + extra_broadening;
  if (!power_broadening) return g;
  const double relax = params.longitudinal_rate + params.pumping_rate;
  return std::sqrt(g * g + rabi_rate * rabi_rate * g / relax);
}

double MicrowaveDrive::transfer_rate(const SpinParams& params, double detuning) const {
  if (rabi_rate == 0.0) return 0.0;
  const double g = linewidth(params);
  return 0.5 * rabi_rate * rabi_rate * g / (detuning * detuning + g * g);
}

std::vector<Matrix3c> mw_jump_operators(const SpinParams& params, const Vector3& b_nv,
                                        const MicrowaveDrive& drive, double frequency_hz) {
  std::vector<Matrix3c> jumps;
  if (drive.rabi_rate == 0.0) return jumps;
  const SortedLevels lv = sorted_levels(params, b_nv);
  const double w = constants::two_pi * frequency_hz;
  // (upper, lower, weight): the |0> <-> |-1>-like pair, then the |+1>-like
  // line split over the two lower states by their |0> character.
  const double w_low = lv.zero_weight[0];
  const double w_mid = lv.zero_weight[1];
  const double norm = w_low + w_mid;
  struct Pair {
    int upper;
    int lower;
    double weight;
  };
  const std::array<Pair, 3> pairs{{{1, 0, 1.0}, {2, 0, w_low / norm}, {2, 1, w_mid / norm}}};
  for (const Pair& p : pairs) {
    if (p.weight <= 0.0) continue;
    const double transition = lv.energies[p.upper] - lv.energies[p.lower];
    const double rate = p.weight * drive.transfer_rate(params, w - transition);
    if (rate <= 0.0) continue;
    const auto up = lv.vectors.col(p.upper);
    const auto lo = lv.vectors.col(p.lower);
    const double amp = std::sqrt(rate);
    jumps.push_back(amp * up * lo.adjoint());
    jumps.push_back(amp * lo * up.adjoint());
  }
  return jumps;
}

DensityMatrix3 mw_steady_state(const SpinParams& params, const FieldVector& b_nv,
                               const MicrowaveDrive& drive) {
  require_frame(b_nv, Frame::Nv, "mw_steady_state");
  drive.validate();
  const auto jumps = mw_jump_operators(params, b_nv.tesla, drive, drive.frequency);
  if (jumps.empty()) return steady_state(params, b_nv);
  return steady_state(params, b_nv, jumps);
}

ClassSolver mw_solver(const SpinParams& params, const MicrowaveDrive& drive,
                      double frequency_hz) {
  return [params, drive, frequency_hz](int, const FieldVector& b_nv) {
    const auto jumps = mw_jump_operators(params, b_nv.tesla, drive, frequency_hz);
    if (jumps.empty()) return steady_state(params, b_nv);
    return steady_state(params, b_nv, jumps);
  };
}

namespace {

std::array<TransitionPair, 4> class_transitions(const SpinParams& params,
                                                const CrystalGeometry& geometry, double field,
                                                double theta, double phi) {
  const FieldVector b_lab = lab_field_for_state(geometry, field, AngularState{theta, phi, 0.0});
  std::array<TransitionPair, 4> out{};
  for (int c = 0; c < kNumClasses; ++c) {
    out[c] = transitions_for_field(
        params, field_in_nv_frame(geometry.orientation, c, b_lab).tesla);
  }
  return out;
}

}  // namespace

MdmrSpectrum mdmr_scan(const SpinParams& params, const CrystalGeometry& geometry,
                       const TrapModel& trap, double field, const MicrowaveDrive& drive,
                       const EquilibriumOptions& options) {
  params.validate();
  trap.validate();
  drive.validate();

  MdmrSpectrum out;
  out.field = field;
  out.direction = drive.direction;

  const EquilibriumResult off = equilibrium_angle(params, geometry, trap, field, options);
  if (!off.bound) {
    throw NumericalError("mdmr_scan: no stable equilibrium without microwaves");
  }
  out.baseline.frequency = 0.0;
  out.baseline.theta = off.theta_star;
  out.baseline.converged = true;
  out.baseline.iterations = off.iterations;
  out.baseline.transitions =
      class_transitions(params, geometry, field, off.theta_star, options.phi);

  const double reference = trap.theta0 + options.trap_offset;
  const double k = trap.stiffness();
  double warm = off.theta_star;
  out.records.reserve(drive.sweep.size());
  for (double nu : drive.sweep) {
    const ClassSolver solver = mw_solver(params, drive, nu);
    auto tau = [&](double theta) {
      return spin_torque(params, geometry, field, AngularState{theta, options.phi, 0.0}, solver)
          .theta;
    };
    const EquilibriumResult r =
        solve_torque_balance(tau, k, reference, warm, options.search_min, options.search_max);
    MdmrRecord rec;
    rec.frequency = nu;
    rec.iterations = r.iterations;
    rec.converged = r.bound;
    rec.theta = r.bound ? r.theta_star : warm;
    rec.delta_theta = rec.theta - off.theta_star;
    rec.transitions = class_transitions(params, geometry, field, rec.theta, options.phi);
    if (r.bound) warm = r.theta_star;
    out.records.push_back(rec);
  }
  return out;
}

HysteresisPair hysteresis_pair(const SpinParams& params, const CrystalGeometry& geometry,
                               const TrapModel& trap, double field,
                               const MicrowaveDrive& drive,
                               const EquilibriumOptions& options) {
  MicrowaveDrive up = drive;
  std::sort(up.sweep.begin(), up.sweep.end());
  up.sweep.erase(std::unique(up.sweep.begin(), up.sweep.end()), up.sweep.end());
  up.direction = SweepDirection::Up;
  MicrowaveDrive down = up;
  std::reverse(down.sweep.begin(), down.sweep.end());
  down.direction = SweepDirection::Down;
  return {mdmr_scan(params, geometry, trap, field, up, options),
          mdmr_scan(params, geometry, trap, field, down, options)};
}

EdgeReport jump_edge(const HysteresisPair& pair, double line_center_hz,
                     double half_window_hz, double min_jump) {
  EdgeReport best;
  for (const MdmrSpectrum* s : {&pair.up, &pair.down}) {
    const auto& r = s->records;
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      const double mid = 0.5 * (r[i].frequency + r[i + 1].frequency);
      if (std::abs(mid - line_center_hz) > half_window_hz) continue;
      const double jump = std::abs(r[i + 1].theta - r[i].theta);
      if (jump > best.jump_size) {
        best.jump_size = jump;
        best.jump_frequency = mid;
        best.sweep = s->direction;
      }
    }
  }
  if (best.jump_size < min_jump) {
    best.side = EdgeSide::None;
    return best;
  }
  best.side = best.jump_frequency > line_center_hz ? EdgeSide::High : EdgeSide::Low;
  return best;
}

}  // namespace nvlock
