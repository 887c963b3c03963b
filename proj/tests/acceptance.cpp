// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "nvlock/errors.hpp"
#include "nvlock/magnetometry.hpp"
#include "nvlock/mdmr.hpp"
#include "nvlock/mechanics.hpp"
#include "nvlock/numerics.hpp"
#include "support/generators.hpp"

using namespace nvlock;
using constants::deg;
using constants::two_pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrapModel no_trap() {
  TrapModel t;
  t.angular_frequency = 0.0;
  t.theta0 = 0.0;
  return t;
}

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  for (double rate : {1e4, 1e5, 1e6}) {
    SpinParams p;
    p.pumping_rate = rate;
    double worst = 0.0;
    for (double b : numerics::linspace(0.0, 0.2, 50)) {
      const SusceptibilityTensor n = susceptibility_numeric(p, b);
      const SusceptibilityTensor a = susceptibility_analytic(p, b);
      const double norm = std::hypot(a.chi_perp, a.chi_d);
      worst = std::max({worst, std::abs(n.chi_perp - a.chi_perp) / norm,
                        std::abs(n.chi_d - a.chi_d) / norm});
    }
    o.require(worst <= 1e-6, "pumping " + fmt("%.0e", rate) + " worst " + fmt("%.2e", worst));
  }
  const double s = seconds_since(t0);
  o.require(s < 5.0, "runtime " + fmt("%.2f", s) + " s");
  return o;
}

Outcome gslac_transition() {
  Outcome o;
  const double free = critical_field(SpinParams{}, CrystalGeometry{}, no_trap());
  o.require(std::abs(free - 0.1024) <= 1e-3, "zero trap B_c " + fmt("%.2f", free * 1e3) + " mT");
  TrapModel stiff;
  stiff.angular_frequency = two_pi * 500.0;
  stiff.theta0 = 0.5 * deg;
  const double trapped = critical_field(SpinParams{}, CrystalGeometry{}, stiff);
  o.require(trapped > 0.1024, "500 Hz trap B_c " + fmt("%.2f", trapped * 1e3) + " mT");
  return o;
}

Outcome susceptibility_magnitudes() {
  Outcome o;
  SpinParams p;
  p.pumping_rate = 1e6;
  const double far = susceptibility_numeric(p, 0.0).chi_perp;
  double peak = 0.0;
  for (double b : numerics::linspace(0.095, 0.11, 301)) {
    peak = std::max(peak, std::abs(susceptibility_numeric(p, b).chi_perp));
  }
  o.require(far >= 0.5e-4 && far <= 2e-4, "far-detuned chi_perp " + fmt("%.3e", far));
  o.require(peak >= 0.3e-2 && peak <= 3e-2, "peak |chi_perp| " + fmt("%.3e", peak));
  return o;
}

Outcome librational_frequency_check() {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  SpinParams p;
  p.spins_per_class = {1e9, 0.0, 0.0, 0.0};
  p.pumping_rate = 1e6;
  const double f = librational_frequency_analytic(p, 0, 1e-22, 0.2) / two_pi;
  o.require(std::abs(f - 2000.0) <= 0.15 * 2000.0, "analytic " + fmt("%.0f", f) + " Hz vs 2000 Hz");
  const LibrationResult r = librational_frequency(p, CrystalGeometry{}, no_trap(), 0.2);
  const double ratio = r.omega_numeric / r.omega_analytic;
  o.require(r.stable && std::abs(ratio - 1.0) <= 0.2, "numeric/analytic " + fmt("%.3f", ratio));
  const double s = seconds_since(t0);
  o.require(s < 10.0, "runtime " + fmt("%.2f", s) + " s");
  return o;
}

Outcome field_sweep_regions() {
  Outcome o;
  const TrapModel trap;
  const auto fields = numerics::linspace(0.0, 0.2, 201);
  const auto pts = equilibrium_sweep(SpinParams{}, CrystalGeometry{}, trap, fields);
  const double bc = critical_field(SpinParams{}, CrystalGeometry{}, trap);

  double shift = 0.0;
  double locked = 0.0;
  bool all_bound = true;
  bool decreasing = true;
  double prev = trap.theta0;
  for (const auto& pt : pts) {
    all_bound = all_bound && pt.result.bound;
    const double th = pt.result.theta_star;
    if (pt.field <= 0.045) shift = std::max(shift, std::abs(th - trap.theta0));
    if (pt.field > 0.045 && pt.field < bc) decreasing = decreasing && th <= prev + 1e-12;
    if (pt.field > bc) locked = std::max(locked, std::abs(th));
    prev = th;
  }
  o.require(all_bound, "every point bound");
  o.require(shift < 1.0 * deg, "region 1 max shift " + fmt("%.2f", shift / deg) + " deg");
  o.require(decreasing, "monotone decrease 45 mT to " + fmt("%.1f", bc * 1e3) + " mT");
  o.require(locked <= 3.0 * deg, "locked max theta " + fmt("%.2f", locked / deg) + " deg");
  return o;
}

Outcome field_rotation() {
  Outcome o;
  const auto angles = numerics::linspace(0.0, -14.0 * deg, 15);
  auto span = [](const std::vector<RotationPoint>& pts) {
    double lo = pts.front().theta, hi = lo;
    for (const auto& p : pts) lo = std::min(lo, p.theta), hi = std::max(hi, p.theta);
    return hi - lo;
  };
  const auto locked = field_rotation_sweep(SpinParams{}, CrystalGeometry{}, TrapModel{}, 0.2, angles);
  SpinParams none;
  none.spins_per_class = {0.0, 0.0, 0.0, 0.0};
  const auto control = field_rotation_sweep(none, CrystalGeometry{}, TrapModel{}, 0.2, angles);
  const double a = span(locked);
  const double b = span(control);
  o.require(a < 5.0 * deg, "theta change " + fmt("%.2f", a / deg) + " deg");
  o.require(std::abs(b - 14.0 * deg) <= 1e-9, "zero-spin change " + fmt("%.6f", b / deg) + " deg");
  return o;
}

EdgeSide edge(double field, bool minus, double half_window) {
  const double theta = equilibrium_angle(SpinParams{}, CrystalGeometry{}, TrapModel{}, field).theta_star;
  const TransitionPair lines = transition_frequencies(SpinParams{}, theta, field);
  const double center = minus ? lines.nu_minus : lines.nu_plus;
  MicrowaveDrive d;
  d.rabi_rate = two_pi * 0.5e6;
  d.sweep = numerics::linspace(center - half_window, center + half_window, 201);
  const HysteresisPair pair = hysteresis_pair(SpinParams{}, CrystalGeometry{}, TrapModel{}, field, d);
  return jump_edge(pair, center, half_window).side;
}

Outcome hysteresis_edges() {
  Outcome o;
  const EdgeSide post_minus = edge(0.15, true, 100e6);
  const EdgeSide post_plus = edge(0.15, false, 100e6);
  const EdgeSide pre_minus = edge(0.023, true, 40e6);
  const EdgeSide pre_plus = edge(0.023, false, 40e6);
  o.require(post_minus == EdgeSide::High,
            std::string("150 mT minus line ") + to_string(post_minus));
  o.require(post_plus == EdgeSide::Low, std::string("150 mT plus line ") + to_string(post_plus));
  o.require(pre_minus == EdgeSide::Low && pre_plus == EdgeSide::Low,
            std::string("23 mT lines ") + to_string(pre_minus) + "/" + to_string(pre_plus));
  return o;
}

Outcome property_suites() {
  Outcome o;
  nvtest::Gen gen(8);

  int valid = 0;
  for (int i = 0; i < 1000; ++i) {
    const DensityMatrix3 rho = steady_state(gen.spin_params(), FieldVector{gen.field(0.4), Frame::Nv});
    valid += rho.valid() ? 1 : 0;
  }
  o.require(valid == 1000, "density matrices " + std::to_string(valid) + "/1000");

  int torque_ok = 0;
  QuadratureOptions q;
  q.abs_tol = 1e-30;
  q.rel_tol = 1e-10;
  for (int i = 0; i < 100; ++i) {
    const SpinParams p = gen.spin_params();
    const double b = gen.uniform(0.01, 0.3);
    const double theta = gen.uniform(-0.6, 0.6);
    const double phi = gen.uniform(0.0, two_pi);
    const double h = 5e-7;
    const double tau = spin_torque(p, CrystalGeometry{}, b, AngularState{theta, phi, 0.0}).theta;
    const double du = magnetic_energy_difference(p, CrystalGeometry{}, b, theta - h, theta + h, phi, q);
    const double scale = std::max(std::abs(tau), 1e-23);
    torque_ok += std::abs(-du / (2.0 * h) - tau) <= 1e-6 * scale + 1e-24 ? 1 : 0;
  }
  o.require(torque_ok == 100, "torque = -dU " + std::to_string(torque_ok) + "/100");

  double worst_period = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double b = gen.uniform(0.05, 0.2);
    const double theta = gen.uniform(0.05, 0.5);
    const double phi = gen.uniform(0.0, two_pi);
    const double u0 = magnetic_energy(SpinParams{}, CrystalGeometry{}, b, theta, phi);
    const double u1 = magnetic_energy(SpinParams{}, CrystalGeometry{}, b, theta, phi + two_pi / 3.0);
    worst_period = std::max(worst_period, std::abs(u1 - u0) / std::abs(u0));
  }
  o.require(worst_period <= 1e-7, "phi period 2pi/3 " + fmt("%.1e", worst_period));

  double worst_par = 0.0;
  for (int i = 0; i < 40; ++i) {
    worst_par = std::max(worst_par, std::abs(susceptibility_numeric(gen.spin_params(),
                                                                    gen.uniform(0.0, 0.3)).chi_par));
  }
  o.require(worst_par <= 1e-12, "chi_par " + fmt("%.1e", worst_par));

  MicrowaveDrive off;
  off.sweep = numerics::linspace(2.3e9, 2.7e9, 21);
  const MdmrSpectrum s = mdmr_scan(SpinParams{}, CrystalGeometry{}, TrapModel{}, 0.05, off);
  double worst_drive = 0.0;
  for (const auto& r : s.records) worst_drive = std::max(worst_drive, std::abs(r.delta_theta));
  o.require(worst_drive <= 1e-12, "zero-drive delta_theta " + fmt("%.1e", worst_drive));

  int recovered = 0, total = 0;
  for (int i = 0; i < 20; ++i) {
    for (int k = 0; k < 24; ++k) {
      const double theta = (0.5 + 11.5 * i / 19.0) * deg;
      const double field = 0.01 + 0.29 * k / 23.0;
      if (field > 0.095 && field < 0.115) continue;
      ++total;
      const AngleFieldEstimate e =
          invert_angle_field(SpinParams{}, transition_frequencies(SpinParams{}, theta, field));
      auto near = [&](double t, double b) {
        return std::abs(t - theta) <= 0.1 * deg && std::abs(b - field) <= 1e-4;
      };
      bool ok = near(e.theta, e.field);
      for (const auto& a : e.alternatives) ok = ok || near(a.theta, a.field);
      recovered += ok ? 1 : 0;
    }
  }
  o.require(recovered == total,
            "round trip " + std::to_string(recovered) + "/" + std::to_string(total));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"GSLAC transition", gslac_transition},
      {"susceptibility magnitudes", susceptibility_magnitudes},
      {"librational frequency", librational_frequency_check},
      {"field sweep regions", field_sweep_regions},
      {"field rotation", field_rotation},
      {"hysteresis edge side", hysteresis_edges},
      {"property suites", property_suites},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::printf("criterion %zu %s: %s (%.2f s) %s\n", i + 1, criteria[i].first,
                o.pass ? "PASS" : "FAIL", seconds_since(t0), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria pass\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
