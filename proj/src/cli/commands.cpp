#include "nvlock/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nvlock/errors.hpp"
#include "nvlock/numerics.hpp"

namespace nvlock::cli {

namespace {

using constants::deg;
using constants::two_pi;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double to_deg(double rad) { return rad / deg; }

std::vector<SweepDirection> directions(SweepOrder order) {
  switch (order) {
    case SweepOrder::Up: return {SweepDirection::Up};
    case SweepOrder::Down: return {SweepDirection::Down};
    case SweepOrder::Both: break;
  }
  return {SweepDirection::Up, SweepDirection::Down};
}

std::vector<double> ordered(std::vector<double> values, SweepDirection d) {
  if (d == SweepDirection::Down) std::reverse(values.begin(), values.end());
  return values;
}

double single_class_spins(const RunConfig& c) {
  return c.spin.spins_per_class[static_cast<std::size_t>(c.geometry.tracked_class)];
}

}  // namespace

std::vector<ResultTable> cmd_susceptibility(const RunConfig& c) {
  ResultTable t({{"field", "T"},
                 {"gamma_b_over_2pi", "Hz"},
                 {"chi_perp_numeric", "1"},
                 {"chi_perp_analytic", "1"},
                 {"chi_d", "1"},
                 {"chi_par", "1"},
                 {"chi_perp_van_vleck", "1"}});
  t.set_meta("density_per_m3", format_value(c.spin.density));
  std::vector<std::vector<double>> rows(c.fields.size());
  numerics::parallel_for(c.fields.size(), [&](std::size_t i) {
    const double b = c.fields[i];
    const SusceptibilityTensor num = susceptibility_numeric(c.spin, b);
    const SusceptibilityTensor ana = susceptibility_analytic(c.spin, b);
    const DensityMatrix3 rho = steady_state(c.spin, FieldVector::nv(0.0, 0.0, b));
    const Populations p{rho.population_minus(), rho.population_zero(), rho.population_plus()};
    double vv = kNaN;
    try {
      vv = susceptibility_van_vleck(c.spin, p, b);
    } catch (const SingularDetuningError&) {
    }
    rows[i] = {b,  c.spin.gyromagnetic_ratio * b / two_pi, num.chi_perp, ana.chi_perp,
               num.chi_d, num.chi_par, vv};
  });
  for (auto& r : rows) t.add_row(std::move(r));
  return {t};
}

std::vector<ResultTable> cmd_equilibrium(const RunConfig& c) {
  std::vector<ResultTable> out;
  EquilibriumOptions opt;
  opt.phi = c.phi;
  for (SweepDirection d : directions(c.order)) {
    ResultTable t({{"field", "T"},
                   {"theta", "deg"},
                   {"delta_theta", "deg"},
                   {"bound", "1"},
                   {"stable", "1"},
                   {"stiffness", "N m/rad"},
                   {"iterations", "1"}});
    t.set_meta("sweep", to_string(d));
    t.set_meta("trap_theta0_deg", format_value(to_deg(c.trap.theta0)));
    if (!c.fields.empty()) {
      const auto points =
          equilibrium_sweep(c.spin, c.geometry, c.trap, ordered(c.fields, d), opt);
      for (const SweepPoint& p : points) {
        const EquilibriumResult& r = p.result;
        const double th = r.bound ? to_deg(r.theta_star) : kNaN;
        t.add_row({p.field, th, th - to_deg(c.trap.theta0), r.bound ? 1.0 : 0.0,
                   r.stable ? 1.0 : 0.0, r.bound ? r.stiffness : kNaN,
                   static_cast<double>(r.iterations)});
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<ResultTable> cmd_rotation(const RunConfig& c) {
  ResultTable t({{"field_angle", "deg"},
                 {"theta", "deg"},
                 {"no_spin_theta", "deg"},
                 {"bound", "1"}});
  t.set_meta("field_tesla", format_value(c.rotation.field));
  const auto points = field_rotation_sweep(c.spin, c.geometry, c.trap, c.rotation.field,
                                           c.rotation.field_angles, c.phi,
                                           c.rotation.ramp_steps);
  for (const RotationPoint& p : points) {
    t.add_row({to_deg(p.field_angle), p.result.bound ? to_deg(p.theta) : kNaN,
               to_deg(p.no_spin_theta), p.result.bound ? 1.0 : 0.0});
  }
  return {t};
}

std::vector<ResultTable> cmd_mdmr(const RunConfig& c) {
  const MdmrConfig& m = c.mdmr;
  std::vector<std::pair<std::string, std::string>> columns{{"frequency", "Hz"},
                                                           {"offset", "Hz"},
                                                           {"theta", "deg"},
                                                           {"delta_theta", "deg"},
                                                           {"converged", "1"},
                                                           {"iterations", "1"}};
  for (int k = 0; k < kNumClasses; ++k) {
    columns.emplace_back("nu_minus_c" + std::to_string(k), "Hz");
    columns.emplace_back("nu_plus_c" + std::to_string(k), "Hz");
  }
  const auto dirs = directions(m.order);
  std::vector<ResultTable> out;
  for (SweepDirection d : dirs) {
    ResultTable t(columns);
    t.set_meta("sweep", to_string(d));
    t.set_meta("field_tesla", format_value(m.field));
    t.set_meta("line", m.line == Line::Minus ? "minus" : "plus");
    out.push_back(std::move(t));
  }
  if (m.offsets_hz.empty()) return out;

  EquilibriumOptions opt;
  opt.phi = c.phi;
  double center = m.center_hz;
  if (center == 0.0) {
    const EquilibriumResult off = equilibrium_angle(c.spin, c.geometry, c.trap, m.field, opt);
    if (!off.bound) throw NumericalError("mdmr: no stable equilibrium without microwaves");
    const TransitionPair lines = transition_frequencies(c.spin, off.theta_star, m.field);
    center = m.line == Line::Minus ? lines.nu_minus : lines.nu_plus;
  }
  MicrowaveDrive drive = m.drive;
  for (double o : m.offsets_hz) drive.sweep.push_back(center + o);

  std::vector<MdmrSpectrum> spectra;
  if (dirs.size() == 2) {
    HysteresisPair pair = hysteresis_pair(c.spin, c.geometry, c.trap, m.field, drive, opt);
    const EdgeReport edge = jump_edge(pair, center, m.edge_window_hz);
    for (ResultTable& t : out) {
      t.set_meta("edge_side", to_string(edge.side));
      t.set_meta("edge_offset_hz", format_value(edge.jump_frequency - center));
      t.set_meta("edge_jump_deg", format_value(to_deg(edge.jump_size)));
      t.set_meta("edge_sweep", to_string(edge.sweep));
    }
    spectra.push_back(std::move(pair.up));
    spectra.push_back(std::move(pair.down));
  } else {
    drive.direction = dirs.front();
    drive.sweep = ordered(drive.sweep, dirs.front());
    spectra.push_back(mdmr_scan(c.spin, c.geometry, c.trap, m.field, drive, opt));
  }

  for (std::size_t s = 0; s < spectra.size(); ++s) {
    ResultTable& t = out[s];
    const MdmrSpectrum& sp = spectra[s];
    t.set_meta("line_center_hz", format_value(center));
    t.set_meta("baseline_theta_deg", format_value(to_deg(sp.baseline.theta)));
    for (const MdmrRecord& r : sp.records) {
      std::vector<double> row{r.frequency,       r.frequency - center,
                              to_deg(r.theta),   to_deg(r.delta_theta),
                              r.converged ? 1.0 : 0.0, static_cast<double>(r.iterations)};
      for (const TransitionPair& tp : r.transitions) {
        row.push_back(tp.nu_minus);
        row.push_back(tp.nu_plus);
      }
      t.add_row(std::move(row));
    }
  }
  return out;
}

std::vector<ResultTable> cmd_landscape(const RunConfig& c) {
  const LandscapeConfig& l = c.landscape;
  ResultTable t({{"theta", "deg"},
                 {"phi", "deg"},
                 {"b_x", "1"},
                 {"b_y", "1"},
                 {"energy", "J"}});
  t.set_meta("field_tesla", format_value(l.field));
  if (l.theta.empty() || l.phi.empty()) return {t};
  const EnergyLandscape land =
      magnetic_energy_landscape(c.spin, c.geometry, l.field, l.theta, l.phi, l.quadrature);
  t.set_meta("max_relative_curl", format_value(land.max_relative_curl));
  t.set_meta("max_quadrature_error_joule", format_value(land.max_quadrature_error));
  for (std::size_t j = 0; j < land.phi.size(); ++j) {
    for (std::size_t i = 0; i < land.theta.size(); ++i) {
      const double th = land.theta[i];
      const double ph = land.phi[j];
      t.add_row({to_deg(th), to_deg(ph), std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                 land.energy[i][j]});
    }
  }
  return {t};
}

std::vector<ResultTable> cmd_libration(const RunConfig& c) {
  ResultTable t({{"field", "T"},
                 {"theta", "deg"},
                 {"omega_numeric_over_2pi", "Hz"},
                 {"omega_analytic_over_2pi", "Hz"},
                 {"magnetic_stiffness", "N m/rad"},
                 {"total_stiffness", "N m/rad"},
                 {"stable", "1"}});
  t.set_meta("tracked_class_spins", format_value(single_class_spins(c)));
  std::vector<std::vector<double>> rows(c.libration_fields.size());
  numerics::parallel_for(c.libration_fields.size(), [&](std::size_t i) {
    const double b = c.libration_fields[i];
    const LibrationResult r = librational_frequency(c.spin, c.geometry, c.trap, b, c.phi);
    rows[i] = {b,
               r.bound ? to_deg(r.theta_star) : kNaN,
               r.omega_numeric / two_pi,
               r.omega_analytic / two_pi,
               r.bound ? r.magnetic_stiffness : kNaN,
               r.bound ? r.total_stiffness : kNaN,
               r.stable ? 1.0 : 0.0};
  });
  for (auto& r : rows) t.add_row(std::move(r));
  return {t};
}

std::vector<ResultTable> cmd_invert(const RunConfig& c) {
  ResultTable t({{"nu_minus", "Hz"},
                 {"nu_plus", "Hz"},
                 {"linewidth_minus", "Hz"},
                 {"linewidth_plus", "Hz"},
                 {"theta", "deg"},
                 {"field", "T"},
                 {"theta_err", "deg"},
                 {"field_err", "T"},
                 {"residual", "Hz"},
                 {"solutions", "1"}});
  for (const TransitionPair& p : c.invert.pairs) {
    const AngleFieldEstimate e = invert_angle_field(c.spin, p, c.invert.options);
    t.add_row({p.nu_minus, p.nu_plus, p.linewidth_minus, p.linewidth_plus, to_deg(e.theta),
               e.field, to_deg(e.theta_err), e.field_err, e.residual,
               1.0 + static_cast<double>(e.alternatives.size())});
  }
  return {t};
}

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> list{
      {"susceptibility", "chi_perp, chi_d and chi_par of the tracked class versus field",
       cmd_susceptibility},
      {"equilibrium", "equilibrium angle versus field magnitude", cmd_equilibrium},
      {"rotation", "equilibrium angle while the field direction rotates", cmd_rotation},
      {"mdmr", "mechanically detected resonance scan, up and down", cmd_mdmr},
      {"landscape", "magnetic energy over field directions", cmd_landscape},
      {"libration", "librational frequency versus field", cmd_libration},
      {"invert", "(theta, B) from measured line pairs", cmd_invert},
  };
  return list;
}

std::vector<ResultTable> run_command(const std::string& name, const RunConfig& config) {
  for (const CommandInfo& info : commands()) {
    if (name != info.name) continue;
    std::vector<ResultTable> tables = info.run(config);
    const std::string hash = "fnv1a64:" + fnv1a_hex(config.canonical);
    for (ResultTable& t : tables) {
      ResultTable stamped;
      stamped.set_meta("tool", std::string(kToolName) + " " + kToolVersion);
      stamped.set_meta("command", name);
      stamped.set_meta("config_hash", hash);
      for (const auto& [k, v] : t.metadata()) stamped.set_meta(k, v);
      for (std::size_t j = 0; j < t.columns().size(); ++j) {
        stamped.add_column(t.columns()[j], t.units()[j]);
      }
      for (const auto& row : t.rows()) stamped.add_row(row);
      t = std::move(stamped);
    }
    return tables;
  }
  throw ValidationError("unknown command '" + name + "'");
}

}  // namespace nvlock::cli
