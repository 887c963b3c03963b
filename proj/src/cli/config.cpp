#include "nvlock/cli/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "nvlock/errors.hpp"
#include "nvlock/numerics.hpp"

namespace nvlock::cli {

namespace {

enum class Kind { Number, Integer, List, Choice, Flag };

struct KeySpec {
  std::string_view name;  // section.key
  Kind kind;
  std::string_view fallback;
  std::string_view help;
  std::string_view choices = {};  // '|' separated, Kind::Choice only
};

// clang-format off
constexpr std::array kSchema = {
  KeySpec{"spin.zero_field_splitting_hz", Kind::Number, "2.87e9", "D / 2pi"},
  KeySpec{"spin.gyromagnetic_ratio_hz_per_tesla", Kind::Number, "28.024e9", "gamma_e / 2pi"},
  KeySpec{"spin.longitudinal_rate_per_s", Kind::Number, "2e3", "Gamma_1"},
  KeySpec{"spin.dephasing_rate_hz", Kind::Number, "5e6", "Gamma_2* / 2pi"},
  KeySpec{"spin.pumping_rate_per_s", Kind::Number, "1e5", "gamma_las, optical pumping into |0>"},
  KeySpec{"spin.density_ppm", Kind::Number, "1", "NV density of one orientation class"},
  KeySpec{"spin.ppm_density_per_m3", Kind::Number, "1.76e23", "number density of 1 ppm"},
  KeySpec{"spin.spins_per_class_count", Kind::List, "2.5e8, 2.5e8, 2.5e8, 2.5e8", "spins in each of the four classes"},

  KeySpec{"crystal.euler_alpha_deg", Kind::Number, "0", "z-y-z Euler angles of the crystal in the lab"},
  KeySpec{"crystal.euler_beta_deg", Kind::Number, "0", ""},
  KeySpec{"crystal.euler_gamma_deg", Kind::Number, "0", ""},
  KeySpec{"crystal.quaternion_wxyz", Kind::List, "", "overrides the Euler angles when set"},
  KeySpec{"crystal.tracked_class", Kind::Integer, "0", "NV class whose angle to the field is reported (0-3)"},
  KeySpec{"crystal.phi_deg", Kind::Number, "0", "field azimuth about the tracked axis"},

  KeySpec{"trap.inertia_kg_m2", Kind::Number, "1e-22", "moment of inertia"},
  KeySpec{"trap.frequency_hz", Kind::Number, "155", "angular trap frequency / 2pi"},
  KeySpec{"trap.theta0_deg", Kind::Number, "8", "trap-preferred angle between the tracked axis and the field"},

  KeySpec{"sweep.field_min_tesla", Kind::Number, "0", "field sweep for susceptibility and equilibrium"},
  KeySpec{"sweep.field_max_tesla", Kind::Number, "0.2", ""},
  KeySpec{"sweep.field_steps", Kind::Integer, "201", ""},
  KeySpec{"sweep.field_list_tesla", Kind::List, "", "explicit ascending fields; overrides min/max/steps"},
  KeySpec{"sweep.direction", Kind::Choice, "up", "equilibrium sweep order", "up|down|both"},

  KeySpec{"rotation.field_tesla", Kind::Number, "0.2", "field magnitude while rotating"},
  KeySpec{"rotation.angle_start_deg", Kind::Number, "0", "field direction in the trap plane"},
  KeySpec{"rotation.angle_stop_deg", Kind::Number, "-14", ""},
  KeySpec{"rotation.angle_steps", Kind::Integer, "15", ""},
  KeySpec{"rotation.ramp_steps", Kind::Integer, "101", "field ramp that selects the starting branch"},

  KeySpec{"mdmr.field_tesla", Kind::Number, "0.15", ""},
  KeySpec{"mdmr.line", Kind::Choice, "plus", "line of the tracked class the scan is centred on", "minus|plus"},
  KeySpec{"mdmr.center_hz", Kind::Number, "0", "scan centre; 0 uses the MW-off line frequency"},
  KeySpec{"mdmr.offset_min_hz", Kind::Number, "-100e6", "scan relative to the centre"},
  KeySpec{"mdmr.offset_max_hz", Kind::Number, "100e6", ""},
  KeySpec{"mdmr.offset_steps", Kind::Integer, "201", ""},
  KeySpec{"mdmr.rabi_rate_hz", Kind::Number, "0.5e6", "Omega_R / 2pi"},
  KeySpec{"mdmr.extra_broadening_hz", Kind::Number, "0", "added to Gamma_2* / 2pi in the line shape"},
  KeySpec{"mdmr.power_broadening", Kind::Flag, "false", ""},
  KeySpec{"mdmr.averages", Kind::Integer, "1", "recorded only"},
  KeySpec{"mdmr.direction", Kind::Choice, "both", "", "up|down|both"},
  KeySpec{"mdmr.edge_window_hz", Kind::Number, "100e6", "half window for the hysteresis edge report"},

  KeySpec{"landscape.field_tesla", Kind::Number, "0.11", ""},
  KeySpec{"landscape.theta_min_deg", Kind::Number, "-20", "negative theta is the phi + 180 deg side"},
  KeySpec{"landscape.theta_max_deg", Kind::Number, "20", ""},
  KeySpec{"landscape.theta_steps", Kind::Integer, "41", ""},
  KeySpec{"landscape.phi_min_deg", Kind::Number, "0", ""},
  KeySpec{"landscape.phi_max_deg", Kind::Number, "180", ""},
  KeySpec{"landscape.phi_steps", Kind::Integer, "7", ""},
  KeySpec{"landscape.abs_tol_joule", Kind::Number, "1e-28", "quadrature tolerances"},
  KeySpec{"landscape.rel_tol", Kind::Number, "1e-9", ""},

  KeySpec{"libration.field_min_tesla", Kind::Number, "0.11", ""},
  KeySpec{"libration.field_max_tesla", Kind::Number, "0.2", ""},
  KeySpec{"libration.field_steps", Kind::Integer, "10", ""},

  KeySpec{"invert.nu_minus_hz", Kind::List, "2.2254e9", "measured |0> <-> |-1> lines, one per row"},
  KeySpec{"invert.nu_plus_hz", Kind::List, "3.5146e9", "measured |0> <-> |+1> lines"},
  KeySpec{"invert.linewidth_minus_hz", Kind::List, "10e6", "one value, or one per row"},
  KeySpec{"invert.linewidth_plus_hz", Kind::List, "10e6", ""},
  KeySpec{"invert.theta_max_deg", Kind::Number, "90", "search box"},
  KeySpec{"invert.field_max_tesla", Kind::Number, "0.3", ""},
  KeySpec{"invert.tolerance_hz", Kind::Number, "1e3", "accepted line mismatch"},
};
// clang-format on

const KeySpec* find_key(std::string_view name) {
  for (const KeySpec& k : kSchema) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

bool known_section(std::string_view section) {
  for (const KeySpec& k : kSchema) {
    if (k.name.substr(0, k.name.find('.')) == section) return true;
  }
  return false;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format_location(const std::string& origin, std::string_view key) {
  std::string s = origin;
  s += ": ";
  s += key;
  return s;
}

enum class Bound { Any, Positive, NonNegative };

// Converts the raw text, checks it and records the normalised value.
class Reader {
 public:
  explicit Reader(const std::map<std::string, std::pair<std::string, std::string>>& values)
      : values_(values) {}

  double number(std::string_view key, Bound bound = Bound::Any) {
    const auto& [text, origin] = lookup(key);
    const double v = parse_double(text, key, origin);
    check_bound(v, bound, key, origin);
    record(key, format_number(v));
    return v;
  }

  int integer(std::string_view key, int lo, int hi) {
    const auto& [text, origin] = lookup(key);
    int v = 0;
    const char* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (text.empty() || r.ec != std::errc() || r.ptr != end) {
      fail(key, origin, "expected an integer, got '" + text + "'");
    }
    if (v < lo || v > hi) {
      fail(key, origin,
           "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + text);
    }
    record(key, std::to_string(v));
    return v;
  }

  std::vector<double> list(std::string_view key, Bound bound = Bound::Any) {
    const auto& [text, origin] = lookup(key);
    std::vector<double> out;
    std::string normal;
    if (!trim(text).empty()) {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const double v = parse_double(trim(item), key, origin);
        check_bound(v, bound, key, origin);
        if (!out.empty()) normal += ", ";
        normal += format_number(v);
        out.push_back(v);
      }
    }
    record(key, normal);
    return out;
  }

  std::string choice(std::string_view key) {
    const auto& [text, origin] = lookup(key);
    const KeySpec* spec = find_key(key);
    std::string_view options = spec->choices;
    while (!options.empty()) {
      const auto bar = options.find('|');
      const std::string_view opt = options.substr(0, bar);
      if (opt == text) {
        record(key, text);
        return text;
      }
      if (bar == std::string_view::npos) break;
      options.remove_prefix(bar + 1);
    }
    fail(key, origin, "expected one of " + std::string(spec->choices) + ", got '" + text + "'");
  }

  bool flag(std::string_view key) {
    const auto& [text, origin] = lookup(key);
    bool v = false;
    if (text == "true" || text == "1" || text == "yes" || text == "on") {
      v = true;
    } else if (!(text == "false" || text == "0" || text == "no" || text == "off")) {
      fail(key, origin, "expected true or false, got '" + text + "'");
    }
    record(key, v ? "true" : "false");
    return v;
  }

  [[noreturn]] void fail(std::string_view key, const std::string& message) const {
    fail(key, lookup(key).second, message);
  }

  std::string canonical() const { return canon_.str(); }

 private:
  const std::pair<std::string, std::string>& lookup(std::string_view key) const {
    return values_.at(std::string(key));
  }

  [[noreturn]] static void fail(std::string_view key, const std::string& origin,
                                const std::string& message) {
    throw ValidationError(format_location(origin, key) + ": " + message);
  }

  static double parse_double(const std::string& text, std::string_view key,
                             const std::string& origin) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    const auto r = std::from_chars(text.data(), end, v);
    if (text.empty() || r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) {
      fail(key, origin, "expected a finite number, got '" + text + "'");
    }
    return v;
  }

  static void check_bound(double v, Bound bound, std::string_view key,
                          const std::string& origin) {
    if (bound == Bound::Positive && !(v > 0.0)) fail(key, origin, "must be > 0");
    if (bound == Bound::NonNegative && !(v >= 0.0)) fail(key, origin, "must be >= 0");
  }

  void record(std::string_view key, const std::string& normal) {
    canon_ << key << '=' << normal << '\n';
  }

  const std::map<std::string, std::pair<std::string, std::string>>& values_;
  std::ostringstream canon_;
};

std::vector<double> grid(double lo, double hi, int steps) {
  return numerics::linspace(lo, hi, static_cast<std::size_t>(steps));
}

SweepOrder parse_order(const std::string& s) {
  if (s == "down") return SweepOrder::Down;
  if (s == "both") return SweepOrder::Both;
  return SweepOrder::Up;
}

constexpr int kMaxSteps = 1000000;

}  // namespace

const char* to_string(SweepOrder order) {
  switch (order) {
    case SweepOrder::Up: return "up";
    case SweepOrder::Down: return "down";
    case SweepOrder::Both: break;
  }
  return "both";
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ConfigSource::ConfigSource() {
  for (const KeySpec& k : kSchema) {
    values_[std::string(k.name)] = {std::string(k.fallback), "default"};
  }
}

void ConfigSource::assign(const std::string& key, const std::string& value,
                          const std::string& origin) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw ValidationError(origin + ": unknown key '" + key + "'");
  }
  it->second = {value, origin};
}

void ConfigSource::load(std::istream& in, const std::string& name) {
  std::string line;
  std::string section;
  int number = 0;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = name + ":" + std::to_string(number);
    const auto comment = line.find_first_of("#;");
    const std::string body = trim(std::string_view(line).substr(0, comment));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ValidationError(where + ": malformed section header");
      section = trim(std::string_view(body).substr(1, body.size() - 2));
      if (!known_section(section)) {
        throw ValidationError(where + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(where + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (section.empty()) throw ValidationError(where + ": key '" + key + "' outside a section");
    const std::string full = section + "." + key;
    if (!find_key(full)) {
      throw ValidationError(where + ": unknown key '" + key + "' in section [" + section + "]");
    }
    if (auto prev = seen.find(full); prev != seen.end()) {
      throw ValidationError(where + ": duplicate key '" + key + "' (first set on line " +
                            std::to_string(prev->second) + ")");
    }
    seen[full] = number;
    assign(full, trim(std::string_view(body).substr(eq + 1)), where);
  }
}

void ConfigSource::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  load(in, path);
}

void ConfigSource::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ValidationError("--set '" + assignment + "': expected section.key=value");
  }
  const std::string key = trim(std::string_view(assignment).substr(0, eq));
  assign(key, trim(std::string_view(assignment).substr(eq + 1)), "--set");
}

RunConfig ConfigSource::resolve() const {
  std::map<std::string, std::pair<std::string, std::string>> raw;
  for (const auto& [k, e] : values_) raw[k] = {e.text, e.origin};
  Reader r(raw);
  RunConfig c;
  using constants::deg;
  using constants::two_pi;

  SpinParams& s = c.spin;
  s.zero_field_splitting = two_pi * r.number("spin.zero_field_splitting_hz", Bound::Positive);
  s.gyromagnetic_ratio =
      two_pi * r.number("spin.gyromagnetic_ratio_hz_per_tesla", Bound::Positive);
  s.longitudinal_rate = r.number("spin.longitudinal_rate_per_s", Bound::Positive);
  s.dephasing_rate = two_pi * r.number("spin.dephasing_rate_hz", Bound::Positive);
  s.pumping_rate = r.number("spin.pumping_rate_per_s", Bound::NonNegative);
  const double ppm = r.number("spin.density_ppm", Bound::NonNegative);
  s.density = ppm * r.number("spin.ppm_density_per_m3", Bound::Positive);
  const std::vector<double> counts = r.list("spin.spins_per_class_count", Bound::NonNegative);
  if (counts.size() != 4) r.fail("spin.spins_per_class_count", "expected four values");
  std::copy(counts.begin(), counts.end(), s.spins_per_class.begin());
  s.validate();

  const double alpha = r.number("crystal.euler_alpha_deg") * deg;
  const double beta = r.number("crystal.euler_beta_deg") * deg;
  const double gamma = r.number("crystal.euler_gamma_deg") * deg;
  const std::vector<double> q = r.list("crystal.quaternion_wxyz");
  if (q.empty()) {
    c.geometry.orientation = CrystalOrientation::from_euler_zyz(alpha, beta, gamma);
  } else {
    if (q.size() != 4) r.fail("crystal.quaternion_wxyz", "expected four values w, x, y, z");
    Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
    if (!(quat.norm() > 1e-12)) r.fail("crystal.quaternion_wxyz", "zero quaternion");
    quat.normalize();
    c.geometry.orientation = CrystalOrientation(quat);
  }
  c.geometry.tracked_class = r.integer("crystal.tracked_class", 0, kNumClasses - 1);
  c.phi = r.number("crystal.phi_deg") * deg;

  c.trap.inertia = r.number("trap.inertia_kg_m2", Bound::Positive);
  c.trap.angular_frequency = two_pi * r.number("trap.frequency_hz", Bound::NonNegative);
  c.trap.theta0 = r.number("trap.theta0_deg") * deg;
  c.trap.validate();

  {
    const double lo = r.number("sweep.field_min_tesla", Bound::NonNegative);
    const double hi = r.number("sweep.field_max_tesla", Bound::NonNegative);
    const int steps = r.integer("sweep.field_steps", 0, kMaxSteps);
    if (hi < lo) r.fail("sweep.field_max_tesla", "must be >= field_min_tesla");
    const std::vector<double> list = r.list("sweep.field_list_tesla", Bound::NonNegative);
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (!(list[i] > list[i - 1])) r.fail("sweep.field_list_tesla", "must be strictly ascending");
    }
    c.fields = list.empty() ? grid(lo, hi, steps) : list;
    c.order = parse_order(r.choice("sweep.direction"));
  }

  c.rotation.field = r.number("rotation.field_tesla", Bound::Positive);
  {
    const double a0 = r.number("rotation.angle_start_deg") * deg;
    const double a1 = r.number("rotation.angle_stop_deg") * deg;
    c.rotation.field_angles = grid(a0, a1, r.integer("rotation.angle_steps", 0, kMaxSteps));
  }
  c.rotation.ramp_steps = r.integer("rotation.ramp_steps", 0, kMaxSteps);

  MdmrConfig& m = c.mdmr;
  m.field = r.number("mdmr.field_tesla", Bound::Positive);
  m.line = r.choice("mdmr.line") == "minus" ? Line::Minus : Line::Plus;
  m.center_hz = r.number("mdmr.center_hz", Bound::NonNegative);
  {
    const double lo = r.number("mdmr.offset_min_hz");
    const double hi = r.number("mdmr.offset_max_hz");
    const int steps = r.integer("mdmr.offset_steps", 0, kMaxSteps);
    if (!(hi > lo) && steps > 1) r.fail("mdmr.offset_max_hz", "must be > offset_min_hz");
    m.offsets_hz = grid(lo, hi, steps);
  }
  m.drive.rabi_rate = two_pi * r.number("mdmr.rabi_rate_hz", Bound::NonNegative);
  m.drive.extra_broadening = two_pi * r.number("mdmr.extra_broadening_hz", Bound::NonNegative);
  m.drive.power_broadening = r.flag("mdmr.power_broadening");
  m.drive.averages = r.integer("mdmr.averages", 1, kMaxSteps);
  m.order = parse_order(r.choice("mdmr.direction"));
  m.edge_window_hz = r.number("mdmr.edge_window_hz", Bound::Positive);

  LandscapeConfig& l = c.landscape;
  l.field = r.number("landscape.field_tesla", Bound::Positive);
  {
    const double t0 = r.number("landscape.theta_min_deg") * deg;
    const double t1 = r.number("landscape.theta_max_deg") * deg;
    const int nt = r.integer("landscape.theta_steps", 0, kMaxSteps);
    const double p0 = r.number("landscape.phi_min_deg") * deg;
    const double p1 = r.number("landscape.phi_max_deg") * deg;
    const int np = r.integer("landscape.phi_steps", 0, kMaxSteps);
    if (!(t1 > t0) && nt > 1) r.fail("landscape.theta_max_deg", "must be > theta_min_deg");
    if (!(p1 > p0) && np > 1) r.fail("landscape.phi_max_deg", "must be > phi_min_deg");
    l.theta = grid(t0, t1, nt);
    l.phi = grid(p0, p1, np);
  }
  l.quadrature.abs_tol = r.number("landscape.abs_tol_joule", Bound::Positive);
  l.quadrature.rel_tol = r.number("landscape.rel_tol", Bound::NonNegative);

  {
    const double lo = r.number("libration.field_min_tesla", Bound::Positive);
    const double hi = r.number("libration.field_max_tesla", Bound::Positive);
    const int steps = r.integer("libration.field_steps", 0, kMaxSteps);
    if (hi < lo) r.fail("libration.field_max_tesla", "must be >= field_min_tesla");
    c.libration_fields = grid(lo, hi, steps);
  }

  {
    const auto nm = r.list("invert.nu_minus_hz", Bound::Positive);
    const auto np = r.list("invert.nu_plus_hz", Bound::Positive);
    const auto wm = r.list("invert.linewidth_minus_hz", Bound::NonNegative);
    const auto wp = r.list("invert.linewidth_plus_hz", Bound::NonNegative);
    if (nm.size() != np.size()) {
      r.fail("invert.nu_plus_hz", "needs as many values as invert.nu_minus_hz");
    }
    auto width = [&](const std::vector<double>& w, std::string_view key, std::size_t i) {
      if (w.empty()) return 0.0;
      if (w.size() == 1) return w[0];
      if (w.size() != nm.size()) r.fail(key, "needs one value or one per line pair");
      return w[i];
    };
    for (std::size_t i = 0; i < nm.size(); ++i) {
      c.invert.pairs.push_back({nm[i], np[i], width(wm, "invert.linewidth_minus_hz", i),
                                width(wp, "invert.linewidth_plus_hz", i)});
    }
    c.invert.options.theta_max = r.number("invert.theta_max_deg", Bound::Positive) * deg;
    c.invert.options.field_max = r.number("invert.field_max_tesla", Bound::Positive);
    c.invert.options.tolerance_hz = r.number("invert.tolerance_hz", Bound::Positive);
  }

  c.canonical = r.canonical();
  return c;
}

void ConfigSource::write(std::ostream& out) const {
  std::string section;
  for (const KeySpec& k : kSchema) {
    const auto dot = k.name.find('.');
    const std::string_view sec = k.name.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      section = std::string(sec);
      out << '[' << section << "]\n";
    }
    if (!k.help.empty()) out << "# " << k.help << '\n';
    out << k.name.substr(dot + 1) << " = " << values_.at(std::string(k.name)).text << '\n';
  }
}

}  // namespace nvlock::cli
