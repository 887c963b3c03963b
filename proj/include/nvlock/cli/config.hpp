#pragma once

// Run configuration for the command-line tool.
//
// The file format is INI-like: `[section]` headers, `key = value` lines and
// `#` or `;` comments. Every key carries its unit in the name; angular rates
// are given as frequencies (`_hz`) and converted with 2 pi on load.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nvlock/magnetometry.hpp"
#include "nvlock/mdmr.hpp"
#include "nvlock/mechanics.hpp"

namespace nvlock::cli {

enum class SweepOrder { Up, Down, Both };
enum class Line { Minus, Plus };

struct RotationConfig {
  double field = 0.2;                // T
  std::vector<double> field_angles;  // rad
  int ramp_steps = 101;
};

struct MdmrConfig {
  double field = 0.15;  // T
  Line line = Line::Plus;
  double center_hz = 0.0;  // 0: MW-off line of the tracked class
  std::vector<double> offsets_hz;
  MicrowaveDrive drive;  // sweep left empty; filled per run
  SweepOrder order = SweepOrder::Both;
  double edge_window_hz = 100e6;
};

struct LandscapeConfig {
  double field = 0.11;  // T
  std::vector<double> theta;  // rad
  std::vector<double> phi;    // rad
  QuadratureOptions quadrature;
};

struct InvertConfig {
  std::vector<TransitionPair> pairs;
  InversionOptions options;
};

struct RunConfig {
  SpinParams spin;
  CrystalGeometry geometry;
  double phi = 0.0;  // rad, azimuth of the field about the tracked axis
  TrapModel trap;

  std::vector<double> fields;  // T, [sweep] section, ascending
  SweepOrder order = SweepOrder::Up;

  RotationConfig rotation;
  MdmrConfig mdmr;
  LandscapeConfig landscape;
  std::vector<double> libration_fields;  // T
  InvertConfig invert;

  /// Normalised `section.key=value` lines in schema order; the config hash
  /// is taken over this text.
  std::string canonical;
};

/// Raw key/value text with the place each value came from.
class ConfigSource {
 public:
  /// Schema defaults for every key.
  ConfigSource();

  /// Reads a config file; `name` is used in error messages.
  void load(std::istream& in, const std::string& name);
  void load_file(const std::string& path);
  /// `section.key=value`, as passed to --set.
  void set(const std::string& assignment);

  RunConfig resolve() const;

  /// The current values as a commented config file.
  void write(std::ostream& out) const;

 private:
  struct Entry {
    std::string text;
    std::string origin;
  };
  void assign(const std::string& key, const std::string& value, const std::string& origin);
  std::map<std::string, Entry> values_;
};

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

const char* to_string(SweepOrder order);

}  // namespace nvlock::cli
