#pragma once

#include <numbers>

namespace nvlock::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018, SI units.
inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double mu0 = 1.25663706212e-6;       // T m / A
inline constexpr double boltzmann = 1.380649e-23;     // J / K

/// Carbon atom number density of diamond (m^-3); 1 ppm of NV is 1e-6 of this.
inline constexpr double diamond_carbon_density = 1.76e29;

inline constexpr double deg = pi / 180.0;

}  // namespace nvlock::constants
