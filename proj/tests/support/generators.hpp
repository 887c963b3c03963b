#pragma once

// Seeded random draws for the property tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "nvlock/spin_core.hpp"

namespace nvtest {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  nvlock::Vector3 unit_vector() {
    std::normal_distribution<double> n(0.0, 1.0);
    nvlock::Vector3 v(n(rng_), n(rng_), n(rng_));
    while (v.norm() < 1e-6) v = nvlock::Vector3(n(rng_), n(rng_), n(rng_));
    return v.normalized();
  }

  /// Rates spread over several decades around the defaults, inside the
  /// range SpinParams::validate accepts.
  nvlock::SpinParams spin_params() {
    nvlock::SpinParams p;
    p.longitudinal_rate = log_uniform(1e2, 1e4);
    p.pumping_rate = log_uniform(1e3, 1e6);
    const double floor = std::max(p.longitudinal_rate + p.pumping_rate, 2.0 * p.longitudinal_rate);
    p.dephasing_rate = std::max(floor, nvlock::constants::two_pi * log_uniform(1e5, 5e7));
    return p;
  }

  /// Field of random direction and magnitude up to `max_tesla`.
  nvlock::Vector3 field(double max_tesla) { return uniform(0.0, max_tesla) * unit_vector(); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace nvtest
