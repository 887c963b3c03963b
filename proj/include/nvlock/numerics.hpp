#pragma once

// Small numerical helpers shared by the mechanics and magnetometry code.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <exception>
#include <queue>
#include <thread>
#include <vector>

namespace nvlock::numerics {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
void gk15(F& f, double a, double b, double& kronrod, double& gauss) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  kronrod = fc * kKronrodWeights[7];
  gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kKronrodNodes[j];
    const double s = f(c - dx) + f(c + dx);
    kronrod += kKronrodWeights[j] * s;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * s;
  }
  kronrod *= h;
  gauss *= h;
}

struct Piece {
  double a, b, value, error;
  int depth;
  bool operator<(const Piece& o) const { return error < o.error; }
};

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integral of f over [a, b]: the interval with
/// the largest error estimate is bisected until the summed estimate is below
/// max(abs_tol, rel_tol * |value|). Intervals at `max_depth` are not split.
template <class F>
QuadratureResult integrate(F f, double a, double b, double abs_tol, double rel_tol,
                           int max_depth = 30) {
  QuadratureResult acc;
  if (a == b) return acc;
  double k = 0.0, g = 0.0;
  detail::gk15(f, a, b, k, g);
  acc.evaluations = 15;
  std::priority_queue<detail::Piece> open;
  std::vector<detail::Piece> done;
  open.push({a, b, k, std::abs(k - g), 0});
  double value = k, error = std::abs(k - g);
  constexpr int kMaxPieces = 4000;
  while (!open.empty()) {
    if (error <= std::max(abs_tol, rel_tol * std::abs(value))) break;
    if (static_cast<int>(open.size() + done.size()) >= kMaxPieces) break;
    const detail::Piece p = open.top();
    open.pop();
    if (p.depth >= max_depth) {
      done.push_back(p);
      continue;
    }
    const double m = 0.5 * (p.a + p.b);
    double kl = 0.0, gl = 0.0, kr = 0.0, gr = 0.0;
    detail::gk15(f, p.a, m, kl, gl);
    detail::gk15(f, m, p.b, kr, gr);
    acc.evaluations += 30;
    const detail::Piece l{p.a, m, kl, std::abs(kl - gl), p.depth + 1};
    const detail::Piece r{m, p.b, kr, std::abs(kr - gr), p.depth + 1};
    value += l.value + r.value - p.value;
    error += l.error + r.error - p.error;
    open.push(l);
    open.push(r);
  }
  // Re-sum to shed the drift of the running totals.
  acc.value = 0.0;
  acc.error = 0.0;
  for (; !open.empty(); open.pop()) done.push_back(open.top());
  for (const auto& p : done) {
    acc.value += p.value;
    acc.error += p.error;
  }
  acc.converged = acc.error <= std::max(abs_tol, rel_tol * std::abs(acc.value));
  return acc;
}

/// Runs fn(i) for i in [0, n) on a few worker threads. Each index is handled
/// exactly once; callers write results into per-index slots.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> failures(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        failures[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

/// Evenly spaced samples, both ends included. steps == 1 returns {lo}.
inline std::vector<double> linspace(double lo, double hi, std::size_t steps) {
  std::vector<double> out;
  if (steps == 0) return out;
  out.reserve(steps);
  if (steps == 1) {
    out.push_back(lo);
    return out;
  }
  for (std::size_t i = 0; i < steps; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1));
  }
  return out;
}

}  // namespace nvlock::numerics
