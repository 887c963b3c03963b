#include "nvlock/magnetometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nvlock/errors.hpp"

namespace nvlock {

SortedLevels sorted_levels(const SpinParams& params, const Vector3& b_nv) {
  Eigen::SelfAdjointEigenSolver<Matrix3c> eig(hamiltonian_angular(params, b_nv));
  SortedLevels out;
  out.vectors = eig.eigenvectors();
  for (int k = 0; k < 3; ++k) {
    out.energies[k] = eig.eigenvalues()(k);
    out.zero_weight[k] = std::norm(out.vectors(1, k));
  }
  return out;
}

TransitionPair transitions_for_field(const SpinParams& params, const Vector3& b_nv) {
  const SortedLevels lv = sorted_levels(params, b_nv);
  // Fourth powers of the |0> probability keep the label on the dominant |0>-like level away from the
  // anticrossing while staying continuous through it.
  const double w_low = std::pow(lv.zero_weight[0], 4);
  const double w_mid = std::pow(lv.zero_weight[1], 4);
  TransitionPair out;
  out.nu_minus = (lv.energies[1] - lv.energies[0]) / constants::two_pi;
  const double centroid = (w_low * lv.energies[0] + w_mid * lv.energies[1]) / (w_low + w_mid);
  out.nu_plus = (lv.energies[2] - centroid) / constants::two_pi;
  return out;
}

TransitionPair transition_frequencies(const SpinParams& params, double theta, double field) {
  if (!std::isfinite(theta) || !std::isfinite(field)) {
    throw ValidationError("transition_frequencies: non-finite angle or field");
  }
  return transitions_for_field(
      params, Vector3(field * std::sin(theta), 0.0, field * std::cos(theta)));
}

namespace {

constexpr double kFieldScale = 0.1;  // T per unit of the scaled field coordinate

struct Model {
  const SpinParams& params;
  const TransitionPair& target;

  Eigen::Vector2d residual(double theta, double field) const {
    const TransitionPair t = transition_frequencies(params, theta, field);
    return {t.nu_minus - target.nu_minus, t.nu_plus - target.nu_plus};
  }

  // Columns: d/d theta (Hz/rad), d/d field (Hz/T).
  Eigen::Matrix2d jacobian(double theta, double field) const {
    const double ht = 1e-6;
    const double hb = 1e-7;
    Eigen::Matrix2d j;
    j.col(0) = (residual(theta + ht, field) - residual(theta - ht, field)) / (2.0 * ht);
    j.col(1) = (residual(theta, field + hb) - residual(theta, field - hb)) / (2.0 * hb);
    return j;
  }
};

double mismatch(const Eigen::Vector2d& r) { return r.cwiseAbs().maxCoeff(); }

struct Fit {
  double theta;
  double field;
  double residual;
  int iterations;
};

Fit levenberg_marquardt(const Model& model, double theta, double field,
                        const InversionOptions& opt) {
  // The spectrum is even in theta, so the angle may pass through zero while
  // iterating (the sensitivity vanishes there); it is folded back at the end.
  const double lower = opt.theta_min == 0.0 ? -opt.theta_max : opt.theta_min;
  auto clamp_state = [&](double& t, double& b) {
    t = std::clamp(t, lower, opt.theta_max);
    b = std::clamp(b, opt.field_min, opt.field_max);
  };
  Eigen::Vector2d r = model.residual(theta, field);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  bool stalled = false;
  for (; it < 200 && !stalled; ++it) {
    if (mismatch(r) < 1e-4) break;
    Eigen::Matrix2d j = model.jacobian(theta, field);
    j.col(1) *= kFieldScale;
    const Eigen::Matrix2d a = j.transpose() * j;
    const Eigen::Vector2d g = j.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::Matrix2d damped = a;
      damped.diagonal() += lambda * a.diagonal() +
                           Eigen::Vector2d::Constant(1e-30 + 1e-12 * a.diagonal().maxCoeff());
      const Eigen::Vector2d step = -damped.ldlt().solve(g);
      double t_new = theta + step(0);
      double b_new = field + step(1) * kFieldScale;
      clamp_state(t_new, b_new);
      const Eigen::Vector2d r_new = model.residual(t_new, b_new);
      const double cost_new = r_new.squaredNorm();
      if (cost_new < cost) {
        const double moved = std::abs(t_new - theta) + std::abs(b_new - field) / kFieldScale;
        theta = t_new;
        field = b_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        stalled = moved < 1e-15;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) break;
  }
  return {std::abs(theta), field, mismatch(r), it};
}

// Exact (theta, B) when both lines leave one common level: `common_mid`
// selects the middle level (past the anticrossing) instead of the lowest.
// Uses trace H = 2D, e2 = D^2 - gamma^2 B^2 and det H = -D gamma^2 B_perp^2.
bool closed_form(const SpinParams& params, const TransitionPair& pair, bool common_mid,
                 double& theta, double& field) {
  const double d = params.zero_field_splitting;
  const double g = params.gyromagnetic_ratio;
  const double nm = constants::two_pi * pair.nu_minus;
  const double np = constants::two_pi * pair.nu_plus;
  double e0, e1, e2;
  if (common_mid) {
    e1 = (2.0 * d + nm - np) / 3.0;
    e0 = e1 - nm;
    e2 = e1 + np;
  } else {
    e0 = (2.0 * d - nm - np) / 3.0;
    e1 = e0 + nm;
    e2 = e0 + np;
  }
  const double sym2 = e0 * e1 + e0 * e2 + e1 * e2;
  const double det = e0 * e1 * e2;
  const double gb2 = d * d - sym2;
  if (!(gb2 > 0.0)) return false;
  const double s2 = -det / (d * gb2);
  if (!(s2 >= -1e-9 && s2 <= 1.0 + 1e-9)) return false;
  theta = std::asin(std::sqrt(std::clamp(s2, 0.0, 1.0)));
  field = std::sqrt(gb2) / g;
  return std::isfinite(theta) && std::isfinite(field);
}

}  // namespace

AngleFieldEstimate invert_angle_field(const SpinParams& params, const TransitionPair& pair,
                                      const InversionOptions& options) {
  params.validate();
  if (!(pair.nu_minus > 0.0) || !(pair.nu_plus > 0.0) || !std::isfinite(pair.nu_minus) ||
      !std::isfinite(pair.nu_plus)) {
    throw ValidationError("invert_angle_field: line frequencies must be positive and finite");
  }
  if (options.theta_steps < 2 || options.field_steps < 2 ||
      !(options.theta_max > options.theta_min) || !(options.field_max > options.field_min)) {
    throw ValidationError("invert_angle_field: empty search grid");
  }
  const Model model{params, pair};

  const int nt = options.theta_steps;
  const int nb = options.field_steps;
  std::vector<double> cost(static_cast<std::size_t>(nt * nb));
  auto theta_at = [&](int i) {
    return options.theta_min + (options.theta_max - options.theta_min) * i / (nt - 1);
  };
  auto field_at = [&](int k) {
    return options.field_min + (options.field_max - options.field_min) * k / (nb - 1);
  };
  for (int i = 0; i < nt; ++i) {
    for (int k = 0; k < nb; ++k) {
      cost[i * nb + k] = mismatch(model.residual(theta_at(i), field_at(k)));
    }
  }
  // Local minima of the grid mismatch, best first.
  std::vector<int> starts;
  for (int i = 0; i < nt; ++i) {
    for (int k = 0; k < nb; ++k) {
      const double c = cost[i * nb + k];
      bool minimum = true;
      for (int di = -1; di <= 1 && minimum; ++di) {
        for (int dk = -1; dk <= 1; ++dk) {
          const int ii = i + di, kk = k + dk;
          if ((di == 0 && dk == 0) || ii < 0 || kk < 0 || ii >= nt || kk >= nb) continue;
          if (cost[ii * nb + kk] < c) {
            minimum = false;
            break;
          }
        }
      }
      if (minimum) starts.push_back(i * nb + k);
    }
  }
  std::sort(starts.begin(), starts.end(), [&](int a, int b) { return cost[a] < cost[b]; });
  if (starts.size() > 40) starts.resize(40);

  std::vector<std::pair<double, double>> initial;
  const double half_step = 0.5 * (theta_at(1) - theta_at(0));
  for (int s : starts) {
    initial.emplace_back(std::max(theta_at(s / nb), options.theta_min + half_step),
                         field_at(s % nb));
  }
  for (bool mid : {false, true}) {
    double t = 0.0, b = 0.0;
    if (closed_form(params, pair, mid, t, b)) {
      initial.emplace_back(std::clamp(t, options.theta_min, options.theta_max),
                           std::clamp(b, options.field_min, options.field_max));
    }
  }

  const double linewidth = std::max(pair.linewidth_minus, pair.linewidth_plus);
  const double tolerance = std::max(options.tolerance_hz, linewidth / 100.0);
  std::vector<Fit> fits;
  int total_iterations = 0;
  double closest = std::numeric_limits<double>::infinity();
  for (const auto& [t0, b0] : initial) {
    const Fit f = levenberg_marquardt(model, t0, b0, options);
    total_iterations += f.iterations;
    closest = std::min(closest, f.residual);
    if (f.residual <= tolerance) fits.push_back(f);
  }
  if (fits.empty()) {
    std::ostringstream msg;
    msg << "invert_angle_field: no (theta, B) in range reproduces the lines ("
        << pair.nu_minus << " Hz, " << pair.nu_plus << " Hz); best mismatch "
        << closest << " Hz";
    throw NumericalError(msg.str());
  }
  std::sort(fits.begin(), fits.end(),
            [](const Fit& a, const Fit& b) { return a.residual < b.residual; });
  const Fit best = fits.front();
  std::vector<AngleField> distinct{{best.theta, best.field}};
  for (const Fit& f : fits) {
    const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](const AngleField& a) {
      return std::abs(a.theta - f.theta) < 1e-4 && std::abs(a.field - f.field) < 1e-6;
    });
    if (!seen) distinct.push_back({f.theta, f.field});
  }

  AngleFieldEstimate out;
  out.theta = best.theta;
  out.field = best.field;
  out.residual = best.residual;
  out.iterations = total_iterations;
  out.alternatives.assign(distinct.begin() + 1, distinct.end());

  double sm = pair.linewidth_minus > 0.0 ? pair.linewidth_minus : pair.linewidth_plus;
  double sp = pair.linewidth_plus > 0.0 ? pair.linewidth_plus : pair.linewidth_minus;
  if (!(sm > 0.0)) return out;

  const Eigen::Matrix2d j = model.jacobian(out.theta, out.field);
  Eigen::Matrix2d jw = j;
  jw.row(0) /= sm;
  jw.row(1) /= sp;
  const Eigen::Matrix2d fisher = jw.transpose() * jw;
  const double det = fisher.determinant();
  double theta_linear = std::numeric_limits<double>::infinity();
  double field_linear = std::numeric_limits<double>::infinity();
  if (det > 1e-12 * fisher(0, 0) * fisher(1, 1) && det > 0.0) {
    const Eigen::Matrix2d cov = fisher.inverse();
    theta_linear = std::sqrt(std::max(cov(0, 0), 0.0));
    field_linear = std::sqrt(std::max(cov(1, 1), 0.0));
  }

  // Second-order bound: a theta + a d/2 = sigma / d solved for the angle error d.
  double theta_quadratic = std::numeric_limits<double>::infinity();
  const double h = 1e-3;
  const Eigen::Vector2d r0 = model.residual(out.theta, out.field);
  const Eigen::Vector2d curvature =
      (model.residual(out.theta + h, out.field) - 2.0 * r0 +
       model.residual(out.theta - h, out.field)) / (h * h);
  const std::array<double, 2> sigma{sm, sp};
  for (int k = 0; k < 2; ++k) {
    const double a = std::abs(curvature(k));
    if (a <= 0.0) continue;
    const double d = -out.theta + std::sqrt(out.theta * out.theta + 2.0 * sigma[k] / a);
    theta_quadratic = std::min(theta_quadratic, d);
  }
  out.theta_err = std::min(theta_linear, theta_quadratic);
  if (std::isfinite(field_linear)) {
    out.field_err = field_linear;
  } else {
    const double db = std::max(std::abs(j(0, 1)) / sm, std::abs(j(1, 1)) / sp);
    out.field_err = db > 0.0 ? 1.0 / db : std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace nvlock
