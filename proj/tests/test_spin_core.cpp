#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nvlock/errors.hpp"
#include "nvlock/numerics.hpp"
#include "nvlock/spin_core.hpp"
#include "support/generators.hpp"

using namespace nvlock;
using constants::hbar;
using constants::mu0;
using constants::two_pi;

namespace {

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

std::vector<double> eigenvalues(const Matrix3c& h) {
  Eigen::SelfAdjointEigenSolver<Matrix3c> eig(h);
  return {eig.eigenvalues()(0), eig.eigenvalues()(1), eig.eigenvalues()(2)};
}

SpinParams with_pumping(double rate) {
  SpinParams p;
  p.pumping_rate = rate;
  return p;
}

double field_at_detuning(const SpinParams& p, double detuning) {
  return (p.zero_field_splitting - detuning) / p.gyromagnetic_ratio;
}

}  // namespace

TEST_SUITE("hamiltonian") {
  TEST_CASE("zero field leaves the splitting D between |0> and the degenerate |+-1>") {
    const SpinParams p;
    const auto ev = eigenvalues(build_hamiltonian(p, FieldVector::nv(0, 0, 0)));
    const double hd = hbar * p.zero_field_splitting;
    CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-12).scale(hd));
    CHECK(ev[1] == doctest::Approx(hd).epsilon(1e-12));
    CHECK(ev[2] == doctest::Approx(hd).epsilon(1e-12));
  }

  TEST_CASE("|0> and |-1> cross at 102.4 mT for an axial field") {
    const SpinParams p;
    const Matrix3c h = build_hamiltonian(p, FieldVector::nv(0, 0, 0.1024));
    const double gap = std::abs(h(2, 2).real() - h(1, 1).real());
    CHECK(gap < hbar * two_pi * 1e6);
  }

  TEST_CASE("the |0> <-> |-1> line sits near 2.17 GHz at 180 mT") {
    const SpinParams p;
    const Matrix3c h = build_hamiltonian(p, FieldVector::nv(0, 0, 0.18));
    const double nu = (h(1, 1).real() - h(2, 2).real()) / (hbar * two_pi);
    CHECK(std::abs(nu) == doctest::Approx(2.17e9).epsilon(0.01));
  }

  TEST_CASE("the Hamiltonian is Hermitian for any field") {
    nvtest::Gen gen(11);
    const SpinParams p;
    for (int i = 0; i < 50; ++i) {
      const Vector3 b = gen.field(0.5);
      const Matrix3c h = build_hamiltonian(p, FieldVector{b, Frame::Nv});
      CHECK((h - h.adjoint()).cwiseAbs().maxCoeff() <= 1e-40);
    }
  }

  TEST_CASE("non-finite or wrongly framed fields are rejected") {
    const SpinParams p;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(build_hamiltonian(p, FieldVector::nv(nan, 0, 0)), ValidationError);
    CHECK_THROWS_AS(build_hamiltonian(p, FieldVector::lab(Vector3(0, 0, 0.1))), ValidationError);
    CHECK_THROWS_AS(steady_state(p, FieldVector::nv(0, std::numeric_limits<double>::infinity(), 0)),
                    ValidationError);
  }

  TEST_CASE("invalid rates are rejected") {
    SpinParams p;
    p.pumping_rate = 2.0 * p.dephasing_rate;
    CHECK_THROWS_AS(steady_state(p, FieldVector::nv(0, 0, 0.1)), ValidationError);
    p = SpinParams{};
    p.dephasing_rate = 0.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = SpinParams{};
    p.longitudinal_rate = -1.0;
    CHECK_THROWS_AS(steady_state(p, FieldVector::nv(0, 0, 0.1)), ValidationError);
    p = SpinParams{};
    p.spins_per_class[2] = -5.0;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = SpinParams{};
    p.pumping_rate = 0.0;
    CHECK_NOTHROW(p.validate());
  }
}

TEST_SUITE("steady state") {
  TEST_CASE("axial populations follow the pumped rate equations") {
    const SpinParams p;
    const double g1 = p.longitudinal_rate;
    const double gl = p.pumping_rate;
    const double norm = 3.0 * g1 + gl;
    for (double b : {0.0, 0.023, 0.09, 0.15, 0.3}) {
      const DensityMatrix3 rho = steady_state(p, FieldVector::nv(0, 0, b));
      CHECK(rho.population_plus() == doctest::Approx(g1 / norm).epsilon(1e-10));
      CHECK(rho.population_zero() == doctest::Approx((gl + g1) / norm).epsilon(1e-10));
      CHECK(rho.population_minus() == doctest::Approx(g1 / norm).epsilon(1e-10));
    }
  }

  TEST_CASE("without pumping the state is fully mixed") {
    const SpinParams p = with_pumping(0.0);
    const DensityMatrix3 rho = steady_state(p, FieldVector::nv(0, 0, 0.05));
    CHECK((rho.matrix() - Matrix3c::Identity() / 3.0).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("first-order coherences match the closed forms") {
    // A small transverse probe at Delta_-1 = Gamma_2*.
    const SpinParams p;
    const double g = p.gyromagnetic_ratio;
    const double g2 = p.dephasing_rate;
    const double b0 = field_at_detuning(p, g2);
    const double dbx = 1e-11;
    const DensityMatrix3 rho = steady_state(p, FieldVector::nv(dbx, 0, b0));

    const double pf = p.pumping_factor();
    const double dm = p.zero_field_splitting - g * b0;
    const double dp = p.zero_field_splitting + g * b0;
    const std::complex<double> rho_0m =
        pf * std::complex<double>(-dm, g2) / (dm * dm + g2 * g2) * g / std::sqrt(2.0) * dbx;
    const std::complex<double> rho_p0 =
        pf * std::complex<double>(-dp, -g2) / (dp * dp + g2 * g2) * g / std::sqrt(2.0) * dbx;

    CHECK(std::abs(rho(1, 2) - rho_0m) <= 1e-8 * std::abs(rho_0m));
    CHECK(std::abs(rho(0, 1) - rho_p0) <= 1e-8 * std::abs(rho_p0));
    CHECK(std::abs(rho(0, 2)) <= 1e-8 * std::abs(rho_0m));
  }

  TEST_CASE("random parameters and fields give valid density matrices") {
    nvtest::Gen gen(2024);
    int checked = 0;
    double worst_herm = 0.0, worst_trace = 0.0, worst_eig = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const SpinParams p = gen.spin_params();
      const Vector3 b = gen.field(0.4);
      const DensityMatrix3 rho = steady_state(p, FieldVector{b, Frame::Nv});
      worst_herm = std::max(worst_herm, rho.hermiticity_error());
      worst_trace = std::max(worst_trace, rho.trace_error());
      worst_eig = std::min(worst_eig, rho.min_eigenvalue());
      checked += rho.valid() ? 1 : 0;
    }
    CHECK(checked == 1000);
    CHECK(worst_herm <= 1e-12);
    CHECK(worst_trace <= 1e-10);
    CHECK(worst_eig >= -1e-10);
  }

  TEST_CASE("above the crossing the pumped |0> is the upper level of the {|0>, |-1>} pair") {
    const SpinParams p;
    for (double b : {0.11, 0.15, 0.2}) {
      const DensityMatrix3 rho = steady_state(p, FieldVector::nv(0, 0, b));
      const Matrix3c h = hamiltonian_angular(p, Vector3(0, 0, b));
      CHECK(h(1, 1).real() > h(2, 2).real());
      CHECK(rho.population_zero() > rho.population_minus());
    }
    const Matrix3c h = hamiltonian_angular(p, Vector3(0, 0, 0.05));
    CHECK(h(1, 1).real() < h(2, 2).real());
  }
}

TEST_SUITE("magnetization") {
  TEST_CASE("equal populations carry no moment") {
    const SpinParams p;
    const Vector3 m = magnetization(p, DensityMatrix3(Matrix3c::Identity() / 3.0));
    CHECK(m.norm() == doctest::Approx(0.0));
  }

  TEST_CASE("the stretched |+1> state has M_z = -d hbar gamma_e") {
    const SpinParams p;
    Matrix3c r = Matrix3c::Zero();
    r(0, 0) = 1.0;
    const Vector3 m = magnetization(p, DensityMatrix3(r));
    CHECK(m.z() == doctest::Approx(-p.density * hbar * p.gyromagnetic_ratio).epsilon(1e-14));
    CHECK(std::abs(m.x()) + std::abs(m.y()) == doctest::Approx(0.0));
  }

  TEST_CASE("a finite difference of M_x reproduces chi_perp at Delta_-1 = 2 Gamma_2*") {
    const SpinParams p;
    const double b0 = field_at_detuning(p, 2.0 * p.dephasing_rate);
    const double h = 1e-10;
    const double mp = magnetization(p, steady_state(p, FieldVector::nv(h, 0, b0))).x();
    const double mm = magnetization(p, steady_state(p, FieldVector::nv(-h, 0, b0))).x();
    const double chi = mu0 * (mp - mm) / (2.0 * h);
    CHECK(rel_diff(chi, susceptibility_analytic(p, b0).chi_perp) < 1e-6);
  }
}

TEST_SUITE("susceptibility") {
  TEST_CASE("numeric and closed-form susceptibilities agree on a 50-point grid") {
    for (double rate : {1e4, 1e5, 1e6}) {
      const SpinParams p = with_pumping(rate);
      double worst = 0.0;
      for (double b : numerics::linspace(0.0, 0.2, 50)) {
        const SusceptibilityTensor n = susceptibility_numeric(p, b);
        const SusceptibilityTensor a = susceptibility_analytic(p, b);
        // Relative to the transverse tensor norm: chi_d is exactly 0 at B = 0.
        const double norm = std::hypot(a.chi_perp, a.chi_d);
        worst = std::max({worst, std::abs(n.chi_perp - a.chi_perp) / norm,
                          std::abs(n.chi_d - a.chi_d) / norm});
      }
      CAPTURE(rate);
      CHECK(worst < 1e-6);
    }
  }

  TEST_CASE("far from the crossing chi_perp is about +1e-4 at 1 ppm") {
    const SpinParams p;
    const double chi = susceptibility_numeric(p, 0.0).chi_perp;
    CHECK(chi > 0.5e-4);
    CHECK(chi < 2e-4);
  }

  TEST_CASE("near the crossing |chi_perp| peaks around 1e-2") {
    const SpinParams p;
    double peak = 0.0;
    for (double b : numerics::linspace(0.095, 0.11, 301)) {
      peak = std::max(peak, std::abs(susceptibility_numeric(p, b).chi_perp));
    }
    CHECK(peak > 0.3e-2);
    CHECK(peak < 3e-2);
  }

  TEST_CASE("an axial probe gives no response") {
    nvtest::Gen gen(5);
    for (int i = 0; i < 40; ++i) {
      const SpinParams p = gen.spin_params();
      const double b = gen.uniform(0.0, 0.3);
      CHECK(std::abs(susceptibility_numeric(p, b).chi_par) <= 1e-12);
    }
    CHECK(susceptibility_analytic(SpinParams{}, 0.1).chi_par == 0.0);
  }

  TEST_CASE("chi_perp vanishes far detuned") {
    const SpinParams p;
    const double chi0 = susceptibility_analytic(p, 0.0).chi_perp;
    CHECK(std::abs(susceptibility_analytic(p, 1e3).chi_perp) < 1e-3 * chi0);
    CHECK(std::abs(susceptibility_numeric(p, 1e3).chi_perp) < 1e-3 * chi0);
  }

  TEST_CASE("chi_d is positive below the crossing and stays positive above it") {
    // chi_d depends on Delta_-1 only through Delta_-1^2 and Delta_+1 > |Delta_-1|
    // for every B > 0, so it peaks at the crossing rather than changing sign.
    const SpinParams p;
    const double g2 = p.dephasing_rate;
    for (double k : {0.5, 1.0, 3.0, 10.0}) {
      const double below = susceptibility_analytic(p, field_at_detuning(p, k * g2)).chi_d;
      const double above = susceptibility_analytic(p, field_at_detuning(p, -k * g2)).chi_d;
      CHECK(below > 0.0);
      CHECK(above > 0.0);
      CHECK(rel_diff(below, above) < 1e-2);
    }
    const double at = susceptibility_analytic(p, field_at_detuning(p, 0.0)).chi_d;
    CHECK(at > susceptibility_analytic(p, field_at_detuning(p, g2)).chi_d);
  }

  TEST_CASE("chi_perp changes sign exactly once between 0.09 and 0.12 T") {
    const SpinParams p;
    int flips = 0;
    double prev = susceptibility_numeric(p, 0.09).chi_perp;
    for (double b : numerics::linspace(0.09, 0.12, 601)) {
      const double c = susceptibility_numeric(p, b).chi_perp;
      if ((c > 0) != (prev > 0)) ++flips;
      prev = c;
    }
    CHECK(flips == 1);
  }
}

TEST_SUITE("van vleck") {
  TEST_CASE("with p0 = 1 it tends to the single-pair dispersive form near the crossing") {
    SpinParams p;
    p.dephasing_rate = two_pi * 1.0;  // effectively zero
    const Populations full{0.0, 1.0, 0.0};
    const double dm = two_pi * 50e6;
    const double b0 = field_at_detuning(p, dm);
    const double g = p.gyromagnetic_ratio;
    const double eq4 = p.density * hbar * mu0 * g * g * dm / (dm * dm + p.dephasing_rate * p.dephasing_rate);
    const double vv = susceptibility_van_vleck(p, full, b0);
    const double dp = detuning_plus(p, b0);
    CHECK(rel_diff(vv, eq4) <= 1.01 * dm / dp);
    CHECK(rel_diff(vv, eq4) < 0.01);
  }

  TEST_CASE("equal populations give zero") {
    const Populations equal{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    CHECK(susceptibility_van_vleck(SpinParams{}, equal, 0.05) == doctest::Approx(0.0));
  }

  TEST_CASE("low-field limit is 2 d hbar mu0 gamma_e^2 / D") {
    const SpinParams p;
    const double g = p.gyromagnetic_ratio;
    const double expect = 2.0 * p.density * hbar * mu0 * g * g / p.zero_field_splitting;
    CHECK(susceptibility_van_vleck(p, {0.0, 1.0, 0.0}, 0.0) ==
          doctest::Approx(expect).epsilon(1e-14));
  }

  TEST_CASE("on the crossing it refuses to evaluate") {
    const SpinParams p;
    const double bc = p.zero_field_splitting / p.gyromagnetic_ratio;
    CHECK_THROWS_AS(susceptibility_van_vleck(p, {0.0, 1.0, 0.0}, bc), SingularDetuningError);
    CHECK_THROWS_AS(susceptibility_van_vleck(p, {0.5, 0.6, 0.0}, 0.05), ValidationError);
  }

  TEST_CASE("it approaches the closed form as Gamma_2* shrinks at fixed detuning") {
    SpinParams p;
    const double dm = two_pi * 500e6;
    double previous = std::numeric_limits<double>::infinity();
    for (double g2 : {two_pi * 20e6, two_pi * 5e6, two_pi * 1e6, two_pi * 1e5}) {
      p.dephasing_rate = g2;
      const double b0 = field_at_detuning(p, dm);
      const double pf = p.pumping_factor();
      const Populations pop{(1.0 - pf) / 3.0, (1.0 + 2.0 * pf) / 3.0, (1.0 - pf) / 3.0};
      const double diff = rel_diff(susceptibility_van_vleck(p, pop, b0),
                                   susceptibility_analytic(p, b0).chi_perp);
      CHECK(diff < previous);
      previous = diff;
    }
    CHECK(previous < 1e-6);
  }
}

TEST_SUITE("eigen energies") {
  std::vector<double> fields_around_crossing() {
    const SpinParams p;
    const double bc = p.zero_field_splitting / p.gyromagnetic_ratio;
    std::vector<double> f = numerics::linspace(0.0, 0.2, 401);
    f.push_back(bc);
    std::sort(f.begin(), f.end());
    return f;
  }

  double min_gap(double theta, const std::vector<double>& fields) {
    const auto levels = eigen_energies_vs_field(SpinParams{}, theta, fields);
    double gap = std::numeric_limits<double>::infinity();
    for (const auto& l : levels) {
      std::array<double, 3> e = l.energies;
      std::sort(e.begin(), e.end());
      gap = std::min(gap, e[1] - e[0]);
    }
    return gap;
  }

  TEST_CASE("an axial field gives an exact crossing tracked through by label") {
    const auto f = fields_around_crossing();
    const auto levels = eigen_energies_vs_field(SpinParams{}, 0.0, f);
    CHECK(min_gap(0.0, f) <= 1e-12 * hbar * SpinParams{}.zero_field_splitting);
    const auto& last = levels.back();
    CHECK(last.energies[1] > last.energies[2]);
    CHECK(std::norm(last.vectors(1, 1)) == doctest::Approx(1.0));
    CHECK(std::norm(last.vectors(2, 2)) == doctest::Approx(1.0));
  }

  TEST_CASE("a tilted field opens a gap that grows with the angle") {
    const auto f = fields_around_crossing();
    double previous = 0.0;
    for (double theta : {0.01, 0.05, 0.1, 0.2}) {
      const double gap = min_gap(theta, f);
      CAPTURE(theta);
      CHECK(gap > previous);
      previous = gap;
    }
    CHECK(min_gap(0.2, f) > 0.0);
  }

  TEST_CASE("populations are attached to the tracked levels") {
    const auto levels = eigen_energies_vs_field(SpinParams{}, 0.0, std::vector<double>{0.05});
    const double sum = levels[0].populations[0] + levels[0].populations[1] + levels[0].populations[2];
    CHECK(sum == doctest::Approx(1.0));
    CHECK(levels[0].populations[1] > 0.9);
  }
}
