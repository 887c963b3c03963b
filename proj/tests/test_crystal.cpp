#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "nvlock/crystal.hpp"
#include "nvlock/errors.hpp"
#include "support/generators.hpp"

using namespace nvlock;
using constants::pi;

namespace {

double max_axis_error(const CrystalOrientation& a, const CrystalOrientation& b) {
  double e = 0.0;
  for (int c = 0; c < kNumClasses; ++c) e = std::max(e, (a.axis_lab(c) - b.axis_lab(c)).norm());
  return e;
}

// True when every vector in `moved` matches one of the four NV axes.
bool is_axis_set(const std::vector<Vector3>& moved) {
  for (const Vector3& v : moved) {
    bool found = false;
    for (int c = 0; c < kNumClasses; ++c) found = found || (v - nv_axis_crystal(c)).norm() < 1e-12;
    if (!found) return false;
  }
  return true;
}

CrystalOrientation random_orientation(nvtest::Gen& gen) {
  return CrystalOrientation::from_euler_zyz(gen.uniform(-pi, pi), gen.uniform(0, pi),
                                            gen.uniform(-pi, pi));
}

}  // namespace

TEST_CASE("rotations are proper and orthogonal") {
  nvtest::Gen gen(3);
  for (int i = 0; i < 100; ++i) {
    const CrystalOrientation o = random_orientation(gen);
    CHECK(o.orthogonality_error() <= 1e-12);
    CHECK(o.matrix().determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
  const Eigen::Quaterniond q(0.3, -0.2, 0.9, 0.1);
  const CrystalOrientation o(q.normalized());
  CHECK(o.orthogonality_error() <= 1e-12);
}

TEST_CASE("any two NV axes are 109.47 degrees apart") {
  for (int a = 0; a < kNumClasses; ++a) {
    CHECK(nv_axis_crystal(a).norm() == doctest::Approx(1.0));
    for (int b = a + 1; b < kNumClasses; ++b) {
      const double angle = std::acos(nv_axis_crystal(a).dot(nv_axis_crystal(b)));
      CHECK(angle == doctest::Approx(std::acos(-1.0 / 3.0)).epsilon(1e-12));
      CHECK(angle / constants::deg == doctest::Approx(109.47).epsilon(1e-4));
    }
  }
}

TEST_CASE("a field along (1,1,1) is axial for class 0") {
  const CrystalOrientation o;
  const FieldVector b = FieldVector::lab(0.1 * Vector3(1, 1, 1).normalized());
  const FieldVector b0 = field_in_nv_frame(o, 0, b);
  CHECK(b0.frame == Frame::Nv);
  CHECK(b0.tesla.x() == doctest::Approx(0.0));
  CHECK(b0.tesla.y() == doctest::Approx(0.0));
  CHECK(b0.tesla.z() == doctest::Approx(0.1));

  const FieldVector b1 = field_in_nv_frame(o, 1, b);
  CHECK(b1.tesla.z() == doctest::Approx(-0.1 / 3.0).epsilon(1e-12));
  CHECK(b1.tesla.norm() == doctest::Approx(0.1));
  CHECK(b1.tesla.y() == doctest::Approx(0.0));
  CHECK(b1.tesla.x() > 0.0);
}

TEST_CASE("lab to NV to lab is the identity") {
  nvtest::Gen gen(7);
  for (int i = 0; i < 200; ++i) {
    const CrystalOrientation o = random_orientation(gen);
    const int c = gen.integer(0, 3);
    const FieldVector b = FieldVector::lab(gen.field(0.3));
    const NvFrame f = nv_frame(o, c, b);
    const FieldVector back = field_to_lab(f, field_in_nv_frame(o, c, b));
    CHECK(back.frame == Frame::Lab);
    CHECK((back.tesla - b.tesla).norm() <= 1e-12 * std::max(1.0, b.tesla.norm()));
  }
}

TEST_CASE("an axial field uses the fixed transverse reference") {
  const CrystalOrientation o;
  const FieldVector b = FieldVector::lab(0.2 * nv_axis_crystal(2));
  const NvFrame f = nv_frame(o, 2, b);
  CHECK((f.to_nv.row(0).transpose() - transverse_reference_crystal(2)).norm() < 1e-12);
  CHECK(std::abs(transverse_reference_crystal(2).dot(nv_axis_crystal(2))) < 1e-15);
}

TEST_CASE("frame tags and class indices are checked") {
  const CrystalOrientation o;
  CHECK_THROWS_AS(field_in_nv_frame(o, 0, FieldVector::nv(0, 0, 1)), ValidationError);
  CHECK_THROWS_AS(field_in_nv_frame(o, 4, FieldVector::lab(Vector3(0, 0, 1))), ValidationError);
  CHECK_THROWS_AS(nv_axis_crystal(-1), ValidationError);
}

TEST_CASE("a full turn about any axis leaves the NV axes in place") {
  nvtest::Gen gen(17);
  for (int i = 0; i < 50; ++i) {
    const CrystalOrientation o = random_orientation(gen);
    const Vector3 axis = gen.unit_vector();
    CHECK(max_axis_error(o, o.rotated(axis, 2.0 * pi)) <= 1e-12);
    CHECK(max_axis_error(o, o.rotated(axis, 0.7).rotated(axis, -0.7)) <= 1e-12);
  }
}

TEST_CASE("the axis set is invariant under the tetrahedral rotations") {
  // Generators: threefold turn about (1,1,1) and twofold turn about x.
  Eigen::Matrix3d c3;
  c3 << 0, 0, 1, 1, 0, 0, 0, 1, 0;
  const Eigen::Matrix3d c2 = Eigen::Vector3d(1, -1, -1).asDiagonal();
  std::vector<Eigen::Matrix3d> group{Eigen::Matrix3d::Identity()};
  for (std::size_t k = 0; k < group.size() && group.size() < 64; ++k) {
    for (const Eigen::Matrix3d& g : {c3, c2}) {
      const Eigen::Matrix3d m = g * group[k];
      bool seen = false;
      for (const auto& h : group) seen = seen || (h - m).norm() < 1e-12;
      if (!seen) group.push_back(m);
    }
  }
  CHECK(group.size() == 12);
  for (const auto& g : group) {
    std::vector<Vector3> moved;
    for (int c = 0; c < kNumClasses; ++c) moved.push_back(g * nv_axis_crystal(c));
    CHECK(is_axis_set(moved));
  }
}

TEST_CASE("angular states normalise into theta in [0, pi], phi in [0, 2 pi)") {
  nvtest::Gen gen(23);
  for (int i = 0; i < 200; ++i) {
    const AngularState s{gen.uniform(-7, 7), gen.uniform(-20, 20), 0.1};
    const AngularState n = s.normalized();
    CHECK(n.theta >= 0.0);
    CHECK(n.theta <= pi);
    CHECK(n.phi >= 0.0);
    CHECK(n.phi < 2.0 * pi);
    CHECK(n.trap_theta0 == s.trap_theta0);
    const Vector3 a = field_direction_crystal(0, s.theta, s.phi);
    const Vector3 b = field_direction_crystal(0, n.theta, n.phi);
    CHECK((a - b).norm() < 1e-12);
  }
  CHECK(AngularState{0.0, 1.3, 0.0}.normalized().phi == 0.0);
}

TEST_SUITE("rotate_about_axis") {
  TEST_CASE("rotating forth and back is the identity") {
    const AngularState s{0.3, 1.1, 0.0};
    const Vector3 axis = Vector3(0.2, -0.5, 0.7).normalized();
    const AngularState r = rotate_about_axis(rotate_about_axis(s, 0.4, axis), -0.4, axis);
    CHECK((field_direction_crystal(0, r.theta, r.phi) -
           field_direction_crystal(0, s.theta, s.phi)).norm() < 1e-12);
  }

  TEST_CASE("two turns about one axis compose into one") {
    const AngularState s{0.8, 4.0, 0.0};
    const Vector3 axis = Vector3(1, 1, 0).normalized();
    const AngularState a = rotate_about_axis(rotate_about_axis(s, 0.25, axis), 0.5, axis);
    const AngularState b = rotate_about_axis(s, 0.75, axis);
    CHECK((field_direction_crystal(0, a.theta, a.phi) -
           field_direction_crystal(0, b.theta, b.phi)).norm() < 1e-12);
  }

  TEST_CASE("a turn about the tracked axis only shifts phi and rigidly moves all classes") {
    const AngularState s{0.5, 0.2, 0.0};
    const AngularState r = rotate_about_axis(s, 0.3, Vector3::UnitZ());
    CHECK(r.theta == doctest::Approx(s.theta));
    // The crystal turns by +0.3, so the field drifts by -0.3 in crystal terms.
    CHECK(r.phi == doctest::Approx(s.phi - 0.3 + 2.0 * pi * (s.phi - 0.3 < 0)));
    const Vector3 b = field_direction_crystal(0, s.theta, s.phi);
    const Vector3 br = field_direction_crystal(0, r.theta, r.phi);
    for (int c = 1; c < kNumClasses; ++c) {
      // Angles to every class change, but consistently with one rigid rotation.
      const Eigen::Matrix3d basis = tracked_basis_crystal(0);
      const Eigen::Matrix3d rot =
          basis * Eigen::AngleAxisd(0.3, Vector3::UnitZ()).toRotationMatrix() * basis.transpose();
      CHECK(br.dot(nv_axis_crystal(c)) == doctest::Approx(b.dot(rot * nv_axis_crystal(c))));
    }
  }

  TEST_CASE("non-unit axes are rejected") {
    CHECK_THROWS_AS(rotate_about_axis(AngularState{}, 0.1, Vector3(0, 0, 2)), ValidationError);
    CHECK_THROWS_AS(rotate_about_axis(AngularState{}, 0.1, Vector3::Zero()), ValidationError);
  }
}
