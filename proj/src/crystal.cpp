#include "nvlock/crystal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nvlock/errors.hpp"

namespace nvlock {

namespace {

constexpr double kAxialTolerance = 1e-14;

}  // namespace

CrystalOrientation::CrystalOrientation(const Eigen::Quaterniond& q)
    : rotation_(q.normalized().toRotationMatrix()) {}

CrystalOrientation CrystalOrientation::from_euler_zyz(double alpha, double beta,
                                                      double gamma) {
  const Eigen::Quaterniond q = Eigen::AngleAxisd(alpha, Vector3::UnitZ()) *
                               Eigen::AngleAxisd(beta, Vector3::UnitY()) *
                               Eigen::AngleAxisd(gamma, Vector3::UnitZ());
  return CrystalOrientation(q);
}

Vector3 CrystalOrientation::axis_lab(int class_index) const {
  return rotation_ * nv_axis_crystal(class_index);
}

CrystalOrientation CrystalOrientation::rotated(const Vector3& axis_lab,
                                               double angle) const {
  if (std::abs(axis_lab.norm() - 1.0) > 1e-9) {
    throw ValidationError("CrystalOrientation::rotated: axis must be a unit vector");
  }
  CrystalOrientation out;
  out.rotation_ = Eigen::AngleAxisd(angle, axis_lab).toRotationMatrix() * rotation_;
  return out;
}

double CrystalOrientation::orthogonality_error() const {
  const double ortho =
      (rotation_ * rotation_.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(rotation_.determinant() - 1.0));
}

void require_class_index(int class_index) {
  if (class_index < 0 || class_index >= kNumClasses) {
    throw ValidationError("NV class index must be in 0..3, got " +
                          std::to_string(class_index));
  }
}

Vector3 nv_axis_crystal(int class_index) {
  require_class_index(class_index);
  static const std::array<Vector3, kNumClasses> axes = {
      Vector3(1, 1, 1).normalized(), Vector3(1, -1, -1).normalized(),
      Vector3(-1, 1, -1).normalized(), Vector3(-1, -1, 1).normalized()};
  return axes[class_index];
}

Vector3 transverse_reference_crystal(int class_index) {
  const Vector3 a = nv_axis_crystal(class_index);
  const Vector3 other = nv_axis_crystal((class_index + 1) % kNumClasses);
  return (other - other.dot(a) * a).normalized();
}

NvFrame nv_frame(const CrystalOrientation& orientation, int class_index,
                 const FieldVector& b_lab) {
  require_frame(b_lab, Frame::Lab, "nv_frame");
  const Vector3 z = orientation.axis_lab(class_index);
  Vector3 transverse = b_lab.tesla - b_lab.tesla.dot(z) * z;
  if (transverse.norm() <= kAxialTolerance * std::max(1.0, b_lab.tesla.norm())) {
    transverse = orientation.to_lab(transverse_reference_crystal(class_index));
  }
  const Vector3 x = transverse.normalized();
  const Vector3 y = z.cross(x);
  NvFrame frame;
  frame.to_nv.row(0) = x.transpose();
  frame.to_nv.row(1) = y.transpose();
  frame.to_nv.row(2) = z.transpose();
  return frame;
}

FieldVector field_in_nv_frame(const CrystalOrientation& orientation, int class_index,
                              const FieldVector& b_lab) {
  const NvFrame frame = nv_frame(orientation, class_index, b_lab);
  return {frame.from_lab(b_lab.tesla), Frame::Nv};
}

FieldVector field_to_lab(const NvFrame& frame, const FieldVector& b_nv) {
  require_frame(b_nv, Frame::Nv, "field_to_lab");
  return {frame.to_lab(b_nv.tesla), Frame::Lab};
}

AngularState AngularState::normalized() const {
  AngularState out = *this;
  const Vector3 d(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                  std::cos(theta));
  out.theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
  const double rho = std::hypot(d.x(), d.y());
  if (rho <= 1e-15) {
    out.phi = 0.0;
    return out;
  }
  double p = std::atan2(d.y(), d.x());
  if (p < 0.0) p += constants::two_pi;
  if (p >= constants::two_pi) p -= constants::two_pi;
  out.phi = p;
  return out;
}

Eigen::Matrix3d tracked_basis_crystal(int tracked_class) {
  const Vector3 a = nv_axis_crystal(tracked_class);
  const Vector3 x = transverse_reference_crystal(tracked_class);
  Eigen::Matrix3d basis;
  basis.col(0) = x;
  basis.col(1) = a.cross(x);
  basis.col(2) = a;
  return basis;
}

Vector3 field_direction_crystal(int tracked_class, double theta, double phi) {
  const Eigen::Matrix3d basis = tracked_basis_crystal(tracked_class);
  const Vector3 local(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi),
                      std::cos(theta));
  return basis * local;
}

Vector3 theta_generator_crystal(int tracked_class, double phi) {
  const Eigen::Matrix3d basis = tracked_basis_crystal(tracked_class);
  return basis * Vector3(-std::sin(phi), std::cos(phi), 0.0);
}

Vector3 phi_generator_crystal(int tracked_class) {
  return nv_axis_crystal(tracked_class);
}

AngularState rotate_about_axis(const AngularState& state, double dtheta,
                               const Vector3& axis) {
  if (!axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-9) {
    throw ValidationError("rotate_about_axis: axis must be a unit vector");
  }
  const Vector3 d(std::sin(state.theta) * std::cos(state.phi),
                  std::sin(state.theta) * std::sin(state.phi), std::cos(state.theta));
  const Vector3 moved = Eigen::AngleAxisd(-dtheta, axis) * d;
  AngularState out = state;
  out.theta = std::acos(std::clamp(moved.z(), -1.0, 1.0));
  const double rho = std::hypot(moved.x(), moved.y());
  if (rho <= 1e-15) {
    out.phi = 0.0;
  } else {
    double p = std::atan2(moved.y(), moved.x());
    if (p < 0.0) p += constants::two_pi;
    out.phi = p >= constants::two_pi ? p - constants::two_pi : p;
  }
  return out;
}

}  // namespace nvlock
