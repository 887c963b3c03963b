#pragma once

// Diamond orientation classes and frame bookkeeping.
//
// Crystal frame: cubic axes of the diamond lattice. The four NV classes point
// along (1,1,1), (1,-1,-1), (-1,1,-1), (-1,-1,1) / sqrt(3).

#include <array>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "nvlock/spin_core.hpp"

namespace nvlock {

inline constexpr int kNumClasses = 4;

/// Proper rotation taking crystal-frame vectors to the lab frame.
class CrystalOrientation {
 public:
  CrystalOrientation() = default;
  explicit CrystalOrientation(const Eigen::Quaterniond& q);

  /// z-y-z Euler angles (rad): R = Rz(alpha) Ry(beta) Rz(gamma).
  static CrystalOrientation from_euler_zyz(double alpha, double beta, double gamma);

  const Eigen::Matrix3d& matrix() const { return rotation_; }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation_); }

  Vector3 to_lab(const Vector3& v_crystal) const { return rotation_ * v_crystal; }
  Vector3 to_crystal(const Vector3& v_lab) const {
    return rotation_.transpose() * v_lab;
  }

  /// Unit NV axis of a class in the lab frame.
  Vector3 axis_lab(int class_index) const;

  /// The whole crystal rotated by `angle` about a lab-frame unit axis.
  CrystalOrientation rotated(const Vector3& axis_lab, double angle) const;

  double orthogonality_error() const;

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
};

/// Unit NV axis of a class in the crystal frame.
Vector3 nv_axis_crystal(int class_index);

/// Fixed transverse reference of a class: the projection of the next class's
/// axis onto the plane perpendicular to this one, normalised.
Vector3 transverse_reference_crystal(int class_index);

void require_class_index(int class_index);

/// Per-class frame. Rows of `to_nv` are the NV x, y, z axes in lab coordinates.
struct NvFrame {
  Eigen::Matrix3d to_nv = Eigen::Matrix3d::Identity();

  Vector3 from_lab(const Vector3& v_lab) const { return to_nv * v_lab; }
  Vector3 to_lab(const Vector3& v_nv) const { return to_nv.transpose() * v_nv; }
};

/// NV frame of a class for a given lab field: z on the NV axis, x along the
/// transverse part of the field (fixed reference when the field is axial).
NvFrame nv_frame(const CrystalOrientation& orientation, int class_index,
                 const FieldVector& b_lab);

FieldVector field_in_nv_frame(const CrystalOrientation& orientation, int class_index,
                              const FieldVector& b_lab);

FieldVector field_to_lab(const NvFrame& frame, const FieldVector& b_nv);

/// Direction of B relative to the tracked NV class. theta is the polar angle
/// from the tracked NV axis, phi the azimuth measured from that class's
/// transverse reference.
struct AngularState {
  double theta = 0.0;
  double phi = 0.0;
  double trap_theta0 = 0.0;

  /// Reduces to theta in [0, pi], phi in [0, 2 pi); phi = 0 at theta = 0 or pi.
  AngularState normalized() const;
};

/// Crystal attitude plus the class whose angle to the field is followed.
struct CrystalGeometry {
  CrystalOrientation orientation;
  int tracked_class = 0;
};

/// Orthonormal tracked-class basis in crystal coordinates: columns are the
/// transverse reference, its partner (axis x reference), and the axis.
Eigen::Matrix3d tracked_basis_crystal(int tracked_class);

/// Unit field direction in crystal coordinates for a given angular state.
/// Negative theta is allowed and equals (|theta|, phi + pi).
Vector3 field_direction_crystal(int tracked_class, double theta, double phi);

/// Generator of increasing theta at fixed phi (crystal coordinates).
Vector3 theta_generator_crystal(int tracked_class, double phi);

/// Generator of increasing phi (the tracked axis, crystal coordinates).
Vector3 phi_generator_crystal(int tracked_class);

/// Rigidly rotate the crystal by `dtheta` about `axis`, where the axis is
/// given in tracked-class coordinates (x = transverse reference, z = NV axis).
/// Rotating the crystal moves the field the opposite way in crystal
/// coordinates, which is what the returned angles describe.
AngularState rotate_about_axis(const AngularState& state, double dtheta,
                               const Vector3& axis);

}  // namespace nvlock
