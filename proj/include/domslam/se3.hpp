#pragma once

#include <Eigen/Core>

namespace domslam {

using Vector3 = Eigen::Vector3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

/// A point in reference-frame coordinates (meters).
using Point3 = Eigen::Vector3d;

/// Element of se(3) stored as (rho, phi): translational part first, then the
/// rotation vector in radians.
using Twist = Vector6;

inline Vector3 twist_translation(const Twist& tau) { return tau.head<3>(); }
inline Vector3 twist_rotation(const Twist& tau) { return tau.tail<3>(); }
inline Twist make_twist(const Vector3& rho, const Vector3& phi) {
  Twist tau;
  tau << rho, phi;
  return tau;
}

/// Rigid-body transform. Acts on points as x -> R x + t.
class Pose {
 public:
  Pose() : rotation_(Matrix3::Identity()), translation_(Vector3::Zero()) {}
  Pose(const Matrix3& rotation, const Vector3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return Pose(); }
  static Pose from_translation(const Vector3& t) { return Pose(Matrix3::Identity(), t); }

  const Matrix3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }

  Pose inverse() const {
    const Matrix3 rt = rotation_.transpose();
    return Pose(rt, -rt * translation_);
  }

  Pose operator*(const Pose& other) const {
    return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
  }

  Point3 operator*(const Point3& x) const { return rotation_ * x + translation_; }

  Matrix4 matrix() const;

 private:
  Matrix3 rotation_;
  Vector3 translation_;
};

/// What logmap does when the rotation angle is pi.
enum class PiPolicy {
  kThrow,          // raise NonUniqueLogError
  kPickCanonical,  // return one of the two valid logarithms deterministically
};

/// Angles below this use Taylor expansions in exp/log.
inline constexpr double kSmallAngle = 1e-8;
/// Rotations closer than this to pi are treated as angle pi.
inline constexpr double kPiTolerance = 1e-10;

Matrix3 hat(const Vector3& v);
Vector3 vee(const Matrix3& m);

Matrix3 so3_exp(const Vector3& phi);
Vector3 so3_log(const Matrix3& rotation, PiPolicy policy = PiPolicy::kThrow);
/// Angle in [0, pi] of a rotation matrix.
double rotation_angle(const Matrix3& rotation);

Pose expmap(const Twist& tau);
Twist logmap(const Pose& pose, PiPolicy policy = PiPolicy::kThrow);

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }
inline Pose inverse(const Pose& p) { return p.inverse(); }
inline Point3 transform_point(const Pose& p, const Point3& x) { return p * x; }

/// Reference-frame pose change L * C * L^-1 of a body-fixed pose change C
/// taken from body pose L.
Pose frame_change(const Pose& body_pose, const Pose& body_motion);

/// Adjoint of a pose acting on (rho, phi) twists.
Matrix6 adjoint(const Pose& pose);

Matrix3 so3_left_jacobian(const Vector3& phi);
Matrix3 so3_left_jacobian_inverse(const Vector3& phi);
Matrix6 se3_left_jacobian(const Twist& tau);
/// Inverse of the right Jacobian of SE(3): d log(T exp(d)) / d d at d = 0,
/// evaluated at tau = log(T).
Matrix6 se3_right_jacobian_inverse(const Twist& tau);

/// Orthonormality residual ||R R^T - I||_F.
double orthonormality_error(const Matrix3& rotation);

}  // namespace domslam
