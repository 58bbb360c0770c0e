#include "domslam/se3.hpp"

#include <cmath>
#include <numbers>

#include "domslam/errors.hpp"

namespace domslam {

namespace {

// Below this angle the Jacobian coefficients, which divide by theta^4 and
// theta^5, switch to their series expansions.
constexpr double kSeriesAngle = 1e-2;

// sin(theta)/theta and (1 - cos(theta))/theta^2.
void rodrigues_coefficients(double theta, double* a, double* b) {
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    *a = 1.0 - t2 / 6.0;
    *b = 0.5 - t2 / 24.0;
    return;
  }
  const double half = std::sin(0.5 * theta) / theta;
  *a = std::sin(theta) / theta;
  *b = 2.0 * half * half;
}

// (theta - sin(theta)) / theta^3
double third_coefficient(double theta) {
  if (theta < kSeriesAngle) {
    const double t2 = theta * theta;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  }
  return (theta - std::sin(theta)) / (theta * theta * theta);
}

// (1 - A / (2B)) / theta^2, the phi^2 coefficient of the inverse left Jacobian.
double inverse_jacobian_coefficient(double theta) {
  if (theta < kSeriesAngle) {
    const double t2 = theta * theta;
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  }
  const double half = 0.5 * theta;
  return (1.0 - half * std::cos(half) / std::sin(half)) / (theta * theta);
}

}  // namespace

Matrix4 Pose::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Matrix3 hat(const Vector3& v) {
  Matrix3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vector3 vee(const Matrix3& m) { return Vector3(m(2, 1), m(0, 2), m(1, 0)); }

Matrix3 so3_exp(const Vector3& phi) {
  const double theta = phi.norm();
  double a = 0.0;
  double b = 0.0;
  rodrigues_coefficients(theta, &a, &b);
  const Matrix3 k = hat(phi);
  return Matrix3::Identity() + a * k + b * k * k;
}

double rotation_angle(const Matrix3& rotation) {
  const double c = 0.5 * (rotation.trace() - 1.0);
  const double s = 0.5 * vee(rotation - rotation.transpose()).norm();
  return std::atan2(s, c);
}

Vector3 so3_log(const Matrix3& rotation, PiPolicy policy) {
  const Vector3 sin_axis = 0.5 * vee(rotation - rotation.transpose());
  const double s = sin_axis.norm();
  const double c = 0.5 * (rotation.trace() - 1.0);
  const double theta = std::atan2(s, c);

  if (theta < kSmallAngle) {
    return (1.0 + theta * theta / 6.0) * sin_axis;
  }
  if (std::numbers::pi - theta < kPiTolerance && policy == PiPolicy::kThrow) {
    throw NonUniqueLogError("rotation angle is pi; logarithm is not unique");
  }
  if (std::numbers::pi - theta < 1e-6) {
    // The antisymmetric part vanishes near pi; recover the axis from the
    // symmetric part, (R + R^T)/2 = cos(theta) I + (1 - cos(theta)) a a^T.
    const Matrix3 outer =
        (0.5 * (rotation + rotation.transpose()) - c * Matrix3::Identity()) / (1.0 - c);
    Eigen::Index k = 0;
    outer.diagonal().maxCoeff(&k);
    Vector3 axis = outer.col(k) / std::sqrt(outer(k, k));
    axis.normalize();
    if (s > 0.0 && axis.dot(sin_axis) < 0.0) {
      axis = -axis;
    } else if (s == 0.0) {
      Eigen::Index largest = 0;
      axis.cwiseAbs().maxCoeff(&largest);
      if (axis(largest) < 0.0) axis = -axis;
    }
    return theta * axis;
  }
  return (theta / s) * sin_axis;
}

Matrix3 so3_left_jacobian(const Vector3& phi) {
  const double theta = phi.norm();
  double a = 0.0;
  double b = 0.0;
  rodrigues_coefficients(theta, &a, &b);
  const Matrix3 k = hat(phi);
  return Matrix3::Identity() + b * k + third_coefficient(theta) * k * k;
}

Matrix3 so3_left_jacobian_inverse(const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 k = hat(phi);
  return Matrix3::Identity() - 0.5 * k + inverse_jacobian_coefficient(theta) * k * k;
}

Pose expmap(const Twist& tau) {
  const Vector3 phi = twist_rotation(tau);
  return Pose(so3_exp(phi), so3_left_jacobian(phi) * twist_translation(tau));
}

Twist logmap(const Pose& pose, PiPolicy policy) {
  const Vector3 phi = so3_log(pose.rotation(), policy);
  return make_twist(so3_left_jacobian_inverse(phi) * pose.translation(), phi);
}

Pose frame_change(const Pose& body_pose, const Pose& body_motion) {
  return body_pose * body_motion * body_pose.inverse();
}

Matrix6 adjoint(const Pose& pose) {
  Matrix6 ad = Matrix6::Zero();
  const Matrix3& r = pose.rotation();
  ad.topLeftCorner<3, 3>() = r;
  ad.topRightCorner<3, 3>() = hat(pose.translation()) * r;
  ad.bottomRightCorner<3, 3>() = r;
  return ad;
}

Matrix6 se3_left_jacobian(const Twist& tau) {
  const Vector3 rho = twist_translation(tau);
  const Vector3 phi = twist_rotation(tau);
  const double theta = phi.norm();
  const Matrix3 p = hat(phi);
  const Matrix3 r = hat(rho);

  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  if (theta < kSeriesAngle) {
    const double t2 = theta * theta;
    c1 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    c2 = 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
    c3 = 1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0;
  } else {
    const double t2 = theta * theta;
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    c1 = (theta - s) / (t2 * theta);
    c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2);
    c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t2 * theta);
  }
  const Matrix3 pr = p * r;
  const Matrix3 rp = r * p;
  const Matrix3 prp = pr * p;
  const Matrix3 q = 0.5 * r + c1 * (pr + rp + prp) + c2 * (p * pr + rp * p - 3.0 * prp) +
                    c3 * (prp * p + p * prp);

  Matrix6 j = Matrix6::Zero();
  const Matrix3 jl = so3_left_jacobian(phi);
  j.topLeftCorner<3, 3>() = jl;
  j.topRightCorner<3, 3>() = q;
  j.bottomRightCorner<3, 3>() = jl;
  return j;
}

Matrix6 se3_right_jacobian_inverse(const Twist& tau) {
  // J_r(tau) = J_l(-tau); invert the block upper-triangular form directly.
  const Matrix6 jl = se3_left_jacobian(-tau);
  const Matrix3 inv = so3_left_jacobian_inverse(-twist_rotation(tau));
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = inv;
  out.topRightCorner<3, 3>() = -inv * jl.topRightCorner<3, 3>() * inv;
  out.bottomRightCorner<3, 3>() = inv;
  return out;
}

double orthonormality_error(const Matrix3& rotation) {
  return (rotation * rotation.transpose() - Matrix3::Identity()).norm();
}

}  // namespace domslam
