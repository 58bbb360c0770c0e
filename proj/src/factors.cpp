#include <Eigen/Cholesky>

#include "domslam/errors.hpp"
#include "domslam/graph.hpp"

namespace domslam {

Vector6 odometry_residual(const Pose& prev, const Pose& cur, const Pose& measured) {
  return logmap(measured.inverse() * (prev.inverse() * cur));
}

Vector3 point_residual(const Pose& pose, const Point3& landmark, const Vector3& measured) {
  return pose.rotation().transpose() * (landmark - pose.translation()) - measured;
}

Vector3 motion_residual(const Point3& landmark_k, const Point3& landmark_k1, const Pose& motion) {
  const Matrix3 rt = motion.rotation().transpose();
  return rt * landmark_k1 - rt * motion.translation() - landmark_k;
}

Vector3 motion_residual(const Point3& landmark_k, const Point3& landmark_k1, const Twist& motion) {
  return motion_residual(landmark_k, landmark_k1, expmap(motion));
}

namespace {

struct Linearizer {
  const Estimates& values;

  FactorLinearization operator()(const OdometryFactor& f) const {
    const Pose& a = values.poses.at(f.from);
    const Pose& b = values.poses.at(f.to);
    const Vector6 r = odometry_residual(a, b, expmap(f.measured));
    const Matrix6 jr_inv = se3_right_jacobian_inverse(r);

    FactorLinearization out;
    out.residual = r;
    out.blocks.push_back({{VariableKind::kRobotPose, f.from}, -jr_inv * adjoint(b.inverse() * a)});
    out.blocks.push_back({{VariableKind::kRobotPose, f.to}, jr_inv});
    return out;
  }

  FactorLinearization operator()(const PointFactor& f) const {
    const Pose& x = values.poses.at(f.pose);
    const Point3& l = values.landmarks.at(f.landmark);
    const Matrix3 rt = x.rotation().transpose();
    const Vector3 local = rt * (l - x.translation());

    Eigen::Matrix<double, 3, 6> d_pose;
    d_pose << -Matrix3::Identity(), hat(local);

    FactorLinearization out;
    out.residual = local - f.measured;
    out.blocks.push_back({{VariableKind::kRobotPose, f.pose}, d_pose});
    out.blocks.push_back({{VariableKind::kLandmark, f.landmark}, rt});
    return out;
  }

  FactorLinearization operator()(const MotionFactor& f) const {
    const Point3& lk = values.landmarks.at(f.landmark_k);
    const Point3& lk1 = values.landmarks.at(f.landmark_k1);
    const Pose& h = values.motions.at(f.motion);
    const Matrix3 rt = h.rotation().transpose();
    const Vector3 moved_back = rt * (lk1 - h.translation());

    Eigen::Matrix<double, 3, 6> d_motion;
    d_motion << -Matrix3::Identity(), hat(moved_back);

    FactorLinearization out;
    out.residual = moved_back - lk;
    out.blocks.push_back({{VariableKind::kLandmark, f.landmark_k}, -Matrix3::Identity()});
    out.blocks.push_back({{VariableKind::kLandmark, f.landmark_k1}, rt});
    out.blocks.push_back({{VariableKind::kMotion, f.motion}, d_motion});
    return out;
  }
};

struct ResidualEvaluator {
  const Estimates& values;

  Eigen::VectorXd operator()(const OdometryFactor& f) const {
    return odometry_residual(values.poses.at(f.from), values.poses.at(f.to), expmap(f.measured));
  }
  Eigen::VectorXd operator()(const PointFactor& f) const {
    return point_residual(values.poses.at(f.pose), values.landmarks.at(f.landmark), f.measured);
  }
  Eigen::VectorXd operator()(const MotionFactor& f) const {
    return motion_residual(values.landmarks.at(f.landmark_k), values.landmarks.at(f.landmark_k1),
                           values.motions.at(f.motion));
  }
};

template <typename Matrix>
Eigen::MatrixXd upper_cholesky(const Matrix& information) {
  if (!information.isApprox(information.transpose(), 1e-12)) {
    throw GraphError("information matrix is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(information);
  if (llt.info() != Eigen::Success) {
    throw GraphError("information matrix is not positive definite");
  }
  return llt.matrixU();
}

}  // namespace

FactorLinearization factor_jacobians(const Factor& factor, const Estimates& values) {
  return std::visit(Linearizer{values}, factor);
}

Eigen::VectorXd factor_residual(const Factor& factor, const Estimates& values) {
  return std::visit(ResidualEvaluator{values}, factor);
}

Eigen::MatrixXd whitening(const Factor& factor) {
  return std::visit([](const auto& f) { return upper_cholesky(f.information); }, factor);
}

double total_cost(const FactorGraph& graph, const Estimates& values) {
  double cost = 0.0;
  for (const Factor& f : graph.factors()) {
    cost += 0.5 * (whitening(f) * factor_residual(f, values)).squaredNorm();
  }
  return cost;
}

}  // namespace domslam
