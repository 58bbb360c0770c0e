#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>
#include <unsupported/Eigen/MatrixFunctions>

#include "domslam/errors.hpp"
#include "domslam/se3.hpp"
#include "test_util.hpp"

namespace domslam {
namespace {

using testing::random_pose;
using testing::random_twist;
using testing::random_vector;

constexpr double kPi = std::numbers::pi;

// Independent oracle: the matrix exponential of the 4x4 twist matrix.
Matrix4 exp_oracle(const Twist& tau) {
  Matrix4 m = Matrix4::Zero();
  const Vector3 w = twist_rotation(tau);
  m.block<3, 3>(0, 0) << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  m.block<3, 1>(0, 3) = twist_translation(tau);
  return m.exp();
}

Matrix3 axis_angle(const Vector3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

TEST(Exp, IdentityAndPureTranslation) {
  EXPECT_TRUE(expmap(Twist::Zero()).matrix().isApprox(Matrix4::Identity()));
  const Pose p = expmap(make_twist(Vector3(1, 2, 3), Vector3::Zero()));
  EXPECT_TRUE(p.rotation().isApprox(Matrix3::Identity()));
  EXPECT_TRUE(p.translation().isApprox(Vector3(1, 2, 3)));
}

TEST(Exp, QuarterTurnAboutZ) {
  const Pose p = expmap(make_twist(Vector3::Zero(), Vector3(0, 0, kPi / 2)));
  Matrix3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((p.rotation() - expected).norm(), 1e-15);
  EXPECT_LT((p.rotation() - axis_angle(Vector3::UnitZ(), kPi / 2)).norm(), 1e-15);
  EXPECT_LT(p.translation().norm(), 1e-15);
}

TEST(Exp, MatchesMatrixExponential) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Twist tau = random_twist(rng, 3.1, 5.0);
    EXPECT_LT((expmap(tau).matrix() - exp_oracle(tau)).norm(), 1e-12) << tau.transpose();
  }
}

TEST(Exp, TinyRotationsUseSeries) {
  for (double angle : {0.0, 1e-12, 1e-9, 1e-8, 2e-8, 1e-6, 1e-3}) {
    const Twist tau = make_twist(Vector3(0.3, -1.0, 2.0), Vector3(1, 2, -2).normalized() * angle);
    EXPECT_LT((expmap(tau).matrix() - exp_oracle(tau)).norm(), 1e-14) << angle;
    EXPECT_LT((logmap(expmap(tau)) - tau).norm(), 1e-14) << angle;
  }
}

TEST(Log, IdentityIsZero) { EXPECT_LT(logmap(Pose()).norm(), 1e-300); }

TEST(Log, RoundTripSeeded) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 1000; ++i) {
      const Twist tau = random_twist(rng, 3.0, 10.0);
      EXPECT_LT((logmap(expmap(tau)) - tau).norm(), 1e-9) << "seed " << seed;
    }
  }
}

TEST(Log, NearPiRecoversAxis) {
  std::mt19937_64 rng(21);
  for (double gap : {1e-3, 1e-5, 1e-7, 1e-9}) {
    for (int i = 0; i < 20; ++i) {
      const Vector3 axis = random_vector(rng, 1.0).normalized();
      const Pose p(axis_angle(axis, kPi - gap), random_vector(rng, 3.0));
      const Pose back = expmap(logmap(p));
      EXPECT_LT((back.matrix() - p.matrix()).norm(), 1e-9) << "gap " << gap;
    }
  }
}

TEST(Log, RotationByPiThrows) {
  const Pose p(axis_angle(Vector3::UnitZ(), kPi), Vector3::Zero());
  EXPECT_THROW(logmap(p), NonUniqueLogError);
}

TEST(Log, CanonicalPolicyAtPiIsAValidLogarithm) {
  for (const Vector3& axis : {Vector3(0, 0, 1), Vector3(1, 1, 0), Vector3(-1, 2, 3)}) {
    const Pose p(axis_angle(axis, kPi), Vector3(1, 2, 3));
    const Twist tau = logmap(p, PiPolicy::kPickCanonical);
    EXPECT_NEAR(twist_rotation(tau).norm(), kPi, 1e-12);
    EXPECT_LT((expmap(tau).matrix() - p.matrix()).norm(), 1e-12);
    // Deterministic choice.
    EXPECT_EQ(tau, logmap(p, PiPolicy::kPickCanonical));
  }
}

TEST(Compose, Examples) {
  std::mt19937_64 rng(2);
  const Pose p = random_pose(rng);
  EXPECT_TRUE((p * Pose()).matrix().isApprox(p.matrix()));
  EXPECT_LT(((p * p.inverse()).matrix() - Matrix4::Identity()).norm(), 1e-9);
  const Pose sum = compose(Pose::from_translation(Vector3(1, 2, 3)), Pose::from_translation(Vector3(-4, 0, 1)));
  EXPECT_TRUE(sum.translation().isApprox(Vector3(-3, 2, 4)));
  EXPECT_TRUE(sum.rotation().isApprox(Matrix3::Identity()));
}

TEST(Compose, MatchesHomogeneousProduct) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    EXPECT_LT(((a * b).matrix() - a.matrix() * b.matrix()).norm(), 1e-12);
  }
}

TEST(Inverse, Examples) {
  EXPECT_TRUE(inverse(Pose()).matrix().isApprox(Matrix4::Identity()));
  EXPECT_TRUE(inverse(Pose::from_translation(Vector3(1, -2, 3))).translation().isApprox(Vector3(-1, 2, -3)));
  std::mt19937_64 rng(8);
  const Pose p = random_pose(rng);
  EXPECT_LT((inverse(inverse(p)).matrix() - p.matrix()).norm(), 1e-9);
  EXPECT_LT((inverse(p).matrix() - p.matrix().inverse()).norm(), 1e-12);
}

TEST(TransformPoint, Examples) {
  EXPECT_TRUE(transform_point(Pose(), Vector3(1, 2, 3)).isApprox(Vector3(1, 2, 3)));
  EXPECT_TRUE(transform_point(Pose::from_translation(Vector3(1, 0, 0)), Vector3(2, 0, 0)).isApprox(Vector3(3, 0, 0)));
  const Pose r(axis_angle(Vector3::UnitZ(), kPi / 2), Vector3::Zero());
  EXPECT_LT((transform_point(r, Vector3(1, 0, 0)) - Vector3(0, 1, 0)).norm(), 1e-12);
}

TEST(FrameChange, Examples) {
  std::mt19937_64 rng(9);
  const Pose c = random_pose(rng);
  const Pose l = random_pose(rng);
  EXPECT_LT((frame_change(Pose(), c).matrix() - c.matrix()).norm(), 1e-15);
  EXPECT_LT((frame_change(l, Pose()).matrix() - Matrix4::Identity()).norm(), 1e-12);
}

TEST(FrameChange, MovesReferencePointsLikeTheBody) {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 200; ++i) {
    const Pose l = random_pose(rng);
    const Pose c = random_pose(rng);
    const Point3 body = random_vector(rng, 3.0);
    // Point in the reference frame before and after the body moves by c.
    const Point3 before = l * body;
    const Point3 after = (l * c) * body;
    EXPECT_LT((transform_point(frame_change(l, c), before) - after).norm(), 1e-9);
    const Matrix4 chain = l.matrix() * c.matrix() * l.matrix().inverse();
    EXPECT_LT((transform_point(frame_change(l, c), before) - (chain * before.homogeneous()).head<3>()).norm(), 1e-9);
  }
}

TEST(FrameChange, ConstantBodyMotionGivesConstantReferenceMotion) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Pose l = random_pose(rng);
    const Pose c = random_pose(rng, 0.5, 1.0);
    const Pose h0 = frame_change(l, c);
    for (int k = 0; k < 10; ++k) {
      l = l * c;
      EXPECT_LT((frame_change(l, c).matrix() - h0.matrix()).norm(), 1e-9);
    }
  }
}

TEST(Rotation, OrthonormalityAfterManyCompositions) {
  std::mt19937_64 rng(13);
  Pose p;
  for (int i = 0; i < 10000; ++i) p = p * random_pose(rng);
  EXPECT_LT(orthonormality_error(p.rotation()), 1e-7);
  EXPECT_NEAR(p.rotation().determinant(), 1.0, 1e-7);
}

TEST(Jacobians, RightJacobianInverseMatchesDifferences) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 50; ++i) {
    const Twist tau = random_twist(rng, 2.5, 3.0);
    const Pose t = expmap(tau);
    Matrix6 numeric;
    const double h = 1e-6;
    for (int j = 0; j < 6; ++j) {
      numeric.col(j) = (logmap(t * expmap(Twist::Unit(j) * h)) - logmap(t * expmap(-Twist::Unit(j) * h))) / (2 * h);
    }
    EXPECT_LT((se3_right_jacobian_inverse(tau) - numeric).norm(), 1e-6);
  }
}

TEST(Jacobians, SmallAngleSeriesAreContinuous) {
  for (double angle : {1e-9, 1e-4, 9e-3, 1.1e-2}) {
    const Twist tau = make_twist(Vector3(1, -2, 0.5), Vector3(0.3, 0.4, -1).normalized() * angle);
    const Matrix6 jl = se3_left_jacobian(tau);
    const Matrix6 jr_inv = se3_right_jacobian_inverse(tau);
    // J_r(tau) = J_l(-tau).
    EXPECT_LT((se3_left_jacobian(-tau) * jr_inv - Matrix6::Identity()).norm(), 1e-12) << angle;
    EXPECT_LT((jl - se3_left_jacobian(tau)).norm(), 1e-15);
  }
}

TEST(Adjoint, TransportsTwists) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 20; ++i) {
    const Pose p = random_pose(rng);
    const Twist tau = random_twist(rng, 1.0, 1.0);
    EXPECT_LT(((p * expmap(tau) * p.inverse()).matrix() - expmap(adjoint(p) * tau).matrix()).norm(), 1e-9);
  }
}

}  // namespace
}  // namespace domslam
