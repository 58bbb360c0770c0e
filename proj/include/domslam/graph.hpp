#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "domslam/dataset.hpp"
#include "domslam/se3.hpp"

namespace domslam {

enum class VariableKind { kRobotPose, kLandmark, kMotion };

/// Identifies a variable. Ids are unique within each kind.
struct VariableKey {
  VariableKind kind = VariableKind::kRobotPose;
  int id = 0;

  auto operator<=>(const VariableKey&) const = default;
};

std::string to_string(const VariableKey& key);
int tangent_dimension(VariableKind kind);

enum class MotionMode { kPerStep, kConstant };
enum class GraphMode { kWithDom, kWithoutDom };

struct LandmarkVertex {
  Point3 estimate = Point3::Zero();
  int point_id = 0;
  std::optional<int> object;  // set for points on a moving object
  std::optional<int> step;    // set for per-timestep instances

  bool dynamic() const { return object.has_value(); }
  bool operator==(const LandmarkVertex&) const = default;
};

/// Reference-frame pose change of one object, stored as a twist.
struct MotionVertex {
  Twist estimate = Twist::Zero();
  int object = 0;
  std::optional<int> step;  // empty in constant-motion mode

  bool operator==(const MotionVertex&) const = default;
};

struct OdometryFactor {
  int from = 0;
  int to = 0;
  Twist measured = Twist::Zero();
  Matrix6 information = Matrix6::Identity();

  bool operator==(const OdometryFactor&) const = default;
};

struct PointFactor {
  int pose = 0;
  int landmark = 0;
  Vector3 measured = Vector3::Zero();
  Matrix3 information = Matrix3::Identity();

  bool operator==(const PointFactor&) const = default;
};

/// Ternary factor tying the same physical point at steps k and k+1 through
/// the motion of its object.
struct MotionFactor {
  int landmark_k = 0;
  int landmark_k1 = 0;
  int motion = 0;
  Matrix3 information = Matrix3::Identity();

  bool operator==(const MotionFactor&) const = default;
};

using Factor = std::variant<OdometryFactor, PointFactor, MotionFactor>;

std::vector<VariableKey> factor_variables(const Factor& factor);

/// Current values of every variable, as group elements.
struct Estimates {
  std::map<int, Pose> poses;
  std::map<int, Point3> landmarks;
  std::map<int, Pose> motions;
};

/// Variables, factors and anchors of a SLAM problem with dynamic objects.
///
/// Pose and motion estimates are kept as twists so the graph can be written
/// and re-read without loss; `estimates()` converts them to group elements.
/// Factors may only reference variables that already exist, and a ternary
/// factor must link consecutive instances of one point on the motion's object.
class FactorGraph {
 public:
  void add_pose(int id, const Twist& estimate);
  void add_landmark(int id, const LandmarkVertex& vertex);
  void add_motion(int id, const MotionVertex& vertex);
  void add_factor(const Factor& factor);
  void fix_pose(int id);

  const std::map<int, Twist>& poses() const { return poses_; }
  const std::map<int, LandmarkVertex>& landmarks() const { return landmarks_; }
  const std::map<int, MotionVertex>& motions() const { return motions_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::set<int>& fixed_poses() const { return fixed_; }

  bool has(const VariableKey& key) const;
  std::size_t variable_count() const {
    return poses_.size() + landmarks_.size() + motions_.size();
  }
  std::size_t ternary_factor_count() const;
  MotionMode motion_mode() const;

  Estimates estimates() const;
  /// Overwrites the estimates of the variables present in `values`.
  void set_estimates(const Estimates& values);

  /// Checks graph-wide invariants (anchor present, one motion per object in
  /// constant mode). Throws GraphError.
  void validate() const;

  bool operator==(const FactorGraph&) const = default;

 private:
  std::map<int, Twist> poses_;
  std::map<int, LandmarkVertex> landmarks_;
  std::map<int, MotionVertex> motions_;
  std::vector<Factor> factors_;
  std::set<int> fixed_;
};

struct BuildOptions {
  GraphMode mode = GraphMode::kWithDom;
  MotionMode motion_mode = MotionMode::kConstant;
  /// Discard dynamic points entirely instead of keeping them as free landmarks.
  bool drop_dynamic = false;
};

/// Builds the factor graph of a dataset and its initial estimates: poses by
/// chaining odometry from the true first pose (which is anchored), landmarks
/// by back-projecting their first measurement, motions at identity.
FactorGraph build_graph(const Dataset& dataset, const BuildOptions& options = {});

/// The graph minus every motion variable and ternary factor.
FactorGraph without_dom(const FactorGraph& graph);
/// The graph minus dynamic landmarks and every factor touching them.
FactorGraph drop_dynamic(const FactorGraph& graph);
/// Replaces the motion variables with the given layout, rebuilding ternary
/// factors from the landmark metadata. Motions start at identity.
FactorGraph rebuild_motion(const FactorGraph& graph, MotionMode mode);

// Residuals. All are zero when the measurement is matched exactly.

/// log(o^-1 * (x_prev^-1 * x_cur)).
Vector6 odometry_residual(const Pose& prev, const Pose& cur, const Pose& measured);
/// Landmark in the sensor frame minus the measurement.
Vector3 point_residual(const Pose& pose, const Point3& landmark, const Vector3& measured);
/// R^T l_k1 - R^T t - l_k with (R, t) = exp(u).
Vector3 motion_residual(const Point3& landmark_k, const Point3& landmark_k1, const Twist& motion);
Vector3 motion_residual(const Point3& landmark_k, const Point3& landmark_k1, const Pose& motion);

struct JacobianBlock {
  VariableKey variable;
  Eigen::MatrixXd block;
};

/// Unwhitened residual and Jacobians of one factor. Poses and motions are
/// perturbed on the right (x * exp(d)), landmarks additively.
struct FactorLinearization {
  Eigen::VectorXd residual;
  std::vector<JacobianBlock> blocks;
};

FactorLinearization factor_jacobians(const Factor& factor, const Estimates& values);
Eigen::VectorXd factor_residual(const Factor& factor, const Estimates& values);
/// Upper-triangular W with W^T W = information. Throws GraphError if the
/// information matrix is not symmetric positive definite.
Eigen::MatrixXd whitening(const Factor& factor);

/// 1/2 sum of squared whitened residuals.
double total_cost(const FactorGraph& graph, const Estimates& values);

}  // namespace domslam
