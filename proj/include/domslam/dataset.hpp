#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "domslam/se3.hpp"

namespace domslam {

struct OdometryMeasurement {
  int from_step = 0;
  int to_step = 0;
  Pose measured;
  Matrix6 covariance = Matrix6::Identity();
};

/// A 3D point measured in the sensor frame of the robot at `step`.
struct PointObservation {
  int step = 0;
  int point_id = 0;
  Vector3 measured = Vector3::Zero();
  Matrix3 covariance = Matrix3::Identity();
};

/// Key of a per-timestep quantity: (point or object id, step).
using StepKey = std::pair<int, int>;

/// Measurements plus ground truth for one simulated (or recorded) run.
///
/// Point ids live in one namespace shared by static and dynamic points; a
/// point is dynamic iff it appears in `point_object`.
struct Dataset {
  std::vector<Pose> true_poses;                 // indexed by step
  std::map<int, Point3> true_static_points;     // point id -> position
  std::map<StepKey, Point3> true_dynamic_points;  // (point id, step) -> position
  std::map<int, int> point_object;              // dynamic point id -> object id
  std::map<StepKey, Pose> true_motions;         // (object id, step) -> H_k

  std::vector<OdometryMeasurement> odometry;
  std::vector<PointObservation> observations;
  Matrix3 motion_covariance = Matrix3::Identity();

  std::vector<std::string> warnings;

  bool is_dynamic(int point_id) const { return point_object.count(point_id) != 0; }
};

}  // namespace domslam
