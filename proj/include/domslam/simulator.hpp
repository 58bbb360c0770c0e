#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "domslam/dataset.hpp"
#include "domslam/se3.hpp"

namespace domslam {

enum class Experiment { kA, kB, kC, kD, kE };

std::string to_string(Experiment experiment);
/// Accepts "A".."E" (case-insensitive). Throws ConfigError otherwise.
Experiment parse_experiment(const std::string& name);

enum class TrajectoryKind { kCircle, kEllipse, kLine, kRectangle, kSine };

std::string to_string(TrajectoryKind kind);

/// One rigid object. Circle, ellipse and line objects move with a constant
/// body-fixed pose change; rectangle and sine objects follow a waypoint path
/// at constant speed with their x axis along the direction of travel.
struct ObjectSpec {
  TrajectoryKind kind = TrajectoryKind::kCircle;
  Pose initial_pose;                 // object pose at step 0
  Pose body_motion;                  // constant body-fixed pose change
  std::vector<Point3> waypoints;     // reference-frame path
  bool closed_path = false;          // the path returns to its first waypoint
  double speed = 0.2;                // meters per step along the path
  double heading_window = 1.0;       // half chord length (m) used for the heading
  int points = 8;
  Vector3 extent = Vector3(2.0, 1.5, 1.0);  // box edge lengths in the body frame
};

struct ScenarioSpec {
  Experiment experiment = Experiment::kB;
  int steps = 80;                    // pose changes; there are steps + 1 poses
  double robot_radius = 15.0;
  double robot_step_angle = 0.08;    // yaw change per step (rad)
  double robot_height = 0.0;
  std::vector<ObjectSpec> objects;
  int static_points = 0;
  Vector3 static_min = Vector3(-25.0, -25.0, -2.0);
  Vector3 static_max = Vector3(25.0, 25.0, 6.0);
  double sensor_range = 40.0;
  Matrix6 odometry_covariance = Matrix6::Identity();
  Matrix3 point_covariance = Matrix3::Identity();
  Matrix3 motion_covariance = Matrix3::Identity();
  /// Multiplies every injected noise sample; 0 gives exact measurements
  /// that still carry the covariances above.
  double noise_scale = 1.0;
  std::uint64_t seed = 1;

  /// Throws ConfigError on steps < 1, empty objects, point counts < 1 or
  /// non-SPD covariances.
  void validate() const;
};

/// Default odometry covariance: 0.4 m and 6 degrees standard deviation.
Matrix6 default_odometry_covariance();
Matrix3 default_point_covariance();   // 0.4 m
Matrix3 default_motion_covariance();  // 0.05 m

/// Steps of the twelve experiment-A runs; 17 points per run give 17 * steps
/// ternary factors, from 34 to 6715.
const std::vector<int>& experiment_a_steps();
constexpr int kExperimentAPoints = 17;

struct DefaultSpecOptions {
  int size = 12;               // experiment A only, 1-based index into experiment_a_steps()
  bool static_points = false;  // experiments B-E only
  std::uint64_t seed = 1;
};

ScenarioSpec default_spec(Experiment experiment, const DefaultSpecOptions& options = {});

/// Range-only sensor model. An infinite range sees everything.
bool visibility(const Pose& pose, const Point3& point, double range);

/// Simulates the scenario. Deterministic in the spec, including the seed.
Dataset generate(const ScenarioSpec& spec);

/// Applies "key = value" overrides from a text file ('#' starts a comment).
/// Unknown keys and malformed values throw ConfigError.
void apply_spec_file(const std::filesystem::path& path, ScenarioSpec& spec);
void apply_spec_override(const std::string& key, const std::string& value, ScenarioSpec& spec);

/// Object pose at every step, as simulated.
std::vector<Pose> object_trajectory(const ObjectSpec& object, int steps);

}  // namespace domslam
