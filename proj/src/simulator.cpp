#include "domslam/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Geometry>

#include "domslam/errors.hpp"

namespace domslam {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

Matrix3 rot_x(double angle) { return so3_exp(Vector3(angle, 0.0, 0.0)); }
Matrix3 rot_z(double angle) { return so3_exp(Vector3(0.0, 0.0, angle)); }

/// Body-fixed pose change of an object driving a circle of the given radius
/// in its own x-y plane, turning `angle` per step.
Pose circle_step(double radius, double angle) {
  return Pose(rot_z(angle), Vector3(radius * std::sin(angle), radius * (1.0 - std::cos(angle)), 0.0));
}

bool is_spd(const Eigen::MatrixXd& m) {
  if (!m.allFinite() || !m.isApprox(m.transpose(), 1e-12)) return false;
  return Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success;
}

/// Piecewise-linear path parameterized by arc length.
class Path {
 public:
  Path(std::vector<Point3> points, bool closed) : points_(std::move(points)), closed_(closed) {
    if (closed_) points_.push_back(points_.front());
    lengths_.push_back(0.0);
    for (std::size_t i = 1; i < points_.size(); ++i) {
      lengths_.push_back(lengths_.back() + (points_[i] - points_[i - 1]).norm());
    }
  }

  double length() const { return lengths_.back(); }

  Point3 at(double s) const {
    if (closed_) {
      s = std::fmod(s, length());
      if (s < 0.0) s += length();
    } else {
      s = std::clamp(s, 0.0, length());
    }
    const auto it = std::upper_bound(lengths_.begin(), lengths_.end(), s);
    const std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - lengths_.begin(), 1),
                                                points_.size() - 1);
    const double span = lengths_[i] - lengths_[i - 1];
    const double u = span > 0.0 ? (s - lengths_[i - 1]) / span : 0.0;
    return points_[i - 1] + u * (points_[i] - points_[i - 1]);
  }

 private:
  std::vector<Point3> points_;
  std::vector<double> lengths_;
  bool closed_;
};

/// Rotation whose x axis is `direction` and whose z axis is as close to
/// vertical as possible.
Matrix3 heading_rotation(const Vector3& direction) {
  const Vector3 x = direction.normalized();
  Vector3 z = Vector3::UnitZ() - x.z() * x;
  if (z.norm() < 1e-9) z = Vector3::UnitX() - x.x() * x;
  z.normalize();
  Matrix3 r;
  r.col(0) = x;
  r.col(1) = z.cross(x);
  r.col(2) = z;
  return r;
}

/// Uniform sample on the surface of an axis-aligned box centered at the
/// origin.
Point3 sample_box_surface(const Vector3& extent, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ax = extent.y() * extent.z();
  const double ay = extent.x() * extent.z();
  const double az = extent.x() * extent.y();
  const double pick = unit(rng) * (ax + ay + az);
  const int axis = pick < ax ? 0 : (pick < ax + ay ? 1 : 2);
  const double side = unit(rng) < 0.5 ? -0.5 : 0.5;
  Point3 p;
  for (int i = 0; i < 3; ++i) p[i] = (unit(rng) - 0.5) * extent[i];
  p[axis] = side * extent[axis];
  return p;
}

template <int N>
Eigen::Matrix<double, N, 1> sample_gaussian(const Eigen::Matrix<double, N, N>& covariance, double scale,
                                            std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix<double, N, 1> z;
  for (int i = 0; i < N; ++i) z[i] = normal(rng);
  const Eigen::Matrix<double, N, N> l = covariance.llt().matrixL();
  return scale * (l * z);
}

Pose robot_pose(const ScenarioSpec& spec, int k) {
  const double theta = spec.robot_step_angle * k;
  return Pose(rot_z(theta + std::numbers::pi / 2.0),
              Vector3(spec.robot_radius * std::cos(theta), spec.robot_radius * std::sin(theta),
                      spec.robot_height));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double parse_double(const std::string& key, const std::string& value) {
  const std::string v = lower(value);
  if (v == "inf" || v == "infinity") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || std::isnan(out)) {
    throw ConfigError("invalid value for " + key + ": '" + value + "'");
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("invalid integer for " + key + ": '" + value + "'");
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

std::string to_string(Experiment experiment) {
  switch (experiment) {
    case Experiment::kA:
      return "A";
    case Experiment::kB:
      return "B";
    case Experiment::kC:
      return "C";
    case Experiment::kD:
      return "D";
    case Experiment::kE:
      return "E";
  }
  return "?";
}

Experiment parse_experiment(const std::string& name) {
  const std::string n = lower(name);
  if (n == "a") return Experiment::kA;
  if (n == "b") return Experiment::kB;
  if (n == "c") return Experiment::kC;
  if (n == "d") return Experiment::kD;
  if (n == "e") return Experiment::kE;
  throw ConfigError("unknown experiment '" + name + "' (expected A, B, C, D or E)");
}

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kCircle:
      return "circle";
    case TrajectoryKind::kEllipse:
      return "ellipse";
    case TrajectoryKind::kLine:
      return "line";
    case TrajectoryKind::kRectangle:
      return "rectangle";
    case TrajectoryKind::kSine:
      return "sine";
  }
  return "?";
}

void ScenarioSpec::validate() const {
  if (steps < 1) throw ConfigError("steps must be at least 1");
  if (objects.empty() && static_points == 0) throw ConfigError("scenario has no points");
  if (static_points < 0) throw ConfigError("static_points must be non-negative");
  if (!(sensor_range >= 0.0)) throw ConfigError("sensor_range must be non-negative");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw ConfigError("noise_scale must be non-negative");
  for (const ObjectSpec& o : objects) {
    if (o.points < 1) throw ConfigError("every object needs at least one point");
    if (!(o.extent.array() >= 0.0).all()) throw ConfigError("object extent must be non-negative");
    const bool waypoint = o.kind == TrajectoryKind::kRectangle || o.kind == TrajectoryKind::kSine;
    if (waypoint && o.waypoints.size() < 2) throw ConfigError("waypoint objects need at least two waypoints");
    if (waypoint && !(o.speed > 0.0 && o.heading_window > 0.0)) {
      throw ConfigError("waypoint objects need positive speed and heading window");
    }
  }
  if (!is_spd(odometry_covariance)) throw ConfigError("odometry covariance is not SPD");
  if (!is_spd(point_covariance)) throw ConfigError("point covariance is not SPD");
  if (!is_spd(motion_covariance)) throw ConfigError("motion covariance is not SPD");
}

Matrix6 default_odometry_covariance() {
  Vector6 sigma;
  sigma << 0.4, 0.4, 0.4, 6.0 * kDegree, 6.0 * kDegree, 6.0 * kDegree;
  return sigma.array().square().matrix().asDiagonal();
}

Matrix3 default_point_covariance() { return Matrix3::Identity() * 0.4 * 0.4; }

Matrix3 default_motion_covariance() { return Matrix3::Identity() * 0.05 * 0.05; }

const std::vector<int>& experiment_a_steps() {
  static const std::vector<int> steps = {2, 5, 10, 18, 30, 48, 72, 105, 150, 210, 290, 395};
  return steps;
}

ScenarioSpec default_spec(Experiment experiment, const DefaultSpecOptions& options) {
  ScenarioSpec spec;
  spec.experiment = experiment;
  spec.seed = options.seed;
  spec.point_covariance = default_point_covariance();
  spec.motion_covariance = default_motion_covariance();

  if (experiment == Experiment::kA) {
    const auto& sizes = experiment_a_steps();
    if (options.size < 1 || options.size > static_cast<int>(sizes.size())) {
      throw ConfigError("experiment A size must be between 1 and " + std::to_string(sizes.size()));
    }
    spec.steps = sizes[options.size - 1];
    spec.robot_radius = 12.0;
    spec.robot_step_angle = 2.0 * std::numbers::pi / 60.0;
    spec.sensor_range = std::numeric_limits<double>::infinity();
    spec.odometry_covariance = default_odometry_covariance();
    ObjectSpec object;
    object.kind = TrajectoryKind::kCircle;
    const double radius = 6.0;
    object.initial_pose = Pose(rot_z(std::numbers::pi / 2.0), Vector3(radius, 0.0, 1.0));
    object.body_motion = circle_step(radius, 2.0 * std::numbers::pi / 45.0);
    object.points = kExperimentAPoints;
    spec.objects.push_back(object);
    return spec;
  }

  spec.steps = 80;
  spec.robot_radius = 15.0;
  spec.robot_step_angle = 2.0 * std::numbers::pi / 80.0;
  spec.sensor_range = 40.0;
  spec.odometry_covariance = default_odometry_covariance() * 0.01;  // 0.1 x the standard deviations
  spec.static_points = options.static_points ? 60 : 0;

  const std::vector<Vector3> centers = {{-4.0, 3.0, 1.0}, {4.0, 2.0, 2.0}, {0.0, -5.0, 0.5}};
  for (std::size_t j = 0; j < centers.size(); ++j) {
    ObjectSpec object;
    object.points = 8;
    const Vector3& c = centers[j];
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(j) / 3.0;
    switch (experiment) {
      case Experiment::kB: {
        // A circle in a tilted plane, which looks like an ellipse from above.
        object.kind = TrajectoryKind::kEllipse;
        const double radius = 3.0 + 0.5 * static_cast<double>(j);
        const Matrix3 tilt = rot_z(phase) * rot_x(35.0 * kDegree);
        object.initial_pose = Pose(tilt, c - tilt * Vector3(0.0, radius, 0.0));
        object.body_motion = circle_step(radius, 2.0 * std::numbers::pi / 70.0);
        break;
      }
      case Experiment::kC: {
        object.kind = TrajectoryKind::kLine;
        const Matrix3 r = rot_z(phase) * rot_x(10.0 * kDegree * static_cast<double>(j + 1));
        const Vector3 start = c - r * Vector3(0.12 * spec.steps / 2.0, 0.0, 0.0);
        object.initial_pose = Pose(r, start);
        object.body_motion = Pose::from_translation(Vector3(0.12, 0.0, 0.02));
        break;
      }
      case Experiment::kD: {
        object.kind = TrajectoryKind::kRectangle;
        const double a = 3.0 + 0.5 * static_cast<double>(j);
        const double b = 2.0;
        object.waypoints = {c + Vector3(-a, -b, 0.0), c + Vector3(a, -b, 0.0), c + Vector3(a, b, 0.0),
                            c + Vector3(-a, b, 0.0)};
        object.closed_path = true;
        object.speed = 0.1;
        object.heading_window = 1.5;
        break;
      }
      case Experiment::kE: {
        object.kind = TrajectoryKind::kSine;
        const double length = 14.0;
        const double amplitude = 1.0;
        const double wavelength = 10.0;
        const Matrix3 r = rot_z(phase);
        for (int i = 0; i <= 200; ++i) {
          const double x = -length / 2.0 + length * i / 200.0;
          const double y = amplitude * std::sin(2.0 * std::numbers::pi * x / wavelength);
          object.waypoints.push_back(c + r * Vector3(x, y, 0.0));
        }
        object.speed = 0.1;
        object.heading_window = 1.0;
        break;
      }
      case Experiment::kA:
        break;
    }
    spec.objects.push_back(object);
  }
  return spec;
}

bool visibility(const Pose& pose, const Point3& point, double range) {
  if (std::isinf(range)) return true;
  return (point - pose.translation()).norm() <= range;
}

std::vector<Pose> object_trajectory(const ObjectSpec& object, int steps) {
  std::vector<Pose> poses;
  poses.reserve(static_cast<std::size_t>(steps) + 1);
  const bool waypoint = object.kind == TrajectoryKind::kRectangle || object.kind == TrajectoryKind::kSine;
  if (!waypoint) {
    poses.push_back(object.initial_pose);
    for (int k = 1; k <= steps; ++k) poses.push_back(poses.back() * object.body_motion);
    return poses;
  }
  const Path path(object.waypoints, object.closed_path);
  // Open paths are traversed from their start, keeping clear of the end so
  // the heading chord stays inside the path.
  const double start = object.closed_path ? 0.0 : object.heading_window;
  for (int k = 0; k <= steps; ++k) {
    const double s = start + object.speed * k;
    const Vector3 direction = path.at(s + object.heading_window) - path.at(s - object.heading_window);
    poses.emplace_back(heading_rotation(direction), path.at(s));
  }
  return poses;
}

Dataset generate(const ScenarioSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Dataset data;
  data.motion_covariance = spec.motion_covariance;

  for (int k = 0; k <= spec.steps; ++k) data.true_poses.push_back(robot_pose(spec, k));

  // Dynamic points first, numbered per object, then static points.
  struct BodyPoint {
    int id;
    int object;
    Point3 body;
  };
  std::vector<BodyPoint> body_points;
  int next_point = 0;
  std::vector<std::vector<Pose>> trajectories;
  for (std::size_t j = 0; j < spec.objects.size(); ++j) {
    const ObjectSpec& object = spec.objects[j];
    const int object_id = static_cast<int>(j) + 1;
    for (int i = 0; i < object.points; ++i) {
      body_points.push_back({next_point, object_id, sample_box_surface(object.extent, rng)});
      data.point_object.emplace(next_point, object_id);
      ++next_point;
    }
    trajectories.push_back(object_trajectory(object, spec.steps));
    const auto& traj = trajectories.back();
    const bool constant = object.kind == TrajectoryKind::kCircle || object.kind == TrajectoryKind::kEllipse ||
                          object.kind == TrajectoryKind::kLine;
    for (int k = 0; k < spec.steps; ++k) {
      const Pose h = constant ? frame_change(traj[k], object.body_motion) : traj[k + 1] * traj[k].inverse();
      data.true_motions.emplace(StepKey{object_id, k}, h);
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < spec.static_points; ++i) {
    Point3 p;
    for (int a = 0; a < 3; ++a) p[a] = spec.static_min[a] + unit(rng) * (spec.static_max[a] - spec.static_min[a]);
    data.true_static_points.emplace(next_point++, p);
  }
  for (const BodyPoint& b : body_points) {
    const auto& traj = trajectories[static_cast<std::size_t>(b.object - 1)];
    for (int k = 0; k <= spec.steps; ++k) data.true_dynamic_points.emplace(StepKey{b.id, k}, traj[k] * b.body);
  }

  for (int k = 1; k <= spec.steps; ++k) {
    const Pose truth = data.true_poses[k - 1].inverse() * data.true_poses[k];
    const Vector6 n = sample_gaussian<6>(spec.odometry_covariance, spec.noise_scale, rng);
    const Pose measured(truth.rotation() * so3_exp(n.tail<3>()), truth.translation() + n.head<3>());
    data.odometry.push_back({k - 1, k, measured, spec.odometry_covariance});
  }

  for (int k = 0; k <= spec.steps; ++k) {
    const Pose& x = data.true_poses[k];
    const Pose x_inv = x.inverse();
    int seen = 0;
    auto observe = [&](int id, const Point3& p) {
      if (!visibility(x, p, spec.sensor_range)) return;
      const Vector3 n = sample_gaussian<3>(spec.point_covariance, spec.noise_scale, rng);
      data.observations.push_back({k, id, x_inv * p + n, spec.point_covariance});
      ++seen;
    };
    for (const BodyPoint& b : body_points) observe(b.id, data.true_dynamic_points.at({b.id, k}));
    for (const auto& [id, p] : data.true_static_points) observe(id, p);
    if (seen == 0) data.warnings.push_back("no visible points at step " + std::to_string(k));
  }
  return data;
}

void apply_spec_override(const std::string& key, const std::string& value, ScenarioSpec& spec) {
  auto sigma_diag = [&](double sigma) { return sigma * sigma; };
  if (key == "steps") {
    spec.steps = static_cast<int>(parse_int(key, value));
  } else if (key == "seed") {
    const long long s = parse_int(key, value);
    if (s < 0) throw ConfigError("seed must be non-negative");
    spec.seed = static_cast<std::uint64_t>(s);
  } else if (key == "robot_radius") {
    spec.robot_radius = parse_double(key, value);
  } else if (key == "robot_step_angle") {
    spec.robot_step_angle = parse_double(key, value);
  } else if (key == "sensor_range") {
    spec.sensor_range = parse_double(key, value);
  } else if (key == "static_points") {
    spec.static_points = static_cast<int>(parse_int(key, value));
  } else if (key == "points_per_object") {
    const int n = static_cast<int>(parse_int(key, value));
    for (ObjectSpec& o : spec.objects) o.points = n;
  } else if (key == "object_speed") {
    const double v = parse_double(key, value);
    for (ObjectSpec& o : spec.objects) o.speed = v;
  } else if (key == "noise_scale") {
    spec.noise_scale = parse_double(key, value);
  } else if (key == "odometry_sigma_translation") {
    const double v = sigma_diag(parse_double(key, value));
    for (int i = 0; i < 3; ++i) spec.odometry_covariance(i, i) = v;
  } else if (key == "odometry_sigma_rotation_deg") {
    const double v = sigma_diag(parse_double(key, value) * kDegree);
    for (int i = 3; i < 6; ++i) spec.odometry_covariance(i, i) = v;
  } else if (key == "point_sigma") {
    spec.point_covariance = Matrix3::Identity() * sigma_diag(parse_double(key, value));
  } else if (key == "motion_sigma") {
    spec.motion_covariance = Matrix3::Identity() * sigma_diag(parse_double(key, value));
  } else {
    throw ConfigError("unknown scenario key '" + key + "'");
  }
}

void apply_spec_file(const std::filesystem::path& path, ScenarioSpec& spec) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      apply_spec_override(trim(line.substr(0, eq)), trim(line.substr(eq + 1)), spec);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

}  // namespace domslam
