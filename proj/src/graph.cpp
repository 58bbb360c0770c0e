#include "domslam/graph.hpp"

#include <algorithm>
#include <tuple>

#include <Eigen/LU>

#include "domslam/errors.hpp"

namespace domslam {

std::string to_string(const VariableKey& key) {
  switch (key.kind) {
    case VariableKind::kRobotPose:
      return "pose " + std::to_string(key.id);
    case VariableKind::kLandmark:
      return "landmark " + std::to_string(key.id);
    case VariableKind::kMotion:
      return "motion " + std::to_string(key.id);
  }
  return "variable " + std::to_string(key.id);
}

int tangent_dimension(VariableKind kind) { return kind == VariableKind::kLandmark ? 3 : 6; }

std::vector<VariableKey> factor_variables(const Factor& factor) {
  struct Visitor {
    std::vector<VariableKey> operator()(const OdometryFactor& f) const {
      return {{VariableKind::kRobotPose, f.from}, {VariableKind::kRobotPose, f.to}};
    }
    std::vector<VariableKey> operator()(const PointFactor& f) const {
      return {{VariableKind::kRobotPose, f.pose}, {VariableKind::kLandmark, f.landmark}};
    }
    std::vector<VariableKey> operator()(const MotionFactor& f) const {
      return {{VariableKind::kLandmark, f.landmark_k},
              {VariableKind::kLandmark, f.landmark_k1},
              {VariableKind::kMotion, f.motion}};
    }
  };
  return std::visit(Visitor{}, factor);
}

void FactorGraph::add_pose(int id, const Twist& estimate) {
  if (!poses_.emplace(id, estimate).second) {
    throw GraphError("duplicate pose id " + std::to_string(id));
  }
}

void FactorGraph::add_landmark(int id, const LandmarkVertex& vertex) {
  if (vertex.step && !vertex.object) {
    throw GraphError("landmark " + std::to_string(id) + " has a step but no object");
  }
  if (!landmarks_.emplace(id, vertex).second) {
    throw GraphError("duplicate landmark id " + std::to_string(id));
  }
}

void FactorGraph::add_motion(int id, const MotionVertex& vertex) {
  if (!motions_.emplace(id, vertex).second) {
    throw GraphError("duplicate motion id " + std::to_string(id));
  }
}

bool FactorGraph::has(const VariableKey& key) const {
  switch (key.kind) {
    case VariableKind::kRobotPose:
      return poses_.count(key.id) != 0;
    case VariableKind::kLandmark:
      return landmarks_.count(key.id) != 0;
    case VariableKind::kMotion:
      return motions_.count(key.id) != 0;
  }
  return false;
}

void FactorGraph::add_factor(const Factor& factor) {
  for (const VariableKey& key : factor_variables(factor)) {
    if (!has(key)) throw GraphError("factor references unknown " + to_string(key));
  }
  if (const auto* m = std::get_if<MotionFactor>(&factor)) {
    if (m->landmark_k == m->landmark_k1) {
      throw GraphError("motion factor links landmark " + std::to_string(m->landmark_k) +
                       " to itself");
    }
    const LandmarkVertex& a = landmarks_.at(m->landmark_k);
    const LandmarkVertex& b = landmarks_.at(m->landmark_k1);
    const MotionVertex& motion = motions_.at(m->motion);
    if (a.point_id != b.point_id || !a.object || a.object != b.object ||
        *a.object != motion.object) {
      throw GraphError("motion factor between landmarks " + std::to_string(m->landmark_k) + " and " +
                       std::to_string(m->landmark_k1) + " does not follow one point on object " +
                       std::to_string(motion.object));
    }
    if (a.step && b.step && *b.step != *a.step + 1) {
      throw GraphError("motion factor between landmarks " + std::to_string(m->landmark_k) + " and " +
                       std::to_string(m->landmark_k1) + " skips a step");
    }
  }
  factors_.push_back(factor);
}

void FactorGraph::fix_pose(int id) {
  if (poses_.count(id) == 0) throw GraphError("cannot fix unknown pose " + std::to_string(id));
  fixed_.insert(id);
}

std::size_t FactorGraph::ternary_factor_count() const {
  return static_cast<std::size_t>(std::count_if(factors_.begin(), factors_.end(), [](const Factor& f) {
    return std::holds_alternative<MotionFactor>(f);
  }));
}

MotionMode FactorGraph::motion_mode() const {
  for (const auto& [id, m] : motions_) {
    if (m.step) return MotionMode::kPerStep;
  }
  return MotionMode::kConstant;
}

Estimates FactorGraph::estimates() const {
  Estimates out;
  for (const auto& [id, tau] : poses_) out.poses.emplace_hint(out.poses.end(), id, expmap(tau));
  for (const auto& [id, l] : landmarks_) out.landmarks.emplace_hint(out.landmarks.end(), id, l.estimate);
  for (const auto& [id, m] : motions_) out.motions.emplace_hint(out.motions.end(), id, expmap(m.estimate));
  return out;
}

void FactorGraph::set_estimates(const Estimates& values) {
  for (const auto& [id, pose] : values.poses) {
    auto it = poses_.find(id);
    if (it != poses_.end()) it->second = logmap(pose, PiPolicy::kPickCanonical);
  }
  for (const auto& [id, point] : values.landmarks) {
    auto it = landmarks_.find(id);
    if (it != landmarks_.end()) it->second.estimate = point;
  }
  for (const auto& [id, motion] : values.motions) {
    auto it = motions_.find(id);
    if (it != motions_.end()) it->second.estimate = logmap(motion, PiPolicy::kPickCanonical);
  }
}

void FactorGraph::validate() const {
  const bool has_odometry = std::any_of(factors_.begin(), factors_.end(), [](const Factor& f) {
    return std::holds_alternative<OdometryFactor>(f);
  });
  if (has_odometry && fixed_.empty()) {
    throw GraphError("graph has odometry factors but no anchored pose");
  }
  if (motion_mode() == MotionMode::kConstant) {
    std::set<int> objects;
    for (const auto& [id, m] : motions_) {
      if (!objects.insert(m.object).second) {
        throw GraphError("object " + std::to_string(m.object) +
                         " has more than one constant motion variable");
      }
    }
  }
}

namespace {

// Symmetrized so the stored upper triangle determines the matrix exactly.
template <typename Matrix>
Matrix inverse_spd(const Matrix& covariance) {
  const Matrix inverse = covariance.inverse();
  return 0.5 * (inverse + inverse.transpose());
}

// Adds ternary factors and motion variables for every consecutive pair of
// instances of each dynamic point. New motion ids follow the largest existing one.
void add_motion_structure(FactorGraph& graph, MotionMode mode, const Matrix3& information) {
  // (object, point id, step) -> landmark id, ordered so consecutive entries of
  // the same point are adjacent.
  std::map<std::tuple<int, int, int>, int> instances;
  for (const auto& [id, l] : graph.landmarks()) {
    if (l.dynamic() && l.step) instances.emplace(std::make_tuple(*l.object, l.point_id, *l.step), id);
  }

  struct Pair {
    int object;
    int step;
    int from;
    int to;
  };
  std::vector<Pair> pairs;
  for (auto it = instances.begin(); it != instances.end(); ++it) {
    auto next = std::next(it);
    if (next == instances.end()) break;
    const auto& [obj, pid, step] = it->first;
    const auto& [obj2, pid2, step2] = next->first;
    if (obj == obj2 && pid == pid2 && step2 == step + 1) {
      pairs.push_back({obj, step, it->second, next->second});
    }
  }

  std::map<std::pair<int, int>, int> motion_ids;  // (object, step or -1) -> id
  int next_id = graph.motions().empty() ? 0 : graph.motions().rbegin()->first + 1;
  for (const Pair& p : pairs) {
    const std::pair<int, int> key{p.object, mode == MotionMode::kPerStep ? p.step : -1};
    motion_ids.emplace(key, 0);
  }
  for (auto& [key, id] : motion_ids) {
    id = next_id++;
    MotionVertex vertex;
    vertex.object = key.first;
    if (key.second >= 0) vertex.step = key.second;
    graph.add_motion(id, vertex);
  }
  // Factors in the order the pairs were found: object, point, step.
  for (const Pair& p : pairs) {
    const int motion = motion_ids.at({p.object, mode == MotionMode::kPerStep ? p.step : -1});
    graph.add_factor(MotionFactor{p.from, p.to, motion, information});
  }
}

}  // namespace

FactorGraph build_graph(const Dataset& dataset, const BuildOptions& options) {
  FactorGraph graph;
  if (dataset.true_poses.empty()) throw GraphError("dataset has no poses");

  // Poses: chain odometry from the true first pose.
  std::map<int, Pose> initial;
  initial.emplace(0, dataset.true_poses.front());
  std::map<int, const OdometryMeasurement*> incoming;
  for (const auto& o : dataset.odometry) {
    if (o.to_step != o.from_step + 1) {
      throw GraphError("odometry " + std::to_string(o.from_step) + "->" + std::to_string(o.to_step) +
                       " does not link consecutive steps");
    }
    incoming[o.to_step] = &o;
  }
  const int steps = static_cast<int>(dataset.true_poses.size());
  for (int k = 1; k < steps; ++k) {
    auto it = incoming.find(k);
    if (it == incoming.end()) {
      throw GraphError("pose " + std::to_string(k) + " is not reachable by odometry");
    }
    initial.emplace(k, initial.at(k - 1) * it->second->measured);
  }
  for (const auto& [k, pose] : initial) graph.add_pose(k, logmap(pose, PiPolicy::kPickCanonical));
  graph.fix_pose(0);

  for (const auto& o : dataset.odometry) {
    if (initial.count(o.from_step) == 0 || initial.count(o.to_step) == 0) {
      throw GraphError("odometry references unknown pose " + std::to_string(o.to_step));
    }
  }

  // Landmarks, in (step, point id) order of their observations.
  std::vector<const PointObservation*> observations;
  for (const auto& z : dataset.observations) {
    if (options.drop_dynamic && dataset.is_dynamic(z.point_id)) continue;
    if (initial.count(z.step) == 0) {
      throw GraphError("observation of point " + std::to_string(z.point_id) +
                       " references unknown pose " + std::to_string(z.step));
    }
    observations.push_back(&z);
  }
  std::stable_sort(observations.begin(), observations.end(), [](const auto* a, const auto* b) {
    return std::tie(a->step, a->point_id) < std::tie(b->step, b->point_id);
  });

  std::map<int, int> static_ids;          // point id -> landmark id
  std::map<StepKey, int> dynamic_ids;     // (point id, step) -> landmark id
  std::vector<std::pair<const PointObservation*, int>> point_factors;
  int next_landmark = 0;
  for (const PointObservation* z : observations) {
    int landmark = 0;
    auto object = dataset.point_object.find(z->point_id);
    if (object == dataset.point_object.end()) {
      auto [it, inserted] = static_ids.emplace(z->point_id, next_landmark);
      if (inserted) {
        graph.add_landmark(next_landmark++,
                           {initial.at(z->step) * z->measured, z->point_id, std::nullopt, std::nullopt});
      }
      landmark = it->second;
    } else {
      auto [it, inserted] = dynamic_ids.emplace(StepKey{z->point_id, z->step}, next_landmark);
      if (!inserted) {
        throw GraphError("point " + std::to_string(z->point_id) + " observed twice at step " +
                         std::to_string(z->step));
      }
      graph.add_landmark(next_landmark++,
                         {initial.at(z->step) * z->measured, z->point_id, object->second, z->step});
      landmark = it->second;
    }
    point_factors.emplace_back(z, landmark);
  }

  for (const auto& o : dataset.odometry) {
    graph.add_factor(OdometryFactor{o.from_step, o.to_step, logmap(o.measured, PiPolicy::kPickCanonical),
                                    inverse_spd(o.covariance)});
  }
  for (const auto& [z, landmark] : point_factors) {
    graph.add_factor(PointFactor{z->step, landmark, z->measured, inverse_spd(z->covariance)});
  }

  if (options.mode == GraphMode::kWithDom) {
    add_motion_structure(graph, options.motion_mode, inverse_spd(dataset.motion_covariance));
  }
  graph.validate();
  return graph;
}

namespace {

FactorGraph filtered(const FactorGraph& graph, bool keep_motion, bool keep_dynamic) {
  FactorGraph out;
  for (const auto& [id, tau] : graph.poses()) out.add_pose(id, tau);
  for (const auto& [id, l] : graph.landmarks()) {
    if (keep_dynamic || !l.dynamic()) out.add_landmark(id, l);
  }
  if (keep_motion) {
    for (const auto& [id, m] : graph.motions()) out.add_motion(id, m);
  }
  for (const Factor& f : graph.factors()) {
    const auto keys = factor_variables(f);
    if (std::all_of(keys.begin(), keys.end(), [&](const VariableKey& k) { return out.has(k); })) {
      out.add_factor(f);
    }
  }
  for (int id : graph.fixed_poses()) out.fix_pose(id);
  return out;
}

}  // namespace

FactorGraph without_dom(const FactorGraph& graph) { return filtered(graph, false, true); }

FactorGraph drop_dynamic(const FactorGraph& graph) { return filtered(graph, false, false); }

FactorGraph rebuild_motion(const FactorGraph& graph, MotionMode mode) {
  Matrix3 information = Matrix3::Identity();
  bool found = false;
  for (const Factor& f : graph.factors()) {
    if (const auto* m = std::get_if<MotionFactor>(&f)) {
      information = m->information;
      found = true;
      break;
    }
  }
  if (!found) {
    throw GraphError("graph has no motion factor to take the motion information from");
  }
  FactorGraph out = without_dom(graph);
  add_motion_structure(out, mode, information);
  out.validate();
  return out;
}

}  // namespace domslam
