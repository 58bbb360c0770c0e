#include "domslam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "domslam/errors.hpp"
#include "domslam/text.hpp"

namespace domslam {

namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

double rms(double sum_sq, std::size_t count) {
  return count == 0 ? 0.0 : std::sqrt(sum_sq / static_cast<double>(count));
}

}  // namespace

Snapshot snapshot(const FactorGraph& graph) {
  const Estimates values = graph.estimates();
  Snapshot out;
  out.poses = values.poses;
  for (const auto& [id, vertex] : graph.landmarks()) {
    const std::pair<int, int> key{vertex.point_id, vertex.step.value_or(-1)};
    if (!out.landmarks.emplace(key, values.landmarks.at(id)).second) {
      throw MetricsError("landmark " + std::to_string(id) + " duplicates point " +
                         std::to_string(vertex.point_id) + " at step " + std::to_string(key.second));
    }
  }
  return out;
}

std::vector<double> metric_values(const MetricsReport& r) {
  return {r.ate, r.are, r.ase, r.all_rte, r.all_rre, r.all_rse};
}

MetricsReport evaluate(const Snapshot& estimate, const Snapshot& truth, const MetricsOptions& options) {
  if (estimate.poses.empty()) throw MetricsError("estimate has no poses");

  std::vector<const Pose*> est_poses;
  std::vector<const Pose*> true_poses;
  for (const auto& [id, pose] : estimate.poses) {
    auto it = truth.poses.find(id);
    if (it == truth.poses.end()) throw MetricsError("pose " + std::to_string(id) + " missing from ground truth");
    est_poses.push_back(&pose);
    true_poses.push_back(&it->second);
  }

  MetricsReport report;
  const std::size_t n = est_poses.size();
  report.poses = n;

  double trans_sq = 0.0;
  double rot_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    trans_sq += (est_poses[i]->translation() - true_poses[i]->translation()).squaredNorm();
    const double angle =
        rotation_angle(true_poses[i]->rotation().transpose() * est_poses[i]->rotation()) * kRadToDeg;
    rot_sq += angle * angle;
  }
  report.ate = rms(trans_sq, n);
  report.are = rms(rot_sq, n);

  // All ordered pairs a != b, or a seeded uniform subsample of them.
  double pair_trans_sq = 0.0;
  double pair_rot_sq = 0.0;
  auto accumulate_pair = [&](std::size_t a, std::size_t b) {
    const Pose true_rel = true_poses[a]->inverse() * *true_poses[b];
    const Pose est_rel = est_poses[a]->inverse() * *est_poses[b];
    const Pose error = true_rel.inverse() * est_rel;
    pair_trans_sq += error.translation().squaredNorm();
    const double angle = rotation_angle(error.rotation()) * kRadToDeg;
    pair_rot_sq += angle * angle;
  };
  if (n >= 2 && n <= options.max_all_pairs_poses) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a != b) accumulate_pair(a, b);
      }
    }
    report.pose_pairs = n * (n - 1);
  } else if (n >= 2) {
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_int_distribution<std::size_t> second(0, n - 2);
    for (std::size_t s = 0; s < options.subsample_pairs; ++s) {
      const std::size_t a = first(rng);
      std::size_t b = second(rng);
      if (b >= a) ++b;
      accumulate_pair(a, b);
    }
    report.pose_pairs = options.subsample_pairs;
    report.pairs_subsampled = true;
  }
  report.all_rte = rms(pair_trans_sq, report.pose_pairs);
  report.all_rre = rms(pair_rot_sq, report.pose_pairs);

  std::vector<Vector3> errors;
  for (const auto& [key, position] : estimate.landmarks) {
    auto it = truth.landmarks.find(key);
    if (it == truth.landmarks.end()) {
      throw MetricsError("point " + std::to_string(key.first) + " at step " + std::to_string(key.second) +
                         " missing from ground truth");
    }
    errors.push_back(position - it->second);
  }
  const std::size_t m = errors.size();
  report.landmarks = m;
  double struct_sq = 0.0;
  Vector3 mean = Vector3::Zero();
  for (const Vector3& e : errors) {
    struct_sq += e.squaredNorm();
    mean += e;
  }
  report.ase = rms(struct_sq, m);
  if (m >= 2) {
    // sum over ordered pairs of |e_a - e_b|^2 = 2 m sum_a |e_a - mean|^2
    mean /= static_cast<double>(m);
    double centered = 0.0;
    for (const Vector3& e : errors) centered += (e - mean).squaredNorm();
    report.all_rse = std::sqrt(2.0 * static_cast<double>(m) * centered / (static_cast<double>(m) * (m - 1)));
  }
  return report;
}

double improvement_percent(double without_dom, double with_dom, bool* zero_baseline) {
  const bool zero = without_dom == 0.0;
  if (zero_baseline) *zero_baseline = zero;
  return zero ? 0.0 : (without_dom - with_dom) / without_dom * 100.0;
}

std::vector<ComparisonRow> compare(const MetricsReport& without_dom, const MetricsReport& with_dom) {
  const auto a = metric_values(without_dom);
  const auto b = metric_values(with_dom);
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ComparisonRow row{kMetricNames[i], a[i], b[i], 0.0, false};
    row.improvement_pct = improvement_percent(a[i], b[i], &row.zero_baseline);
    rows.push_back(row);
  }
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty()) throw MetricsError("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

void write_metrics_csv(std::ostream& out, const MetricsReport& r) {
  out << "ATE,ARE,ASE,allRTE,allRRE,allRSE,poses,landmarks,pose_pairs,pairs_subsampled\n";
  for (double v : metric_values(r)) out << format_double(v) << ',';
  out << r.poses << ',' << r.landmarks << ',' << r.pose_pairs << ',' << (r.pairs_subsampled ? 1 : 0) << '\n';
}

void write_comparison_csv(std::ostream& out, const std::vector<LabeledComparison>& blocks) {
  out << "seed,metric,without_dom,with_dom,improvement_pct,zero_baseline\n";
  for (const auto& block : blocks) {
    for (const auto& row : block.rows) {
      out << block.label << ',' << row.metric << ',' << format_double(row.without_dom) << ','
          << format_double(row.with_dom) << ',' << format_double(row.improvement_pct) << ','
          << (row.zero_baseline ? 1 : 0) << '\n';
    }
  }
}

}  // namespace domslam
