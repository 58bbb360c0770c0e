#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "domslam/graph.hpp"

namespace domslam {

/// Poses by step and landmark positions by (point id, step); static points
/// use step -1.
struct Snapshot {
  std::map<int, Pose> poses;
  std::map<std::pair<int, int>, Point3> landmarks;
};

Snapshot snapshot(const FactorGraph& graph);

struct MetricsOptions {
  /// Above this many poses the all-pairs metrics use a random subsample.
  std::size_t max_all_pairs_poses = 2000;
  std::size_t subsample_pairs = 1000000;
  std::uint64_t seed = 0;
};

/// Errors in meters and degrees. No alignment is applied.
struct MetricsReport {
  double ate = 0.0;
  double are = 0.0;
  double ase = 0.0;
  double all_rte = 0.0;
  double all_rre = 0.0;
  double all_rse = 0.0;
  std::size_t poses = 0;
  std::size_t landmarks = 0;
  std::size_t pose_pairs = 0;
  bool pairs_subsampled = false;
};

inline constexpr const char* kMetricNames[6] = {"ATE", "ARE", "ASE", "allRTE", "allRRE", "allRSE"};

/// The six metrics in the fixed order ATE, ARE, ASE, allRTE, allRRE, allRSE.
std::vector<double> metric_values(const MetricsReport& report);

/// Compares an estimate with ground truth. Every pose and landmark of the
/// estimate must exist in the ground truth; at least one pose is required.
/// Throws MetricsError otherwise.
MetricsReport evaluate(const Snapshot& estimate, const Snapshot& truth, const MetricsOptions& options = {});

struct ComparisonRow {
  std::string metric;
  double without_dom = 0.0;
  double with_dom = 0.0;
  double improvement_pct = 0.0;  // positive when the with-DOM error is lower
  bool zero_baseline = false;    // without_dom was 0, improvement reported as 0
};

/// (without - with) / without * 100, or 0 with the flag set when without is 0.
double improvement_percent(double without_dom, double with_dom, bool* zero_baseline = nullptr);

std::vector<ComparisonRow> compare(const MetricsReport& without_dom, const MetricsReport& with_dom);

/// Median of a non-empty list; the mean of the middle pair for even sizes.
double median(std::vector<double> values);

void write_metrics_csv(std::ostream& out, const MetricsReport& report);

/// A block of comparison rows tagged with a seed label ("median" for the
/// summary rows).
struct LabeledComparison {
  std::string label;
  std::vector<ComparisonRow> rows;
};

void write_comparison_csv(std::ostream& out, const std::vector<LabeledComparison>& blocks);

}  // namespace domslam
