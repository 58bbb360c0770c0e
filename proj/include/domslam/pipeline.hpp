#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "domslam/graph.hpp"
#include "domslam/metrics.hpp"
#include "domslam/simulator.hpp"
#include "domslam/solver.hpp"

namespace domslam {

/// Parses "7", "1..20" (inclusive) or comma-separated mixtures of both.
/// Throws ConfigError on malformed or empty lists.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

/// Default output root: $DOMSLAM_OUTPUT_ROOT, or "runs".
std::filesystem::path default_output_root();

std::string sha256_hex(const std::string& data);
std::string sha256_file(const std::filesystem::path& path);

/// Scenario construction shared by `simulate` and `compare`: defaults, then
/// the optional spec file, then key=value overrides, then the seed.
struct ScenarioRequest {
  Experiment experiment = Experiment::kB;
  int size = 12;
  bool static_points = false;
  std::optional<std::filesystem::path> spec_file;
  std::vector<std::pair<std::string, std::string>> overrides;
};

ScenarioSpec make_spec(const ScenarioRequest& request, std::uint64_t seed);

/// Stats file of one solve, as JSON.
std::string stats_json(const SolveReport& report, const std::string& mode, OrderingPolicy ordering,
                       const std::string& error = "");

struct CompareOptions {
  ScenarioRequest scenario;
  std::vector<std::uint64_t> seeds = {1};
  /// Experiment A only: 1-based size indices to sweep.
  std::vector<int> sizes;
  MotionMode motion_mode = MotionMode::kConstant;
  /// Baseline drops dynamic points entirely instead of keeping them.
  bool drop_dynamic = false;
  SolverConfig solver;
  /// Where per-seed files and summary tables go; nothing is written if empty.
  std::filesystem::path output;
};

struct ModeOutcome {
  bool solved = false;
  std::string error;
  SolveReport report;
  MetricsReport metrics;
  std::string initialization_sha256;
};

struct SeedOutcome {
  std::uint64_t seed = 0;
  int size = 0;  // experiment A size index, 0 otherwise
  int steps = 0;
  std::size_t ternary_factors = 0;
  std::string graph_sha256;
  ModeOutcome with_dom;
  ModeOutcome without_dom;
  std::string error;  // simulation or build failure

  bool ok() const { return error.empty() && with_dom.solved && without_dom.solved; }
};

/// Median over successful seeds of (without - with) for one sweep size.
struct DifferenceRow {
  int size = 0;
  int steps = 0;
  std::size_t ternary_factors = 0;
  std::vector<double> differences;  // ATE, ARE, ASE, allRTE, allRRE, allRSE
  std::size_t failed_seeds = 0;
};

struct CompareResult {
  std::vector<SeedOutcome> outcomes;
  std::vector<LabeledComparison> table;  // per-seed blocks, then "median"
  std::vector<DifferenceRow> differences;  // experiment A only
};

/// Simulates each seed once and solves it with and without motion factors
/// from the same graph file and initialization. Failures are recorded per
/// seed and the remaining seeds still run.
CompareResult run_compare(const CompareOptions& options);

/// Median comparison over the successful outcomes. Throws MetricsError if
/// none succeeded.
std::vector<ComparisonRow> median_comparison(const std::vector<SeedOutcome>& outcomes);

}  // namespace domslam
