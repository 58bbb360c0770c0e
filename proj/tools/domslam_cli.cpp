// Command-line front end: simulate, solve, evaluate and compare.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "domslam/errors.hpp"
#include "domslam/graph_io.hpp"
#include "domslam/metrics.hpp"
#include "domslam/pipeline.hpp"
#include "domslam/simulator.hpp"
#include "domslam/solver.hpp"

namespace fs = std::filesystem;
using namespace domslam;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

const std::map<std::string, OrderingPolicy> kOrderings = {{"motion-last", OrderingPolicy::kMotionLast},
                                                          {"natural", OrderingPolicy::kNaturalOrder},
                                                          {"motion-first", OrderingPolicy::kMotionFirst}};
const std::map<std::string, MotionMode> kMotionModes = {{"constant", MotionMode::kConstant},
                                                        {"per-step", MotionMode::kPerStep}};
const std::map<std::string, bool> kOnOff = {{"on", true}, {"off", false}};

struct ScenarioFlags {
  std::string experiment;
  int size = 12;
  bool static_points = false;
  std::string spec_file;
  std::vector<std::string> overrides;

  void add_to(CLI::App* app) {
    app->add_option("--experiment", experiment, "Experiment A, B, C, D or E")->required();
    app->add_option("--static-points", static_points, "Add static background points (on/off)")
        ->transform(CLI::CheckedTransformer(kOnOff, CLI::ignore_case));
    app->add_option("--spec", spec_file, "Scenario file with key = value overrides")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "Scenario override key=value (repeatable)");
  }

  ScenarioRequest request() const {
    ScenarioRequest r;
    r.experiment = parse_experiment(experiment);
    r.size = size;
    r.static_points = static_points;
    if (!spec_file.empty()) r.spec_file = spec_file;
    for (const std::string& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
      r.overrides.emplace_back(o.substr(0, eq), o.substr(eq + 1));
    }
    return r;
  }
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

int cmd_simulate(const ScenarioFlags& flags, std::uint64_t seed, MotionMode motion, fs::path out) {
  const ScenarioRequest request = flags.request();
  const ScenarioSpec spec = make_spec(request, seed);
  const Dataset data = generate(spec);
  for (const std::string& w : data.warnings) std::cerr << "warning: " << w << "\n";

  BuildOptions build;
  build.motion_mode = motion;
  const FactorGraph graph = build_graph(data, build);
  if (out.empty()) out = default_output_root() / ("simulate_" + to_string(spec.experiment) + "_" + std::to_string(seed));
  fs::create_directories(out);
  write_graph_file(out / "graph.txt", graph);
  write_graph_file(out / "groundtruth.txt", ground_truth_graph(data));

  nlohmann::ordered_json manifest;
  manifest["subcommand"] = "simulate";
  manifest["experiment"] = to_string(spec.experiment);
  if (spec.experiment == Experiment::kA) manifest["size"] = request.size;
  manifest["spec_file"] = flags.spec_file;
  manifest["seeds"] = {seed};
  manifest["modes"] = {"with-dom"};
  manifest["motion"] = motion == MotionMode::kConstant ? "constant" : "per-step";
  manifest["static_points"] = flags.static_points;
  manifest["steps"] = spec.steps;
  manifest["ternary_factors"] = graph.ternary_factor_count();
  manifest["warnings"] = data.warnings;
  manifest["output_dir"] = out.string();
  manifest["files"] = {{"graph.txt", sha256_file(out / "graph.txt")},
                       {"groundtruth.txt", sha256_file(out / "groundtruth.txt")}};
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << out.string() << " (" << graph.variable_count() << " variables, "
            << graph.factors().size() << " factors, " << graph.ternary_factor_count() << " ternary)\n";
  return 0;
}

int cmd_solve(const fs::path& in, const std::string& mode, std::optional<MotionMode> motion, bool drop,
              SolverConfig config, const fs::path& out, const fs::path& stats) {
  FactorGraph graph = read_graph_file(in);
  if (mode == "without-dom") {
    graph = drop ? drop_dynamic(graph) : without_dom(graph);
  } else if (motion && !graph.motions().empty() && graph.motion_mode() != *motion) {
    graph = rebuild_motion(graph, *motion);
  }
  SolveReport report;
  std::string error;
  std::optional<FactorGraph> estimate;
  try {
    SolveResult result = solve(graph, config);
    report = result.report;
    estimate = graph;
    estimate->set_estimates(result.estimates);
  } catch (const SingularSystemError& e) {
    report = e.report();
    error = e.what();
  }
  if (!stats.empty()) write_text(stats, stats_json(report, mode, config.ordering, error));
  if (!error.empty()) {
    std::cerr << "error: " << error << "\n";
    return kExitRuntime;
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_graph_file(out, *estimate);
  std::cout << "solved in " << report.iterations << " iterations (" << to_string(report.reason)
            << "), cost " << report.initial_cost << " -> " << report.final_cost << "\n";
  return 0;
}

int cmd_evaluate(const fs::path& estimate, const fs::path& truth, const fs::path& out) {
  const MetricsReport report = evaluate(snapshot(read_graph_file(estimate)), snapshot(read_graph_file(truth)));
  std::ostringstream csv;
  write_metrics_csv(csv, report);
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    write_text(out, csv.str());
  }
  return 0;
}

std::vector<int> parse_sizes(const std::string& text) {
  const auto dots = text.find("..");
  auto number = [&](const std::string& s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("invalid size '" + text + "'");
    return v;
  };
  int first = 1;
  int last = 0;
  if (dots == std::string::npos) {
    last = number(text);
  } else {
    first = number(text.substr(0, dots));
    last = number(text.substr(dots + 2));
  }
  const int available = static_cast<int>(experiment_a_steps().size());
  if (first < 1 || last > available || first > last) {
    throw ConfigError("sizes must lie within 1.." + std::to_string(available));
  }
  std::vector<int> sizes;
  for (int s = first; s <= last; ++s) sizes.push_back(s);
  return sizes;
}

int cmd_compare(const ScenarioFlags& flags, const std::string& seeds, const std::string& sizes, MotionMode motion,
                bool drop, const SolverConfig& config, fs::path out) {
  CompareOptions options;
  options.scenario = flags.request();
  options.seeds = parse_seed_list(seeds);
  if (options.scenario.experiment == Experiment::kA) {
    options.sizes = parse_sizes(sizes.empty() ? std::to_string(experiment_a_steps().size()) : sizes);
  } else if (!sizes.empty()) {
    throw ConfigError("--sizes only applies to experiment A");
  }
  options.motion_mode = motion;
  options.drop_dynamic = drop;
  options.solver = config;
  if (out.empty()) out = default_output_root() / ("compare_" + to_string(options.scenario.experiment));
  options.output = out;

  const CompareResult result = run_compare(options);
  int failures = 0;
  for (const SeedOutcome& o : result.outcomes) {
    if (o.ok()) continue;
    ++failures;
    std::string why = o.error;
    if (why.empty()) why = !o.with_dom.error.empty() ? o.with_dom.error : o.without_dom.error;
    std::cerr << "seed " << o.seed << (o.size > 0 ? " size " + std::to_string(o.size) : "") << " failed: " << why
              << "\n";
  }
  for (const LabeledComparison& block : result.table) {
    if (block.label != "median") continue;
    for (const ComparisonRow& row : block.rows) {
      std::cout << "median " << row.metric << ": without " << row.without_dom << ", with " << row.with_dom << ", "
                << row.improvement_pct << "%\n";
    }
  }
  for (const DifferenceRow& row : result.differences) {
    std::cout << "size " << row.size << " (" << row.ternary_factors << " ternary): ASE difference "
              << row.differences[2] << "\n";
  }
  std::cout << "wrote " << out.string() << "\n";
  return failures == static_cast<int>(result.outcomes.size()) ? kExitRuntime : 0;
}

void add_solver_flags(CLI::App* app, SolverConfig& config, std::string& ordering) {
  app->add_option("--ordering", ordering, "Variable ordering: motion-last, natural or motion-first")
      ->check(CLI::IsMember({"motion-last", "natural", "motion-first"}));
  app->add_option("--max-iterations", config.max_iterations, "Levenberg-Marquardt iteration limit")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor-graph SLAM with dynamic object motion"};
  app.require_subcommand(1);

  ScenarioFlags sim_flags;
  std::uint64_t sim_seed = 1;
  std::string sim_motion = "constant";
  std::string sim_out;
  CLI::App* simulate = app.add_subcommand("simulate", "Simulate an experiment and write its graph files");
  sim_flags.add_to(simulate);
  simulate->add_option("--seed", sim_seed, "Random seed");
  simulate->add_option("--size", sim_flags.size, "Experiment A size index (1-12)")->check(CLI::Range(1, 12));
  simulate->add_option("--motion", sim_motion, "Motion variables: constant or per-step")
      ->check(CLI::IsMember({"constant", "per-step"}));
  simulate->add_option("--out", sim_out, "Output directory");

  std::string solve_in, solve_mode = "with-dom", solve_motion, solve_out, solve_stats, solve_ordering = "motion-last";
  bool solve_drop = false;
  SolverConfig solve_config;
  CLI::App* solve_cmd = app.add_subcommand("solve", "Optimize a graph file");
  solve_cmd->add_option("--in", solve_in, "Graph file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--mode", solve_mode, "with-dom or without-dom")
      ->check(CLI::IsMember({"with-dom", "without-dom"}));
  solve_cmd->add_option("--motion", solve_motion, "Motion variables: constant or per-step")
      ->check(CLI::IsMember({"constant", "per-step"}));
  solve_cmd->add_flag("--drop-dynamic", solve_drop, "Without DOM: discard dynamic points entirely");
  solve_cmd->add_option("--out", solve_out, "Estimate file")->required();
  solve_cmd->add_option("--stats", solve_stats, "Stats file (JSON)");
  add_solver_flags(solve_cmd, solve_config, solve_ordering);

  std::string eval_estimate, eval_truth, eval_out;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Compute error metrics against ground truth");
  evaluate_cmd->add_option("--estimate", eval_estimate, "Estimate graph file")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--truth", eval_truth, "Ground-truth graph file")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--out", eval_out, "Metrics CSV (stdout if omitted)");

  ScenarioFlags cmp_flags;
  std::string cmp_seeds = "1", cmp_sizes, cmp_motion = "constant", cmp_out, cmp_ordering = "motion-last";
  bool cmp_drop = false;
  SolverConfig cmp_config;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Monte-Carlo comparison with and without motion factors");
  cmp_flags.add_to(compare_cmd);
  compare_cmd->add_option("--seeds", cmp_seeds, "Seeds, e.g. 1..20 or 1,4,9");
  compare_cmd->add_option("--sizes", cmp_sizes, "Experiment A sizes: N for 1..N, or a..b");
  compare_cmd->add_option("--motion", cmp_motion, "Motion variables: constant or per-step")
      ->check(CLI::IsMember({"constant", "per-step"}));
  compare_cmd->add_flag("--drop-dynamic", cmp_drop, "Baseline discards dynamic points entirely");
  compare_cmd->add_option("--out", cmp_out, "Output directory");
  add_solver_flags(compare_cmd, cmp_config, cmp_ordering);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      return cmd_simulate(sim_flags, sim_seed, kMotionModes.at(sim_motion), sim_out);
    }
    if (solve_cmd->parsed()) {
      solve_config.ordering = kOrderings.at(solve_ordering);
      std::optional<MotionMode> motion;
      if (!solve_motion.empty()) motion = kMotionModes.at(solve_motion);
      return cmd_solve(solve_in, solve_mode, motion, solve_drop, solve_config, solve_out, solve_stats);
    }
    if (evaluate_cmd->parsed()) return cmd_evaluate(eval_estimate, eval_truth, eval_out);
    if (compare_cmd->parsed()) {
      cmp_config.ordering = kOrderings.at(cmp_ordering);
      return cmd_compare(cmp_flags, cmp_seeds, cmp_sizes, kMotionModes.at(cmp_motion), cmp_drop, cmp_config,
                         cmp_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
