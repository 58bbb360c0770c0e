#include "domslam/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "domslam/errors.hpp"
#include "domslam/graph_io.hpp"
#include "domslam/text.hpp"

namespace domslam {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::uint64_t parse_seed(const std::string& token) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    throw ConfigError("invalid seed '" + token + "'");
  }
  return value;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string seed_dir_name(std::uint64_t seed) {
  std::ostringstream out;
  out << "seed_" << std::setw(3) << std::setfill('0') << seed;
  return out.str();
}

/// Digest of the initial pose and landmark estimates of `graph`, restricted
/// to the variables of `reference`.
std::string initialization_digest(const FactorGraph& graph, const FactorGraph& reference) {
  std::string text;
  for (const auto& [id, tau] : reference.poses()) {
    text += "P " + std::to_string(id);
    for (int i = 0; i < 6; ++i) text += ' ' + format_double(graph.poses().at(id)[i]);
    text += '\n';
  }
  for (const auto& [id, l] : reference.landmarks()) {
    text += "L " + std::to_string(id);
    for (int i = 0; i < 3; ++i) text += ' ' + format_double(graph.landmarks().at(id).estimate[i]);
    text += '\n';
  }
  return sha256_hex(text);
}

ModeOutcome solve_mode(const FactorGraph& graph, const FactorGraph& reference, const Snapshot& truth,
                       const CompareOptions& options, std::uint64_t seed, const std::string& mode,
                       const std::optional<fs::path>& dir) {
  ModeOutcome outcome;
  outcome.initialization_sha256 = initialization_digest(graph, reference);
  try {
    SolveResult result = solve(graph, options.solver);
    outcome.report = result.report;
    FactorGraph estimate = graph;
    estimate.set_estimates(result.estimates);
    MetricsOptions metrics_options;
    metrics_options.seed = seed;
    outcome.metrics = evaluate(snapshot(estimate), truth, metrics_options);
    outcome.solved = true;
    if (dir) {
      write_graph_file(*dir / ("estimate_" + mode + ".txt"), estimate);
      std::ostringstream csv;
      write_metrics_csv(csv, outcome.metrics);
      write_text(*dir / ("metrics_" + mode + ".csv"), csv.str());
    }
  } catch (const SingularSystemError& e) {
    outcome.report = e.report();
    outcome.error = e.what();
  } catch (const Error& e) {
    outcome.error = e.what();
  }
  if (dir) {
    write_text(*dir / ("stats_" + mode + ".json"),
               stats_json(outcome.report, mode, options.solver.ordering, outcome.error));
  }
  return outcome;
}

SeedOutcome run_seed(const CompareOptions& options, int size, std::uint64_t seed,
                     const std::optional<fs::path>& dir) {
  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.size = size;
  FactorGraph with_graph;
  Snapshot truth;
  try {
    ScenarioRequest request = options.scenario;
    if (size > 0) request.size = size;
    const ScenarioSpec spec = make_spec(request, seed);
    outcome.steps = spec.steps;
    const Dataset data = generate(spec);
    BuildOptions build;
    build.mode = GraphMode::kWithDom;
    build.motion_mode = options.motion_mode;
    const FactorGraph built = build_graph(data, build);
    const FactorGraph truth_graph = ground_truth_graph(data);
    truth = snapshot(truth_graph);
    // Both modes start from the same serialized graph.
    const std::string text = format_graph(built);
    outcome.graph_sha256 = sha256_hex(text);
    if (dir) {
      fs::create_directories(*dir);
      write_text(*dir / "graph.txt", text);
      write_graph_file(*dir / "groundtruth.txt", truth_graph);
    }
    with_graph = parse_graph(text);
    outcome.ternary_factors = with_graph.ternary_factor_count();
  } catch (const Error& e) {
    outcome.error = e.what();
    return outcome;
  }

  const FactorGraph baseline = options.drop_dynamic ? drop_dynamic(with_graph) : without_dom(with_graph);
  outcome.with_dom = solve_mode(with_graph, baseline, truth, options, seed, "with_dom", dir);
  outcome.without_dom = solve_mode(baseline, baseline, truth, options, seed, "without_dom", dir);
  return outcome;
}

ordered_json outcome_json(const SeedOutcome& o) {
  ordered_json j;
  j["seed"] = o.seed;
  if (o.size > 0) j["size"] = o.size;
  j["steps"] = o.steps;
  j["ternary_factors"] = o.ternary_factors;
  j["status"] = o.ok() ? "ok" : "failed";
  if (!o.error.empty()) j["error"] = o.error;
  j["graph_sha256"] = o.graph_sha256;
  for (const auto& [name, mode] : {std::pair{"with_dom", &o.with_dom}, std::pair{"without_dom", &o.without_dom}}) {
    ordered_json m;
    m["initialization_sha256"] = mode->initialization_sha256;
    m["solved"] = mode->solved;
    if (!mode->error.empty()) m["error"] = mode->error;
    m["iterations"] = mode->report.iterations;
    m["final_cost"] = mode->report.final_cost;
    m["convergence_reason"] = to_string(mode->report.reason);
    j[name] = m;
  }
  return j;
}

std::string motion_mode_name(MotionMode mode) {
  return mode == MotionMode::kConstant ? "constant" : "per-step";
}

}  // namespace

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(parse_seed(part));
      continue;
    }
    const std::uint64_t first = parse_seed(part.substr(0, dots));
    const std::uint64_t last = parse_seed(part.substr(dots + 2));
    if (last < first) throw ConfigError("empty seed range '" + part + "'");
    if (last - first >= 1000000) throw ConfigError("seed range '" + part + "' is too large");
    for (std::uint64_t s = first; s <= last; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw ConfigError("no seeds given");
  return seeds;
}

fs::path default_output_root() {
  const char* root = std::getenv("DOMSLAM_OUTPUT_ROOT");
  return root != nullptr && *root != '\0' ? fs::path(root) : fs::path("runs");
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < length; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return sha256_hex(buffer.str());
}

ScenarioSpec make_spec(const ScenarioRequest& request, std::uint64_t seed) {
  DefaultSpecOptions defaults;
  defaults.size = request.size;
  defaults.static_points = request.static_points;
  ScenarioSpec spec = default_spec(request.experiment, defaults);
  if (request.spec_file) apply_spec_file(*request.spec_file, spec);
  for (const auto& [key, value] : request.overrides) apply_spec_override(key, value, spec);
  spec.seed = seed;
  spec.validate();
  return spec;
}

std::string stats_json(const SolveReport& report, const std::string& mode, OrderingPolicy ordering,
                       const std::string& error) {
  ordered_json j;
  j["mode"] = mode;
  j["ordering"] = to_string(ordering);
  j["status"] = error.empty() ? "ok" : "failed";
  if (!error.empty()) j["error"] = error;
  j["iterations"] = report.iterations;
  j["initial_cost"] = report.initial_cost;
  j["final_cost"] = report.final_cost;
  j["final_gradient_norm"] = report.final_gradient_norm;
  j["convergence_reason"] = to_string(report.reason);
  j["converged"] = report.converged();
  j["wall_time_seconds"] = report.wall_time_seconds;
  j["variables"] = report.variables;
  j["factors"] = report.factors;
  j["dimension"] = report.dimension;
  j["factor_nonzeros"] = report.factor_nonzeros;
  j["cost_trace"] = report.cost_trace;
  return j.dump(2) + "\n";
}

std::vector<ComparisonRow> median_comparison(const std::vector<SeedOutcome>& outcomes) {
  std::vector<std::vector<double>> without(6), with(6);
  for (const SeedOutcome& o : outcomes) {
    if (!o.ok()) continue;
    const auto a = metric_values(o.without_dom.metrics);
    const auto b = metric_values(o.with_dom.metrics);
    for (std::size_t i = 0; i < 6; ++i) {
      without[i].push_back(a[i]);
      with[i].push_back(b[i]);
    }
  }
  if (without[0].empty()) throw MetricsError("no seed completed both solves");
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < 6; ++i) {
    ComparisonRow row{kMetricNames[i], median(without[i]), median(with[i]), 0.0, false};
    row.improvement_pct = improvement_percent(row.without_dom, row.with_dom, &row.zero_baseline);
    rows.push_back(row);
  }
  return rows;
}

CompareResult run_compare(const CompareOptions& options) {
  if (options.seeds.empty()) throw ConfigError("no seeds given");
  const bool sweep = options.scenario.experiment == Experiment::kA;
  std::vector<int> sizes = options.sizes;
  if (!sweep) {
    sizes = {0};
  } else if (sizes.empty()) {
    sizes = {options.scenario.size};
  }
  const bool write = !options.output.empty();
  if (write) fs::create_directories(options.output);

  ordered_json manifest;
  manifest["subcommand"] = "compare";
  manifest["experiment"] = to_string(options.scenario.experiment);
  manifest["spec_file"] = options.scenario.spec_file ? options.scenario.spec_file->string() : "";
  manifest["seeds"] = options.seeds;
  if (sweep) manifest["sizes"] = sizes;
  manifest["modes"] = {"with-dom", "without-dom"};
  manifest["motion"] = motion_mode_name(options.motion_mode);
  manifest["ordering"] = to_string(options.solver.ordering);
  manifest["static_points"] = options.scenario.static_points;
  manifest["drop_dynamic"] = options.drop_dynamic;
  manifest["output_dir"] = options.output.string();
  manifest["started_at"] = utc_timestamp();

  CompareResult result;
  for (int size : sizes) {
    std::vector<SeedOutcome> group;
    for (std::uint64_t seed : options.seeds) {
      std::optional<fs::path> dir;
      if (write) {
        dir = options.output;
        if (sweep) *dir /= "size_" + std::to_string(size);
        *dir /= seed_dir_name(seed);
      }
      group.push_back(run_seed(options, size, seed, dir));
      manifest["runs"].push_back(outcome_json(group.back()));
    }
    for (const SeedOutcome& o : group) {
      if (!o.ok()) continue;
      const std::string label = sweep ? std::to_string(size) + ":" + std::to_string(o.seed) : std::to_string(o.seed);
      result.table.push_back({label, compare(o.without_dom.metrics, o.with_dom.metrics)});
    }
    if (sweep) {
      DifferenceRow row;
      row.size = size;
      row.steps = group.front().steps;
      row.ternary_factors = group.front().ternary_factors;
      std::vector<std::vector<double>> diffs(6);
      for (const SeedOutcome& o : group) {
        if (!o.ok()) {
          ++row.failed_seeds;
          continue;
        }
        const auto a = metric_values(o.without_dom.metrics);
        const auto b = metric_values(o.with_dom.metrics);
        for (std::size_t i = 0; i < 6; ++i) diffs[i].push_back(a[i] - b[i]);
      }
      for (auto& d : diffs) row.differences.push_back(d.empty() ? std::nan("") : median(d));
      result.differences.push_back(row);
    }
    result.outcomes.insert(result.outcomes.end(), group.begin(), group.end());
  }

  bool any_ok = false;
  for (const SeedOutcome& o : result.outcomes) any_ok = any_ok || o.ok();
  if (any_ok && !sweep) result.table.push_back({"median", median_comparison(result.outcomes)});

  if (write) {
    std::ostringstream table;
    write_comparison_csv(table, result.table);
    write_text(options.output / "comparison.csv", table.str());
    if (sweep) {
      std::ostringstream series;
      series << "size,steps,ternary_factors,ATE,ARE,ASE,allRTE,allRRE,allRSE,failed_seeds\n";
      for (const DifferenceRow& row : result.differences) {
        series << row.size << ',' << row.steps << ',' << row.ternary_factors;
        for (double d : row.differences) series << ',' << format_double(d);
        series << ',' << row.failed_seeds << '\n';
      }
      write_text(options.output / "difference_series.csv", series.str());
    }
    manifest["finished_at"] = utc_timestamp();
    write_text(options.output / "manifest.json", manifest.dump(2) + "\n");
  }
  return result;
}

}  // namespace domslam
