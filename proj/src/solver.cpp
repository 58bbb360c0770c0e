#include "domslam/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/CholmodSupport>

namespace domslam {

std::string to_string(ConvergenceReason reason) {
  switch (reason) {
    case ConvergenceReason::kGradient:
      return "gradient";
    case ConvergenceReason::kCostChange:
      return "cost_change";
    case ConvergenceReason::kStepNorm:
      return "step_norm";
    case ConvergenceReason::kMaxIterations:
      return "max_iterations";
    case ConvergenceReason::kSingular:
      return "singular";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
  if (!(initial_lambda > 0.0) || !(max_lambda > initial_lambda)) {
    throw ConfigError("damping must satisfy 0 < initial_lambda < max_lambda");
  }
  if (!(lambda_up > 1.0) || !(lambda_down > 1.0)) throw ConfigError("damping factors must exceed 1");
  if (!(cost_change_tolerance > 0.0) || !(step_tolerance > 0.0) || !(gradient_tolerance > 0.0)) {
    throw ConfigError("tolerances must be positive");
  }
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct WhitenedGraph {
  const FactorGraph& graph;
  std::vector<Eigen::MatrixXd> weights;

  explicit WhitenedGraph(const FactorGraph& g) : graph(g) {
    weights.reserve(g.factors().size());
    for (const Factor& f : g.factors()) weights.push_back(whitening(f));
  }

  double cost(const Estimates& values) const {
    double total = 0.0;
    const auto& factors = graph.factors();
    for (std::size_t i = 0; i < factors.size(); ++i) {
      total += 0.5 * (weights[i] * factor_residual(factors[i], values)).squaredNorm();
    }
    return total;
  }

  LinearSystem linearize(const Estimates& values, const VariableLayout& layout) const {
    const auto& factors = graph.factors();
    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<FactorLinearization> linearized;
    linearized.reserve(factors.size());
    int rows = 0;
    std::size_t entries = 0;
    for (const Factor& f : factors) {
      linearized.push_back(factor_jacobians(f, values));
      rows += static_cast<int>(linearized.back().residual.size());
      for (const auto& block : linearized.back().blocks) entries += block.block.size();
    }
    triplets.reserve(entries);

    LinearSystem system;
    system.residual.resize(rows);
    int row = 0;
    for (std::size_t i = 0; i < factors.size(); ++i) {
      const FactorLinearization& lin = linearized[i];
      const Eigen::MatrixXd& w = weights[i];
      const int dim = static_cast<int>(lin.residual.size());
      system.residual.segment(row, dim) = w * lin.residual;
      for (const JacobianBlock& block : lin.blocks) {
        auto it = layout.block_index.find(block.variable);
        if (it == layout.block_index.end()) continue;  // anchored
        const int col0 = layout.offsets[it->second];
        const Eigen::MatrixXd whitened = w * block.block;
        // Explicit zeros are kept so the pattern depends only on the graph.
        for (int c = 0; c < whitened.cols(); ++c) {
          for (int r = 0; r < whitened.rows(); ++r) {
            triplets.emplace_back(row + r, col0 + c, whitened(r, c));
          }
        }
      }
      row += dim;
    }
    system.jacobian.resize(rows, layout.dimension);
    system.jacobian.setFromTriplets(triplets.begin(), triplets.end());
    return system;
  }
};

double state_norm(const Estimates& values) {
  double sq = 0.0;
  for (const auto& [id, p] : values.poses) sq += logmap(p, PiPolicy::kPickCanonical).squaredNorm();
  for (const auto& [id, l] : values.landmarks) sq += l.squaredNorm();
  for (const auto& [id, m] : values.motions) sq += logmap(m, PiPolicy::kPickCanonical).squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

LinearSystem linearize(const FactorGraph& graph, const Estimates& values, const VariableLayout& layout) {
  return WhitenedGraph(graph).linearize(values, layout);
}

Estimates retract(const Estimates& values, const VariableLayout& layout, const Eigen::VectorXd& delta) {
  Estimates out = values;
  for (std::size_t b = 0; b < layout.order.size(); ++b) {
    const VariableKey& key = layout.order[b];
    const int offset = layout.offsets[b];
    switch (key.kind) {
      case VariableKind::kRobotPose: {
        Pose& p = out.poses.at(key.id);
        p = p * expmap(delta.segment<6>(offset));
        break;
      }
      case VariableKind::kLandmark:
        out.landmarks.at(key.id) += delta.segment<3>(offset);
        break;
      case VariableKind::kMotion: {
        Pose& m = out.motions.at(key.id);
        m = m * expmap(delta.segment<6>(offset));
        break;
      }
    }
  }
  return out;
}

SolveResult solve(const FactorGraph& graph, const SolverConfig& config) {
  config.validate();
  graph.validate();
  const auto start = std::chrono::steady_clock::now();

  const WhitenedGraph problem(graph);
  const VariableLayout layout = ordering_permutation(graph, config.ordering);

  SolveResult result;
  SolveReport& report = result.report;
  report.variables = graph.variable_count();
  report.factors = graph.factors().size();
  report.dimension = static_cast<std::size_t>(layout.dimension);
  report.factor_nonzeros = cholesky_fill(graph, layout);

  Estimates values = graph.estimates();
  double cost = problem.cost(values);
  report.initial_cost = cost;

  auto finish = [&](ConvergenceReason reason) {
    report.reason = reason;
    report.final_cost = cost;
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  if (layout.dimension == 0) {
    finish(ConvergenceReason::kGradient);
    result.estimates = std::move(values);
    return result;
  }

  Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> cholesky;
  // Columns already follow the elimination order.
  cholesky.cholmod().nmethods = 1;
  cholesky.cholmod().method[0].ordering = CHOLMOD_NATURAL;
  cholesky.cholmod().print = 0;
  bool analyzed = false;

  double lambda = config.initial_lambda;
  LinearSystem system;
  SparseMatrix hessian;
  Eigen::VectorXd gradient;
  bool stale = true;

  auto relinearize = [&]() {
    system = problem.linearize(values, layout);
    const SparseMatrix at = system.jacobian.transpose();
    gradient = at * system.residual;
    hessian = at * system.jacobian;
    report.final_gradient_norm = gradient.lpNorm<Eigen::Infinity>();
    stale = false;
  };

  auto fail = [&](const std::string& what) {
    finish(ConvergenceReason::kSingular);
    throw SingularSystemError(what, report);
  };

  while (true) {
    if (stale) {
      relinearize();
      for (int b = 0; b < static_cast<int>(layout.order.size()); ++b) {
        const int dim = tangent_dimension(layout.order[b].kind);
        for (int c = layout.offsets[b]; c < layout.offsets[b] + dim; ++c) {
          if (hessian.coeff(c, c) == 0.0) {
            fail("singular system: " + to_string(layout.order[b]) + " is unconstrained");
          }
        }
      }
      if (report.final_gradient_norm < config.gradient_tolerance) {
        finish(ConvergenceReason::kGradient);
        break;
      }
    }
    if (report.iterations >= config.max_iterations) {
      finish(ConvergenceReason::kMaxIterations);
      break;
    }
    ++report.iterations;

    SparseMatrix damped = hessian;
    for (int c = 0; c < damped.cols(); ++c) damped.coeffRef(c, c) *= 1.0 + lambda;
    if (!analyzed) {
      cholesky.analyzePattern(damped);
      analyzed = true;
    }
    cholesky.factorize(damped);
    if (cholesky.info() != Eigen::Success) {
      report.cost_trace.push_back(cost);
      lambda *= config.lambda_up;
      if (lambda > config.max_lambda) {
        fail("singular system: Cholesky factorization failed at maximum damping");
      }
      continue;
    }

    const Eigen::VectorXd delta = cholesky.solve(-gradient);
    if (delta.norm() <= config.step_tolerance * (state_norm(values) + config.step_tolerance)) {
      report.cost_trace.push_back(cost);
      finish(ConvergenceReason::kStepNorm);
      break;
    }

    Estimates candidate = retract(values, layout, delta);
    const double candidate_cost = problem.cost(candidate);
    if (std::isfinite(candidate_cost) && candidate_cost < cost) {
      const double decrease = cost - candidate_cost;
      values = std::move(candidate);
      cost = candidate_cost;
      stale = true;
      lambda = std::max(lambda / config.lambda_down, 1e-20);
      report.cost_trace.push_back(cost);
      if (decrease < config.cost_change_tolerance * (cost + decrease)) {
        relinearize();
        finish(ConvergenceReason::kCostChange);
        break;
      }
    } else {
      report.cost_trace.push_back(cost);
      lambda *= config.lambda_up;
      if (lambda > config.max_lambda) {
        relinearize();
        finish(ConvergenceReason::kStepNorm);
        break;
      }
    }
  }

  result.estimates = std::move(values);
  return result;
}

}  // namespace domslam
