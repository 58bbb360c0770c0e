#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "domslam/errors.hpp"
#include "domslam/graph.hpp"

namespace domslam {

enum class OrderingPolicy {
  kMotionLast,    // fill-reducing order of poses and landmarks, then motions
  kNaturalOrder,  // poses, landmarks, motions, each by id
  kMotionFirst,   // motions, then a fill-reducing order of the rest
};

std::string to_string(OrderingPolicy policy);

/// Column layout of the free variables: the elimination order of the
/// variable blocks and the first column of each block.
struct VariableLayout {
  std::vector<VariableKey> order;
  std::vector<int> offsets;
  std::map<VariableKey, int> block_index;
  int dimension = 0;

  int offset(const VariableKey& key) const { return offsets[block_index.at(key)]; }
  bool contains(const VariableKey& key) const { return block_index.count(key) != 0; }
};

/// Orders the free (non-anchored) variables. Fill-reducing groups use
/// constrained approximate minimum degree on the variable adjacency graph.
VariableLayout ordering_permutation(const FactorGraph& graph, OrderingPolicy policy);

/// Number of nonzeros (including the diagonal) of the Cholesky factor of
/// A^T A for the given layout, counted symbolically with every variable
/// block treated as dense.
std::size_t cholesky_fill(const FactorGraph& graph, const VariableLayout& layout);

struct LinearSystem {
  Eigen::SparseMatrix<double> jacobian;  // whitened A, one column per tangent coordinate
  Eigen::VectorXd residual;              // whitened b
};

/// Stacks whitened Jacobians and residuals, one row block per factor in
/// graph order, columns in `layout` order. Anchored variables get no columns.
LinearSystem linearize(const FactorGraph& graph, const Estimates& values, const VariableLayout& layout);

struct SolverConfig {
  int max_iterations = 100;
  double initial_lambda = 1e-5;
  double lambda_up = 10.0;
  double lambda_down = 10.0;
  double max_lambda = 1e16;
  /// Converged when an accepted step lowers the cost by less than this fraction.
  double cost_change_tolerance = 1e-9;
  /// Converged when ||delta|| <= tol * (||theta|| + tol).
  double step_tolerance = 1e-9;
  /// Converged when ||A^T b||_inf falls below this.
  double gradient_tolerance = 1e-10;
  OrderingPolicy ordering = OrderingPolicy::kMotionLast;

  /// Throws ConfigError on non-positive tolerances or factors <= 1.
  void validate() const;
};

enum class ConvergenceReason {
  kGradient,
  kCostChange,
  kStepNorm,
  kMaxIterations,
  kSingular,
};

std::string to_string(ConvergenceReason reason);

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  double final_gradient_norm = 0.0;  // ||A^T b||_inf at the final estimate
  ConvergenceReason reason = ConvergenceReason::kMaxIterations;
  std::vector<double> cost_trace;  // cost after each iteration
  double wall_time_seconds = 0.0;
  std::size_t variables = 0;
  std::size_t factors = 0;
  std::size_t dimension = 0;
  std::size_t factor_nonzeros = 0;  // nnz of the Cholesky factor

  bool converged() const {
    return reason == ConvergenceReason::kGradient || reason == ConvergenceReason::kCostChange ||
           reason == ConvergenceReason::kStepNorm;
  }
};

/// Damping exceeded the limit without a successful factorization, or a
/// variable has no information at all.
class SingularSystemError : public Error {
 public:
  SingularSystemError(const std::string& what, SolveReport report)
      : Error(what), report_(std::move(report)) {}

  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

struct SolveResult {
  Estimates estimates;
  SolveReport report;
};

/// Levenberg-Marquardt on the whitened least-squares problem of `graph`,
/// starting from the estimates stored in the graph.
SolveResult solve(const FactorGraph& graph, const SolverConfig& config = {});

/// Retracts a tangent step: poses and motions x * exp(d), landmarks l + d.
Estimates retract(const Estimates& values, const VariableLayout& layout, const Eigen::VectorXd& delta);

}  // namespace domslam
