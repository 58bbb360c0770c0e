#include <algorithm>
#include <numeric>

#include <camd.h>

#include "domslam/solver.hpp"

namespace domslam {

std::string to_string(OrderingPolicy policy) {
  switch (policy) {
    case OrderingPolicy::kMotionLast:
      return "motion-last";
    case OrderingPolicy::kNaturalOrder:
      return "natural";
    case OrderingPolicy::kMotionFirst:
      return "motion-first";
  }
  return "unknown";
}

namespace {

std::vector<VariableKey> free_variables(const FactorGraph& graph) {
  std::vector<VariableKey> keys;
  keys.reserve(graph.variable_count());
  for (const auto& [id, tau] : graph.poses()) {
    if (graph.fixed_poses().count(id) == 0) keys.push_back({VariableKind::kRobotPose, id});
  }
  for (const auto& [id, l] : graph.landmarks()) keys.push_back({VariableKind::kLandmark, id});
  for (const auto& [id, m] : graph.motions()) keys.push_back({VariableKind::kMotion, id});
  return keys;
}

// Symmetric block adjacency (no self loops) of the free variables, indexed
// like `keys`.
std::vector<std::vector<int>> block_adjacency(const FactorGraph& graph,
                                              const std::map<VariableKey, int>& index) {
  std::vector<std::vector<int>> adjacency(index.size());
  std::vector<int> members;
  for (const Factor& f : graph.factors()) {
    members.clear();
    for (const VariableKey& key : factor_variables(f)) {
      auto it = index.find(key);
      if (it != index.end()) members.push_back(it->second);
    }
    for (int a : members) {
      for (int b : members) {
        if (a != b) adjacency[a].push_back(b);
      }
    }
  }
  for (auto& row : adjacency) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return adjacency;
}

std::vector<int> constrained_minimum_degree(const std::vector<std::vector<int>>& adjacency,
                                            const std::vector<int>& constraint) {
  const int n = static_cast<int>(adjacency.size());
  if (n == 0) return {};
  std::vector<int> ap(n + 1, 0);
  std::vector<int> ai;
  for (int i = 0; i < n; ++i) {
    ai.insert(ai.end(), adjacency[i].begin(), adjacency[i].end());
    ap[i + 1] = static_cast<int>(ai.size());
  }
  if (ai.empty()) ai.push_back(0);  // camd rejects a null index array
  std::vector<int> perm(n);
  double control[CAMD_CONTROL];
  double info[CAMD_INFO];
  camd_defaults(control);
  const int status = camd_order(n, ap.data(), ai.data(), perm.data(), control, info, constraint.data());
  if (status != CAMD_OK && status != CAMD_OK_BUT_JUMBLED) {
    // Only reachable on allocation failure; fall back to the constraint order.
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int b) { return constraint[a] < constraint[b]; });
  }
  return perm;
}

}  // namespace

VariableLayout ordering_permutation(const FactorGraph& graph, OrderingPolicy policy) {
  const std::vector<VariableKey> keys = free_variables(graph);
  std::vector<int> perm(keys.size());
  std::iota(perm.begin(), perm.end(), 0);

  if (policy != OrderingPolicy::kNaturalOrder) {
    std::map<VariableKey, int> index;
    for (int i = 0; i < static_cast<int>(keys.size()); ++i) index.emplace(keys[i], i);
    std::vector<int> constraint(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const bool motion = keys[i].kind == VariableKind::kMotion;
      const bool early = policy == OrderingPolicy::kMotionFirst ? motion : !motion;
      constraint[i] = early ? 0 : 1;
    }
    perm = constrained_minimum_degree(block_adjacency(graph, index), constraint);
  }

  VariableLayout layout;
  layout.order.reserve(keys.size());
  layout.offsets.reserve(keys.size());
  for (int p : perm) {
    const VariableKey& key = keys[p];
    layout.block_index.emplace(key, static_cast<int>(layout.order.size()));
    layout.order.push_back(key);
    layout.offsets.push_back(layout.dimension);
    layout.dimension += tangent_dimension(key.kind);
  }
  return layout;
}

std::size_t cholesky_fill(const FactorGraph& graph, const VariableLayout& layout) {
  const int n = static_cast<int>(layout.order.size());
  const auto adjacency = block_adjacency(graph, layout.block_index);

  // Elimination tree (Liu's algorithm with path compression).
  std::vector<int> parent(n, -1);
  std::vector<int> ancestor(n, -1);
  for (int k = 0; k < n; ++k) {
    for (int i : adjacency[k]) {
      while (i != -1 && i < k) {
        const int next = ancestor[i];
        ancestor[i] = k;
        if (next == -1) parent[i] = k;
        i = next;
      }
    }
  }

  // Row k of L is the union of the etree paths from each j < k adjacent to k
  // up to k.
  std::vector<int> mark(n, -1);
  std::size_t nonzeros = 0;
  for (int k = 0; k < n; ++k) {
    const std::size_t dk = static_cast<std::size_t>(tangent_dimension(layout.order[k].kind));
    nonzeros += dk * (dk + 1) / 2;
    mark[k] = k;
    for (int j : adjacency[k]) {
      if (j > k) continue;
      for (int i = j; mark[i] != k; i = parent[i]) {
        mark[i] = k;
        nonzeros += dk * static_cast<std::size_t>(tangent_dimension(layout.order[i].kind));
      }
    }
  }
  return nonzeros;
}

}  // namespace domslam
