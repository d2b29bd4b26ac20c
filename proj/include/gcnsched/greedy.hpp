#pragma once

#include <limits>
#include <span>
#include <vector>

#include "gcnsched/graph.hpp"

namespace gcnsched {

struct SolveResult {
  VertexSet solution;
  /// Sum of the ORIGINAL utilities u over the solution.
  double utility = 0.0;
  /// Synchronous rounds of neighbour exchange (0 for centralized solvers).
  int rounds = 0;
  long messages = 0;
  double elapsed = 0.0;
  /// Set only by the exact solver when the search finished.
  bool optimal = false;
};

inline constexpr int kUnbounded = std::numeric_limits<int>::max();

double total_utility(const VertexWeights& u, std::span<const Vertex> set);

/// True when v precedes u in the greedy order: larger weight, lower index on ties.
inline bool beats(const VertexWeights& w, Vertex v, Vertex u) {
  return w[v] > w[u] || (w[v] == w[u] && v < u);
}

/// Centralized greedy on ranking weights w; utility is scored with u.
SolveResult cgs(const ConflictGraph& g, const VertexWeights& w, const VertexWeights& u);
inline SolveResult cgs(const ConflictGraph& g, const VertexWeights& w) { return cgs(g, w, w); }

/// Greedy restricted to vertices with alive[v] != 0. Returns the selected
/// vertices (parent ids, sorted) without scoring.
VertexSet cgs_masked(const ConflictGraph& g, const VertexWeights& w, const std::vector<char>& alive);

/// Local greedy: synchronous rounds in which each undecided vertex either
/// drops out (a neighbour joined last round) or joins (it beats every
/// neighbour still undecided last round). Stops after max_rounds.
SolveResult lgs(const ConflictGraph& g, const VertexWeights& w, const VertexWeights& u, int max_rounds = kUnbounded);
inline SolveResult lgs(const ConflictGraph& g, const VertexWeights& w, int max_rounds = kUnbounded) {
  return lgs(g, w, w, max_rounds);
}

/// lgs with max_rounds = n; throws UsageError for n < 1.
SolveResult lgs_truncated(const ConflictGraph& g, const VertexWeights& w, const VertexWeights& u, int n);
inline SolveResult lgs_truncated(const ConflictGraph& g, const VertexWeights& w, int n) {
  return lgs_truncated(g, w, w, n);
}

void check_weights(const ConflictGraph& g, const VertexWeights& w);

}  // namespace gcnsched
