#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "gcnsched/gcn.hpp"
#include "gcnsched/greedy.hpp"

namespace gcnsched {

/// State <G', u', v', N(v')> of the search tree over one base graph.
struct SearchNode {
  std::vector<char> residual;  // G'
  VertexSet partial;           // v', insertion order
  std::vector<char> excluded;  // N_G(v')

  static SearchNode root(const ConflictGraph& g);
  bool terminal() const;
  int residual_count() const;
  /// u restricted to the residual graph, zero elsewhere.
  VertexWeights residual_weights(const VertexWeights& u) const;
  std::vector<Vertex> residual_vertices() const;
};

/// Child reached by scheduling v: G'' = G' \ ({v} u N(v)), v'' = v' u {v}.
SearchNode expand(const ConflictGraph& g, const SearchNode& node, Vertex v);

enum class RolloutVariant { kVanilla, kEnhanced };

struct RolloutConfig {
  int branching = 32;
  RolloutVariant variant = RolloutVariant::kVanilla;
  /// Append argmax u' to the candidates so the result never falls below the
  /// guiding greedy heuristic.
  bool fortify = false;
  /// Break Q ties uniformly at random instead of by lower vertex index.
  bool random_ties = false;
  std::uint64_t seed = 0;
};

/// z' for a residual graph and its utilities u'.
using ResidualEmbedder = std::function<Eigen::VectorXd(const ConflictGraph&, const VertexWeights&)>;

/// Single root-to-terminal rollout guided by a scalar-embedding model.
SolveResult gcn_crs(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model, const RolloutConfig& cfg);
/// Same rollout with an arbitrary residual embedding (random ablation).
SolveResult gcn_crs(const ConflictGraph& g, const VertexWeights& u, const ResidualEmbedder& embedder,
                    const RolloutConfig& cfg);

/// One transition of the greedy Q-search episode.
struct SearchTransition {
  std::vector<char> residual;       // state before the action
  Vertex action = -1;               // parent id
  std::vector<char> next_residual;  // state after the action
  bool done = false;
};

/// Greedy search treating z' = Psi_{G'}(S') as per-vertex Q-values, with
/// epsilon-greedy exploration. Transitions are appended when `episode` is set.
SolveResult gcn_cgs_search(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model, double epsilon,
                           std::uint64_t seed, std::vector<SearchTransition>* episode = nullptr);

struct CrtsConfig {
  double backtrack_prob = 0.02;  // p_b
  double timeout = 10.0;         // seconds
  int threads = 1;
  /// Stop after this many depth-first descents (0 = no limit). Gives
  /// run-to-run determinism with one thread.
  long max_descents = 0;
  std::uint64_t seed = 0;
};

struct TracePoint {
  double time = 0.0;
  double utility = 0.0;
};

struct CrtsResult {
  SolveResult result;
  /// Best-so-far utility each time it improved.
  std::vector<TracePoint> trace;
  long descents = 0;
  /// True when the queue ran empty, i.e. the tree was exhausted.
  bool exhausted = false;
};

/// Random tree search: pop a random queued node, pick a random column b of
/// W' = Z' * u', descend through the residual vertices in decreasing W'(:,b)
/// order skipping inconsistent ones, and push each skipped-sibling branch
/// with probability p_b.
CrtsResult gcn_crts(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model, const CrtsConfig& cfg);

/// Residual-graph embedding z' for the node's residual vertices (order of
/// residual_vertices()).
Eigen::VectorXd residual_embedding(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model,
                                   const SearchNode& node, InducedSubgraph* sub_out = nullptr);

}  // namespace gcnsched
