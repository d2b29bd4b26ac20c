#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gcnsched {

using Vertex = int;
using Edge = std::pair<Vertex, Vertex>;
/// Per-vertex utilities u(v); always length V of the paired graph.
using VertexWeights = Eigen::VectorXd;
/// Sorted ascending, no duplicates.
using VertexSet = std::vector<Vertex>;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Undirected simple graph whose vertices are wireless links and whose edges
/// mark mutual interference. Immutable once built.
class ConflictGraph {
 public:
  ConflictGraph() = default;
  explicit ConflictGraph(int vertex_count);

  /// Throws SchemaError on self-loops, duplicate edges or out-of-range ids.
  static ConflictGraph from_edges(int vertex_count, std::span<const Edge> edges);

  int vertex_count() const { return static_cast<int>(adj_.size()); }
  int edge_count() const { return edge_count_; }
  std::span<const Vertex> neighbors(Vertex v) const { return adj_[v]; }
  int degree(Vertex v) const { return static_cast<int>(adj_[v].size()); }
  double average_degree() const {
    return adj_.empty() ? 0.0 : 2.0 * edge_count_ / static_cast<double>(adj_.size());
  }
  bool adjacent(Vertex u, Vertex v) const;

  /// Every edge once as (i, j) with i < j, lexicographically sorted.
  std::vector<Edge> edges() const;

  bool is_independent(std::span<const Vertex> set) const;

  /// Verifies symmetry, sortedness, absence of loops and duplicates.
  bool check_invariants() const;

  bool operator==(const ConflictGraph&) const = default;

 private:
  std::vector<std::vector<Vertex>> adj_;
  int edge_count_ = 0;
};

/// Residual graph restricted to `keep`, with the map back to parent ids.
struct InducedSubgraph {
  ConflictGraph graph;
  std::vector<Vertex> to_parent;
};

InducedSubgraph induced_subgraph(const ConflictGraph& g, const std::vector<char>& keep);

ConflictGraph gen_er(int vertex_count, double p, std::uint64_t seed);

/// Preferential attachment seeded by a clique on m vertices, so
/// E = m(m-1)/2 + (V-m)m. Rejects m >= V and m < 1.
ConflictGraph gen_ba(int vertex_count, int m, std::uint64_t seed);

template <typename Scalar = double>
using SparseLaplacian = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

/// I - D^{-1/2} A D^{-1/2}, with a unit diagonal for isolated vertices too.
template <typename Scalar = double>
SparseLaplacian<Scalar> normalized_laplacian(const ConflictGraph& g) {
  const int n = g.vertex_count();
  SparseLaplacian<Scalar> lap(n, n);
  Eigen::VectorXi nnz(n);
  for (int v = 0; v < n; ++v) nnz[v] = g.degree(v) + 1;
  lap.reserve(nnz);
  for (int v = 0; v < n; ++v) {
    const Scalar dv = static_cast<Scalar>(g.degree(v));
    bool diag_done = false;
    for (Vertex u : g.neighbors(v)) {
      if (!diag_done && u > v) {
        lap.insert(v, v) = Scalar(1);
        diag_done = true;
      }
      lap.insert(v, u) = -Scalar(1) / std::sqrt(dv * static_cast<Scalar>(g.degree(u)));
    }
    if (!diag_done) lap.insert(v, v) = Scalar(1);
  }
  lap.makeCompressed();
  return lap;
}

/// Expanded vertex k*V + v is base link v on channel k.
struct MultiChannelMap {
  int base_count = 0;
  int channel_count = 1;
  Vertex base(Vertex expanded) const { return expanded % base_count; }
  int channel(Vertex expanded) const { return expanded / base_count; }
  Vertex expand(Vertex base_link, int channel) const { return channel * base_count + base_link; }
  int expanded_count() const { return base_count * channel_count; }
};

struct MultiChannelGraph {
  ConflictGraph graph;
  MultiChannelMap map;
  int same_channel_edges = 0;
  int same_link_edges = 0;
};

/// Each base edge is kept on each channel independently with `retain_prob`.
/// With `same_link_clique` the K copies of one link are pairwise adjacent,
/// which enforces a single radio per link.
MultiChannelGraph multi_channel_graph(const ConflictGraph& g, int channels, double retain_prob,
                                      std::uint64_t seed, bool same_link_clique = true);

struct PerturbResult {
  ConflictGraph graph;
  int replaced = 0;
  /// Edges that had to be kept because no absent pair existed.
  int warnings = 0;
  double normalized_edit_distance() const {
    return graph.edge_count() == 0 ? 0.0 : static_cast<double>(replaced) / graph.edge_count();
  }
};

PerturbResult perturb_edges(const ConflictGraph& g, double prob, std::uint64_t seed);

VertexWeights uniform_weights(int vertex_count, std::uint64_t seed);

}  // namespace gcnsched
