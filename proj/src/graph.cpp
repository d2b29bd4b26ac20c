#include "gcnsched/graph.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace gcnsched {

ConflictGraph::ConflictGraph(int vertex_count) : adj_(std::max(vertex_count, 0)) {
  if (vertex_count < 0) throw SchemaError("negative vertex count");
}

ConflictGraph ConflictGraph::from_edges(int vertex_count, std::span<const Edge> edges) {
  ConflictGraph g(vertex_count);
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= vertex_count || b >= vertex_count)
      throw SchemaError("edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
    if (a == b) throw SchemaError("self-loop on vertex " + std::to_string(a));
    g.adj_[a].push_back(b);
    g.adj_[b].push_back(a);
  }
  for (Vertex v = 0; v < vertex_count; ++v) {
    auto& nb = g.adj_[v];
    std::sort(nb.begin(), nb.end());
    if (std::adjacent_find(nb.begin(), nb.end()) != nb.end())
      throw SchemaError("duplicate edge at vertex " + std::to_string(v));
  }
  g.edge_count_ = static_cast<int>(edges.size());
  return g;
}

bool ConflictGraph::adjacent(Vertex u, Vertex v) const {
  const auto& nb = adj_[u];
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<Edge> ConflictGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (Vertex v = 0; v < vertex_count(); ++v)
    for (Vertex u : adj_[v])
      if (u > v) out.emplace_back(v, u);
  return out;
}

bool ConflictGraph::is_independent(std::span<const Vertex> set) const {
  std::vector<char> in(adj_.size(), 0);
  for (Vertex v : set) {
    if (v < 0 || v >= vertex_count() || in[v]) return false;
    in[v] = 1;
  }
  for (Vertex v : set)
    for (Vertex u : adj_[v])
      if (in[u]) return false;
  return true;
}

bool ConflictGraph::check_invariants() const {
  long degree_sum = 0;
  for (Vertex v = 0; v < vertex_count(); ++v) {
    const auto& nb = adj_[v];
    if (!std::is_sorted(nb.begin(), nb.end())) return false;
    if (std::adjacent_find(nb.begin(), nb.end()) != nb.end()) return false;
    for (Vertex u : nb) {
      if (u == v || u < 0 || u >= vertex_count()) return false;
      if (!adjacent(u, v)) return false;
    }
    degree_sum += static_cast<long>(nb.size());
  }
  return degree_sum == 2L * edge_count_;
}

InducedSubgraph induced_subgraph(const ConflictGraph& g, const std::vector<char>& keep) {
  const int n = g.vertex_count();
  std::vector<Vertex> to_child(n, -1);
  InducedSubgraph out;
  for (Vertex v = 0; v < n; ++v) {
    if (keep[v]) {
      to_child[v] = static_cast<Vertex>(out.to_parent.size());
      out.to_parent.push_back(v);
    }
  }
  std::vector<Edge> edges;
  for (Vertex v : out.to_parent)
    for (Vertex u : g.neighbors(v))
      if (u > v && keep[u]) edges.emplace_back(to_child[v], to_child[u]);
  out.graph = ConflictGraph::from_edges(static_cast<int>(out.to_parent.size()), edges);
  return out;
}

ConflictGraph gen_er(int vertex_count, double p, std::uint64_t seed) {
  if (vertex_count < 0) throw UsageError("gen_er: negative vertex count");
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("gen_er: p outside [0,1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<Edge> edges;
  for (Vertex i = 0; i < vertex_count; ++i)
    for (Vertex j = i + 1; j < vertex_count; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return ConflictGraph::from_edges(vertex_count, edges);
}

ConflictGraph gen_ba(int vertex_count, int m, std::uint64_t seed) {
  if (m < 1 || m >= vertex_count)
    throw UsageError("gen_ba: need 1 <= m < V (m=" + std::to_string(m) +
                     ", V=" + std::to_string(vertex_count) + ")");
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  // Every edge contributes both endpoints, so a uniform draw is degree-proportional.
  std::vector<Vertex> endpoints;
  for (Vertex i = 0; i < m; ++i)
    for (Vertex j = i + 1; j < m; ++j) {
      edges.emplace_back(i, j);
      endpoints.push_back(i);
      endpoints.push_back(j);
    }
  std::vector<Vertex> targets;
  for (Vertex t = m; t < vertex_count; ++t) {
    targets.clear();
    while (static_cast<int>(targets.size()) < m) {
      Vertex pick;
      if (endpoints.empty()) {
        pick = std::uniform_int_distribution<Vertex>(0, t - 1)(rng);
      } else {
        std::uniform_int_distribution<std::size_t> idx(0, endpoints.size() - 1);
        pick = endpoints[idx(rng)];
      }
      if (std::find(targets.begin(), targets.end(), pick) == targets.end()) targets.push_back(pick);
    }
    for (Vertex s : targets) {
      edges.emplace_back(s, t);
      endpoints.push_back(s);
      endpoints.push_back(t);
    }
  }
  return ConflictGraph::from_edges(vertex_count, edges);
}

MultiChannelGraph multi_channel_graph(const ConflictGraph& g, int channels, double retain_prob,
                                      std::uint64_t seed, bool same_link_clique) {
  if (channels < 1) throw UsageError("multi_channel_graph: need K >= 1");
  if (!(retain_prob >= 0.0 && retain_prob <= 1.0))
    throw UsageError("multi_channel_graph: retain_prob outside [0,1]");
  MultiChannelGraph out;
  out.map = MultiChannelMap{g.vertex_count(), channels};
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(retain_prob);
  std::vector<Edge> edges;
  for (auto [a, b] : g.edges())
    for (int k = 0; k < channels; ++k)
      if (coin(rng)) {
        edges.emplace_back(out.map.expand(a, k), out.map.expand(b, k));
        ++out.same_channel_edges;
      }
  if (same_link_clique) {
    for (Vertex v = 0; v < g.vertex_count(); ++v)
      for (int k1 = 0; k1 < channels; ++k1)
        for (int k2 = k1 + 1; k2 < channels; ++k2) {
          edges.emplace_back(out.map.expand(v, k1), out.map.expand(v, k2));
          ++out.same_link_edges;
        }
  }
  out.graph = ConflictGraph::from_edges(out.map.expanded_count(), edges);
  return out;
}

PerturbResult perturb_edges(const ConflictGraph& g, double prob, std::uint64_t seed) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw UsageError("perturb_edges: prob outside [0,1]");
  const int n = g.vertex_count();
  const auto original = g.edges();
  std::set<Edge> current(original.begin(), original.end());
  const long total_pairs = static_cast<long>(n) * (n - 1) / 2;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(prob);
  PerturbResult out;
  for (const Edge& e : original) {
    if (!coin(rng)) continue;
    // Absent pairs other than e itself once e is removed.
    const long absent = total_pairs - static_cast<long>(current.size());
    if (absent <= 0) {
      ++out.warnings;
      continue;
    }
    current.erase(e);
    Edge pick;
    if (absent * 4 >= total_pairs) {
      std::uniform_int_distribution<Vertex> vd(0, n - 1);
      do {
        Vertex a = vd(rng), b = vd(rng);
        pick = {std::min(a, b), std::max(a, b)};
      } while (pick.first == pick.second || pick == e || current.count(pick));
    } else {
      std::vector<Edge> pool;
      for (Vertex a = 0; a < n; ++a)
        for (Vertex b = a + 1; b < n; ++b)
          if (Edge c{a, b}; c != e && !current.count(c)) pool.push_back(c);
      pick = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
    }
    current.insert(pick);
    ++out.replaced;
  }
  std::vector<Edge> edges(current.begin(), current.end());
  out.graph = ConflictGraph::from_edges(n, edges);
  return out;
}

VertexWeights uniform_weights(int vertex_count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  VertexWeights w(vertex_count);
  for (int v = 0; v < vertex_count; ++v) w[v] = dist(rng);
  return w;
}

}  // namespace gcnsched
