#include "gcnsched/distributed.hpp"

#include <algorithm>
#include <chrono>
#include <random>

namespace gcnsched {

EmbeddingSource EmbeddingSource::gcn(std::shared_ptr<const GcnModeld> m) {
  if (!m) throw UsageError("gcn embedding source needs a model");
  EmbeddingSource s;
  s.kind = Kind::kGcn;
  s.model = std::move(m);
  return s;
}

EmbeddingSource EmbeddingSource::mlp(std::shared_ptr<const GcnModeld> m) {
  if (!m) throw UsageError("mlp embedding source needs a model");
  if (m->aggregation != Aggregation::kNone) throw UsageError("mlp embedding source needs a model without aggregation");
  EmbeddingSource s;
  s.kind = Kind::kMlp;
  s.model = std::move(m);
  return s;
}

EmbeddingSource EmbeddingSource::random(std::uint64_t seed, double mean, double stddev) {
  EmbeddingSource s;
  s.kind = Kind::kRandom;
  s.seed = seed;
  s.mean = mean;
  s.stddev = stddev;
  return s;
}

EmbeddingSource EmbeddingSource::cached(Eigen::VectorXd z) {
  EmbeddingSource s;
  s.kind = Kind::kCached;
  s.cache = std::move(z);
  return s;
}

int EmbeddingSource::extra_rounds() const { return kind == Kind::kGcn ? model->depth() : 0; }

Eigen::VectorXd resolve_embedding(const EmbeddingSource& source, const ConflictGraph& g, const VertexWeights& u) {
  const int n = g.vertex_count();
  switch (source.kind) {
    case EmbeddingSource::Kind::kConstant:
      return Eigen::VectorXd::Ones(n);
    case EmbeddingSource::Kind::kRandom: {
      std::mt19937_64 rng(source.seed);
      std::normal_distribution<double> dist(source.mean, source.stddev);
      Eigen::VectorXd z(n);
      for (int v = 0; v < n; ++v) z[v] = dist(rng);
      return z;
    }
    case EmbeddingSource::Kind::kCached:
      if (source.cache.size() != n)
        throw ShapeError("cached embedding has length " + std::to_string(source.cache.size()) + ", graph has V=" +
                         std::to_string(n));
      return source.cache;
    case EmbeddingSource::Kind::kGcn:
    case EmbeddingSource::Kind::kMlp:
      return embed(g, u, *source.model);
  }
  return {};
}

SolveResult gcn_lgs(const ConflictGraph& g, const VertexWeights& u, const EmbeddingSource& source, int max_rounds) {
  const auto start = std::chrono::steady_clock::now();
  check_weights(g, u);
  const Eigen::VectorXd z = resolve_embedding(source, g, u);
  SolveResult r = lgs(g, z.cwiseProduct(u), u, max_rounds);
  r.rounds += source.extra_rounds();
  r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

SolveResult gcn_lgs_it(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model, int max_outer) {
  const auto start = std::chrono::steady_clock::now();
  check_weights(g, u);
  const int n = g.vertex_count();
  std::vector<char> residual(n, 1);
  int remaining = n;
  SolveResult r;
  int outer = 0;
  while (remaining > 0 && outer < max_outer) {
    const InducedSubgraph sub = induced_subgraph(g, residual);
    VertexWeights u_sub(static_cast<Eigen::Index>(sub.to_parent.size()));
    for (std::size_t i = 0; i < sub.to_parent.size(); ++i) u_sub[static_cast<Eigen::Index>(i)] = u[sub.to_parent[i]];
    const VertexWeights w = embed(sub.graph, u_sub, model).cwiseProduct(u_sub);
    // One selection round: every local maximum of w on the residual graph joins.
    std::vector<Vertex> picked;
    for (Vertex v = 0; v < sub.graph.vertex_count(); ++v) {
      bool local_max = true;
      for (Vertex nb : sub.graph.neighbors(v))
        if (!beats(w, v, nb)) {
          local_max = false;
          break;
        }
      if (local_max) picked.push_back(v);
    }
    for (Vertex v : picked) {
      const Vertex p = sub.to_parent[v];
      r.solution.push_back(p);
      if (residual[p]) --remaining;
      residual[p] = 0;
      for (Vertex nb : g.neighbors(p))
        if (residual[nb]) {
          residual[nb] = 0;
          --remaining;
        }
    }
    r.messages += static_cast<long>(picked.size());
    r.rounds += model.depth() + 1;
    ++outer;
  }
  std::sort(r.solution.begin(), r.solution.end());
  r.utility = total_utility(u, r.solution);
  r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace gcnsched
