#include "gcnsched/search.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

namespace gcnsched {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

VertexWeights gather(const VertexWeights& u, const std::vector<Vertex>& ids) {
  VertexWeights out(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) out[static_cast<Eigen::Index>(i)] = u[ids[i]];
  return out;
}

/// Indices 0..n-1 in greedy order of w (descending, lower index first on ties).
std::vector<int> greedy_order(const VertexWeights& w) {
  std::vector<int> idx(static_cast<std::size_t>(w.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return beats(w, a, b); });
  return idx;
}

void finish(SolveResult& r, const VertexWeights& u, Clock::time_point start) {
  std::sort(r.solution.begin(), r.solution.end());
  r.utility = total_utility(u, r.solution);
  r.elapsed = seconds_since(start);
}

}  // namespace

SearchNode SearchNode::root(const ConflictGraph& g) {
  SearchNode n;
  n.residual.assign(g.vertex_count(), 1);
  n.excluded.assign(g.vertex_count(), 0);
  return n;
}

bool SearchNode::terminal() const { return std::find(residual.begin(), residual.end(), 1) == residual.end(); }

int SearchNode::residual_count() const { return static_cast<int>(std::count(residual.begin(), residual.end(), 1)); }

VertexWeights SearchNode::residual_weights(const VertexWeights& u) const {
  VertexWeights out = VertexWeights::Zero(u.size());
  for (std::size_t v = 0; v < residual.size(); ++v)
    if (residual[v]) out[static_cast<Eigen::Index>(v)] = u[static_cast<Eigen::Index>(v)];
  return out;
}

std::vector<Vertex> SearchNode::residual_vertices() const {
  std::vector<Vertex> out;
  for (std::size_t v = 0; v < residual.size(); ++v)
    if (residual[v]) out.push_back(static_cast<Vertex>(v));
  return out;
}

SearchNode expand(const ConflictGraph& g, const SearchNode& node, Vertex v) {
  if (v < 0 || v >= g.vertex_count() || !node.residual[v])
    throw UsageError("expand: vertex " + std::to_string(v) + " is not in the residual graph");
  SearchNode child = node;
  child.residual[v] = 0;
  child.partial.push_back(v);
  for (Vertex nb : g.neighbors(v)) {
    if (child.residual[nb]) child.residual[nb] = 0;
    // A neighbour of a scheduled vertex can never be scheduled itself.
    child.excluded[nb] = 1;
  }
  return child;
}

Eigen::VectorXd residual_embedding(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model,
                                   const SearchNode& node, InducedSubgraph* sub_out) {
  InducedSubgraph sub = induced_subgraph(g, node.residual);
  const VertexWeights u_sub = gather(u, sub.to_parent);
  Eigen::VectorXd z = embed(sub.graph, u_sub, model);
  if (sub_out) *sub_out = std::move(sub);
  return z;
}

SolveResult gcn_crs(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model,
                    const RolloutConfig& cfg) {
  return gcn_crs(g, u, [&model](const ConflictGraph& sub, const VertexWeights& us) { return embed(sub, us, model); },
                 cfg);
}

SolveResult gcn_crs(const ConflictGraph& g, const VertexWeights& u, const ResidualEmbedder& embedder,
                    const RolloutConfig& cfg) {
  const auto start = Clock::now();
  check_weights(g, u);
  if (cfg.branching < 1) throw UsageError("gcn_crs: branching must be >= 1");
  std::mt19937_64 rng(cfg.seed);
  SearchNode node = SearchNode::root(g);
  SolveResult r;
  while (!node.terminal()) {
    const InducedSubgraph sub = induced_subgraph(g, node.residual);
    const VertexWeights u_sub = gather(u, sub.to_parent);
    const Eigen::VectorXd z = embedder(sub.graph, u_sub);
    const VertexWeights w_sub = z.cwiseProduct(u_sub);
    std::vector<int> order = greedy_order(w_sub);
    std::vector<Vertex> candidates;
    for (int i = 0; i < std::min<int>(cfg.branching, static_cast<int>(order.size())); ++i)
      candidates.push_back(sub.to_parent[order[i]]);
    if (cfg.fortify) {
      const Vertex top = sub.to_parent[greedy_order(u_sub).front()];
      if (std::find(candidates.begin(), candidates.end(), top) == candidates.end()) candidates.push_back(top);
    }
    Vertex chosen = -1;
    double best_q = -std::numeric_limits<double>::infinity();
    int ties = 0;
    for (Vertex cand : candidates) {
      const SearchNode child = expand(g, node, cand);
      VertexSet tail;
      if (cfg.variant == RolloutVariant::kVanilla) {
        tail = cgs_masked(g, u, child.residual);
      } else if (!child.terminal()) {
        const InducedSubgraph child_sub = induced_subgraph(g, child.residual);
        const Eigen::VectorXd z2 = embedder(child_sub.graph, gather(u, child_sub.to_parent));
        VertexWeights w_full = VertexWeights::Zero(g.vertex_count());
        for (std::size_t i = 0; i < child_sub.to_parent.size(); ++i) {
          const Vertex p = child_sub.to_parent[i];
          w_full[p] = z2[static_cast<Eigen::Index>(i)] * u[p];
        }
        tail = cgs_masked(g, w_full, child.residual);
      }
      const double q = u[cand] + total_utility(u, tail);
      if (q > best_q) {
        best_q = q;
        chosen = cand;
        ties = 1;
      } else if (q == best_q) {
        if (cfg.random_ties) {
          // Reservoir sampling over the tied candidates.
          if (std::uniform_int_distribution<int>(0, ties)(rng) == 0) chosen = cand;
          ++ties;
        } else if (cand < chosen) {
          chosen = cand;
        }
      }
    }
    node = expand(g, node, chosen);
  }
  r.solution = node.partial;
  finish(r, u, start);
  return r;
}

SolveResult gcn_cgs_search(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model, double epsilon,
                           std::uint64_t seed, std::vector<SearchTransition>* episode) {
  const auto start = Clock::now();
  check_weights(g, u);
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw UsageError("gcn_cgs_search: epsilon outside [0,1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  SearchNode node = SearchNode::root(g);
  while (!node.terminal()) {
    InducedSubgraph sub;
    const Eigen::VectorXd z = residual_embedding(g, u, model, node, &sub);
    int pick = 0;
    if (epsilon > 0.0 && coin(rng) < epsilon) {
      pick = std::uniform_int_distribution<int>(0, static_cast<int>(sub.to_parent.size()) - 1)(rng);
    } else {
      for (int i = 1; i < z.size(); ++i)
        if (z[i] > z[pick]) pick = i;
    }
    SearchNode child = expand(g, node, sub.to_parent[pick]);
    if (episode) episode->push_back({node.residual, sub.to_parent[pick], child.residual, child.terminal()});
    node = std::move(child);
  }
  SolveResult r;
  r.solution = node.partial;
  finish(r, u, start);
  return r;
}

namespace {

struct QueuedNode {
  std::vector<char> residual;
  VertexSet partial;
};

struct CrtsShared {
  std::mutex mu;
  std::condition_variable cv;
  std::vector<QueuedNode> queue;
  int active = 0;
  bool stop = false;
  double best = -std::numeric_limits<double>::infinity();
  VertexSet best_set;
  std::vector<TracePoint> trace;
  long descents = 0;
};

}  // namespace

CrtsResult gcn_crts(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model, const CrtsConfig& cfg) {
  const auto start = Clock::now();
  check_weights(g, u);
  if (model.output != OutputKind::kCrtsLogits) throw UsageError("gcn_crts needs a crts-logits model");
  if (!(cfg.backtrack_prob >= 0.0 && cfg.backtrack_prob <= 1.0)) throw UsageError("gcn_crts: p_b outside [0,1]");
  if (cfg.threads < 1) throw UsageError("gcn_crts: threads must be >= 1");
  if (cfg.timeout < 0.0) throw UsageError("gcn_crts: negative timeout");
  CrtsShared shared;
  shared.queue.push_back({std::vector<char>(g.vertex_count(), 1), {}});

  auto worker = [&](int id) {
    std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(id)};
    std::mt19937_64 rng(seq);
    std::bernoulli_distribution backtrack(cfg.backtrack_prob);
    for (;;) {
      QueuedNode node;
      {
        std::unique_lock lock(shared.mu);
        shared.cv.wait(lock, [&] { return shared.stop || !shared.queue.empty() || shared.active == 0; });
        if (shared.stop || shared.queue.empty()) {
          shared.cv.notify_all();
          return;
        }
        const std::size_t i = std::uniform_int_distribution<std::size_t>(0, shared.queue.size() - 1)(rng);
        std::swap(shared.queue[i], shared.queue.back());
        node = std::move(shared.queue.back());
        shared.queue.pop_back();
        ++shared.active;
      }

      std::vector<QueuedNode> siblings;
      const InducedSubgraph sub = induced_subgraph(g, node.residual);
      if (!sub.to_parent.empty()) {
        const VertexWeights u_sub = gather(u, sub.to_parent);
        const Eigen::MatrixXd z = forward_crts(sub.graph, u_sub, model);
        const int col = std::uniform_int_distribution<int>(0, static_cast<int>(z.cols()) - 1)(rng);
        const VertexWeights w = z.col(col).cwiseProduct(u_sub);
        std::vector<char>& alive = node.residual;
        for (int i : greedy_order(w)) {
          const Vertex v = sub.to_parent[i];
          if (!alive[v]) continue;  // inconsistent with the partial solution
          if (cfg.backtrack_prob > 0.0 && backtrack(rng)) {
            QueuedNode sib{alive, node.partial};
            sib.residual[v] = 0;
            if (std::find(sib.residual.begin(), sib.residual.end(), 1) != sib.residual.end())
              siblings.push_back(std::move(sib));
          }
          node.partial.push_back(v);
          alive[v] = 0;
          for (Vertex nb : g.neighbors(v)) alive[nb] = 0;
        }
      }
      const double util = total_utility(u, node.partial);

      std::lock_guard lock(shared.mu);
      for (auto& s : siblings) shared.queue.push_back(std::move(s));
      ++shared.descents;
      if (util > shared.best) {
        shared.best = util;
        shared.best_set = node.partial;
        shared.trace.push_back({seconds_since(start), util});
      }
      --shared.active;
      if (seconds_since(start) >= cfg.timeout || (cfg.max_descents > 0 && shared.descents >= cfg.max_descents))
        shared.stop = true;
      shared.cv.notify_all();
    }
  };

  if (cfg.threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < cfg.threads; ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
  }

  CrtsResult out;
  out.result.solution = shared.best_set;
  finish(out.result, u, start);
  out.trace = std::move(shared.trace);
  out.descents = shared.descents;
  out.exhausted = shared.queue.empty();
  return out;
}

}  // namespace gcnsched
