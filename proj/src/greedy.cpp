#include "gcnsched/greedy.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace gcnsched {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void check_weights(const ConflictGraph& g, const VertexWeights& w) {
  if (w.size() != g.vertex_count())
    throw ShapeError("weight length " + std::to_string(w.size()) + " does not match V=" +
                     std::to_string(g.vertex_count()));
  if (!w.allFinite()) throw ShapeError("non-finite weight");
}

double total_utility(const VertexWeights& u, std::span<const Vertex> set) {
  double s = 0.0;
  for (Vertex v : set) s += u[v];
  return s;
}

VertexSet cgs_masked(const ConflictGraph& g, const VertexWeights& w, const std::vector<char>& alive) {
  std::vector<Vertex> order;
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (alive[v]) order.push_back(v);
  std::sort(order.begin(), order.end(), [&](Vertex a, Vertex b) { return beats(w, a, b); });
  std::vector<char> blocked(g.vertex_count(), 0);
  VertexSet out;
  for (Vertex v : order) {
    if (blocked[v]) continue;
    out.push_back(v);
    for (Vertex n : g.neighbors(v)) blocked[n] = 1;
  }
  std::sort(out.begin(), out.end());
  return out;
}

SolveResult cgs(const ConflictGraph& g, const VertexWeights& w, const VertexWeights& u) {
  const auto start = std::chrono::steady_clock::now();
  check_weights(g, w);
  check_weights(g, u);
  SolveResult r;
  r.solution = cgs_masked(g, w, std::vector<char>(g.vertex_count(), 1));
  r.utility = total_utility(u, r.solution);
  r.elapsed = seconds_since(start);
  return r;
}

SolveResult lgs(const ConflictGraph& g, const VertexWeights& w, const VertexWeights& u, int max_rounds) {
  const auto start = std::chrono::steady_clock::now();
  check_weights(g, w);
  check_weights(g, u);
  const int n = g.vertex_count();
  // 0 undecided, +1 scheduled, -1 muted
  std::vector<signed char> state(n, 0), next(n, 0);
  int undecided = n;
  SolveResult r;
  while (undecided > 0 && r.rounds < max_rounds) {
    next = state;
    for (Vertex v = 0; v < n; ++v) {
      if (state[v] != 0) continue;
      bool muted = false, local_max = true;
      for (Vertex nb : g.neighbors(v)) {
        if (state[nb] > 0) {
          muted = true;
          break;
        }
        if (state[nb] == 0 && !beats(w, v, nb)) local_max = false;
      }
      if (muted) {
        next[v] = -1;
        --undecided;
      } else if (local_max) {
        next[v] = 1;
        --undecided;
        ++r.messages;
      }
    }
    state.swap(next);
    ++r.rounds;
  }
  for (Vertex v = 0; v < n; ++v)
    if (state[v] > 0) r.solution.push_back(v);
  r.utility = total_utility(u, r.solution);
  r.elapsed = seconds_since(start);
  return r;
}

SolveResult lgs_truncated(const ConflictGraph& g, const VertexWeights& w, const VertexWeights& u, int n) {
  if (n < 1) throw UsageError("lgs_truncated: N must be >= 1");
  return lgs(g, w, u, n);
}

}  // namespace gcnsched
