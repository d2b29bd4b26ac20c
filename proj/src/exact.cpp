#include "gcnsched/exact.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>

namespace gcnsched {

namespace {

using Word = std::uint64_t;

class BitSet {
 public:
  BitSet() = default;
  explicit BitSet(int n) : words_((n + 63) / 64, 0) {}

  void set(int i) { words_[i >> 6] |= Word{1} << (i & 63); }
  void reset(int i) { words_[i >> 6] &= ~(Word{1} << (i & 63)); }
  bool test(int i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  bool none() const {
    for (Word w : words_)
      if (w) return false;
    return true;
  }
  int count_and(const BitSet& o) const {
    int c = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) c += std::popcount(words_[i] & o.words_[i]);
    return c;
  }
  void and_not(const BitSet& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~o.words_[i];
  }
  void and_with(const BitSet& o) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= o.words_[i];
  }
  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      Word w = words_[i];
      while (w) {
        f(static_cast<int>(i * 64 + std::countr_zero(w)));
        w &= w - 1;
      }
    }
  }

 private:
  std::vector<Word> words_;
};

class BranchAndBound {
 public:
  BranchAndBound(const ConflictGraph& g, const VertexWeights& u, const ExactBudget& budget)
      : g_(g), u_(u), budget_(budget), n_(g.vertex_count()), adj_(n_, BitSet(n_)), closed_(n_, BitSet(n_)) {
    for (Vertex v = 0; v < n_; ++v) {
      for (Vertex nb : g.neighbors(v)) adj_[v].set(nb);
      closed_[v] = adj_[v];
      closed_[v].set(v);
    }
    // Weight-descending order used by the clique cover.
    order_.resize(n_);
    for (Vertex v = 0; v < n_; ++v) order_[v] = v;
    std::sort(order_.begin(), order_.end(), [&](Vertex a, Vertex b) { return beats(u_, a, b); });
  }

  SolveResult run() {
    const auto start = std::chrono::steady_clock::now();
    start_ = start;
    SolveResult seed = cgs(g_, u_);
    best_ = std::max(0.0, seed.utility);
    if (seed.utility > 0) best_set_ = seed.solution;
    BitSet p(n_);
    for (Vertex v = 0; v < n_; ++v)
      if (u_[v] > 0) p.set(v);
    std::vector<Vertex> current;
    search(p, 0.0, current);
    SolveResult r;
    r.solution = best_set_;
    std::sort(r.solution.begin(), r.solution.end());
    r.utility = total_utility(u_, r.solution);
    r.optimal = !aborted_;
    r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }

 private:
  bool out_of_budget() {
    if (aborted_) return true;
    if (++nodes_ > budget_.node_limit) aborted_ = true;
    if ((nodes_ & 1023) == 0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() > budget_.time_limit)
      aborted_ = true;
    return aborted_;
  }

  double clique_cover_bound(const BitSet& p) {
    cover_.clear();
    double bound = 0.0;
    for (Vertex v : order_) {
      if (!p.test(v)) continue;
      bool placed = false;
      for (auto& common : cover_) {
        if (common.test(v)) {
          common.and_with(adj_[v]);
          placed = true;
          break;
        }
      }
      if (!placed) {
        // v is the heaviest member of its clique.
        bound += u_[v];
        cover_.push_back(adj_[v]);
      }
    }
    return bound;
  }

  void search(BitSet p, double cur, std::vector<Vertex>& current) {
    if (out_of_budget()) return;
    // Take every residual vertex that has no residual neighbour.
    std::size_t taken = 0;
    int best_v = -1, best_deg = -1;
    p.for_each([&](int v) {
      const int d = adj_[v].count_and(p);
      if (d == 0) {
        current.push_back(v);
        cur += u_[v];
        ++taken;
      } else if (d > best_deg) {
        best_deg = d;
        best_v = v;
      }
    });
    for (std::size_t i = current.size() - taken; i < current.size(); ++i) p.reset(current[i]);
    if (best_v < 0) {
      if (cur > best_) {
        best_ = cur;
        best_set_ = current;
      }
      current.resize(current.size() - taken);
      return;
    }
    if (cur + clique_cover_bound(p) > best_) {
      BitSet inc = p;
      inc.and_not(closed_[best_v]);
      current.push_back(best_v);
      search(std::move(inc), cur + u_[best_v], current);
      current.pop_back();
      p.reset(best_v);
      search(std::move(p), cur, current);
    }
    current.resize(current.size() - taken);
  }

  const ConflictGraph& g_;
  const VertexWeights& u_;
  ExactBudget budget_;
  int n_;
  std::vector<BitSet> adj_, closed_;
  std::vector<Vertex> order_;
  std::vector<BitSet> cover_;
  double best_ = 0.0;
  VertexSet best_set_;
  long nodes_ = 0;
  bool aborted_ = false;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

SolveResult mwis_exact(const ConflictGraph& g, const VertexWeights& u, const ExactBudget& budget) {
  check_weights(g, u);
  if (budget.node_limit <= 0 || budget.time_limit <= 0) throw UsageError("exact budget must be positive");
  return BranchAndBound(g, u, budget).run();
}

SolveResult mwis_brute_force(const ConflictGraph& g, const VertexWeights& u) {
  check_weights(g, u);
  const int n = g.vertex_count();
  if (n > 25) throw UsageError("brute force limited to V <= 25");
  std::vector<std::uint32_t> nbmask(n, 0);
  for (Vertex v = 0; v < n; ++v)
    for (Vertex nb : g.neighbors(v)) nbmask[v] |= 1u << nb;
  double best = 0.0;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    bool ok = true;
    double s = 0.0;
    for (int v = 0; v < n && ok; ++v)
      if (mask >> v & 1) {
        ok = (nbmask[v] & mask) == 0;
        s += u[v];
      }
    if (ok && s > best) {
      best = s;
      best_mask = mask;
    }
  }
  SolveResult r;
  for (int v = 0; v < n; ++v)
    if (best_mask >> v & 1) r.solution.push_back(v);
  r.utility = total_utility(u, r.solution);
  r.optimal = true;
  return r;
}

double approximation_ratio(const SolveResult& sol, const SolveResult& opt) {
  if (!opt.optimal) throw UsageError("approximation_ratio needs an optimal reference");
  if (opt.utility <= 0.0) return 1.0;
  return sol.utility / opt.utility;
}

}  // namespace gcnsched
