#include "doctest.h"

#include <random>

#include "gcnsched/exact.hpp"
#include "gcnsched/search.hpp"
#include "oracles.hpp"

using namespace gcnsched;

namespace {

ConflictGraph path(int n) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return ConflictGraph::from_edges(n, e);
}

GcnModeld identity_scalar(OutputKind kind = OutputKind::kScalarEmbedding, FeatureMode f = FeatureMode::kConstant) {
  const std::vector<int> dims{1, 1};
  return identity_gcn<double>(dims, kind, f);
}

// B = 1 head whose logits are zero everywhere, so Z' is constant 0.5.
GcnModeld flat_crts(int branching = 1) {
  const std::vector<int> dims{1, 2 * branching};
  auto m = make_gcn<double>(dims, OutputKind::kCrtsLogits, FeatureMode::kUtility, 0);
  m.layers[0].theta0.setZero();
  m.layers[0].theta1.setZero();
  return m;
}

bool node_consistent(const ConflictGraph& g, const SearchNode& n) {
  for (Vertex v : n.partial)
    if (n.residual[v]) return false;
  for (int v = 0; v < g.vertex_count(); ++v)
    if (n.residual[v] && n.excluded[v]) return false;
  return g.is_independent(n.partial);
}

}  // namespace

TEST_CASE("expand examples") {
  const auto tri = gen_er(3, 1.0, 0);
  for (Vertex v = 0; v < 3; ++v) {
    const auto c = expand(tri, SearchNode::root(tri), v);
    CHECK(c.terminal());
    CHECK(c.partial == VertexSet{v});
  }
  const auto p5 = path(5);
  const auto c = expand(p5, SearchNode::root(p5), 2);
  CHECK(c.residual_vertices() == std::vector<Vertex>{0, 4});
  CHECK(c.partial == VertexSet{2});
  CHECK_THROWS_AS(expand(p5, c, 1), UsageError);
  CHECK_THROWS_AS(expand(p5, c, 2), UsageError);
  const VertexWeights u = VertexWeights::Constant(5, 2.0);
  const VertexWeights ru = c.residual_weights(u);
  CHECK(ru == (VertexWeights(5) << 2, 0, 0, 0, 2).finished());
}

TEST_CASE("random expand sequences keep node invariants") {
  std::mt19937_64 rng(5);
  for (int s = 0; s < 300; ++s) {
    const auto g = gen_er(25, 0.2, s);
    SearchNode n = SearchNode::root(g);
    while (!n.terminal()) {
      const auto res = n.residual_vertices();
      const Vertex v = res[std::uniform_int_distribution<std::size_t>(0, res.size() - 1)(rng)];
      n = expand(g, n, v);
      REQUIRE(node_consistent(g, n));
    }
  }
}

TEST_CASE("identity-guided rollout with one branch is greedy") {
  for (int s = 0; s < 200; ++s) {
    const auto g = s % 2 ? gen_er(30, 0.15, s) : gen_ba(30, 2, s);
    const auto u = uniform_weights(30, 40 + s);
    for (auto variant : {RolloutVariant::kVanilla, RolloutVariant::kEnhanced}) {
      RolloutConfig cfg;
      cfg.branching = 1;
      cfg.variant = variant;
      CHECK(gcn_crs(g, u, identity_scalar(), cfg).solution == cgs(g, u).solution);
    }
  }
}

TEST_CASE("fortified rollout never loses to greedy") {
  const std::vector<int> dims{1, 1};
  int strict = 0;
  for (int s = 0; s < 100; ++s) {
    const auto g = gen_er(30, 0.2, 800 + s);
    const auto u = uniform_weights(30, s);
    const auto m = make_gcn<double>(dims, OutputKind::kScalarEmbedding, FeatureMode::kConstant, s);
    RolloutConfig cfg;
    cfg.branching = 2;
    cfg.fortify = true;
    const auto r = gcn_crs(g, u, m, cfg);
    REQUIRE(g.is_independent(r.solution));
    const double greedy = cgs(g, u).utility;
    CHECK(r.utility >= greedy - 1e-12);
    strict += r.utility > greedy + 1e-12;
  }
  CHECK(strict > 0);
}

TEST_CASE("rollout is deterministic and independent") {
  const std::vector<int> dims{1, 8, 1};
  const auto m = make_gcn<double>(dims, OutputKind::kScalarEmbedding, FeatureMode::kConstant, 3);
  for (int s = 0; s < 20; ++s) {
    const auto g = gen_ba(40, 3, s);
    const auto u = uniform_weights(40, s);
    RolloutConfig cfg;
    cfg.branching = 4;
    cfg.variant = RolloutVariant::kEnhanced;
    const auto a = gcn_crs(g, u, m, cfg);
    const auto b = gcn_crs(g, u, m, cfg);
    CHECK(a.solution == b.solution);
    CHECK(g.is_independent(a.solution));
  }
  CHECK_THROWS_AS(gcn_crs(path(3), VertexWeights::Ones(3), m, RolloutConfig{0}), UsageError);
}

TEST_CASE("random tie-breaking still returns a feasible set") {
  const auto g = gen_er(20, 0.3, 1);
  const VertexWeights u = VertexWeights::Ones(20);
  RolloutConfig cfg;
  cfg.branching = 5;
  cfg.random_ties = true;
  for (std::uint64_t s = 0; s < 20; ++s) {
    cfg.seed = s;
    CHECK(g.is_independent(gcn_crs(g, u, identity_scalar(), cfg).solution));
  }
}

TEST_CASE("Q-search with utility as Q-values is greedy") {
  const auto model = identity_scalar(OutputKind::kQValues, FeatureMode::kUtility);
  for (int s = 0; s < 100; ++s) {
    const auto g = gen_er(30, 0.15, s);
    const auto u = uniform_weights(30, s + 7);
    std::vector<SearchTransition> ep;
    const auto r = gcn_cgs_search(g, u, model, 0.0, 1, &ep);
    CHECK(r.solution == cgs(g, u).solution);
    REQUIRE(!ep.empty());
    CHECK(ep.size() == r.solution.size());
    CHECK(ep.back().done);
    for (std::size_t i = 0; i + 1 < ep.size(); ++i) {
      CHECK_FALSE(ep[i].done);
      CHECK(ep[i].next_residual == ep[i + 1].residual);
    }
  }
}

TEST_CASE("fully random Q-search gives maximal independent sets") {
  const auto model = identity_scalar(OutputKind::kQValues, FeatureMode::kUtility);
  for (int s = 0; s < 100; ++s) {
    const auto g = gen_er(25, 0.2, s);
    const auto u = uniform_weights(25, s);
    const auto r = gcn_cgs_search(g, u, model, 1.0, s);
    REQUIRE(g.is_independent(r.solution));
    std::vector<char> covered(25, 0);
    for (Vertex v : r.solution) {
      covered[v] = 1;
      for (Vertex n : g.neighbors(v)) covered[n] = 1;
    }
    CHECK(std::count(covered.begin(), covered.end(), 0) == 0);
  }
  CHECK_THROWS_AS(gcn_cgs_search(path(2), VertexWeights::Ones(2), model, 1.5, 0), UsageError);
}

TEST_CASE("tree search with a flat head and no backtracking is greedy") {
  for (int s = 0; s < 50; ++s) {
    const auto g = gen_er(30, 0.2, s);
    const auto u = uniform_weights(30, s + 3);
    CrtsConfig cfg;
    cfg.backtrack_prob = 0.0;
    cfg.timeout = 60.0;
    const auto r = gcn_crts(g, u, flat_crts(), cfg);
    CHECK(r.result.solution == cgs(g, u).solution);
    CHECK(r.descents == 1);
    CHECK(r.exhausted);
  }
}

TEST_CASE("exhaustive tree search reaches the optimum") {
  for (int s = 0; s < 40; ++s) {
    const int v = 6 + s % 9;
    const auto g = gen_er(v, 0.3, 60 + s);
    const auto u = uniform_weights(v, s);
    CrtsConfig cfg;
    cfg.backtrack_prob = 1.0;
    cfg.timeout = 60.0;
    cfg.seed = s;
    const auto r = gcn_crts(g, u, flat_crts(2), cfg);
    CHECK(r.exhausted);
    CHECK(r.result.utility == doctest::Approx(mwis_brute_force(g, u).utility).epsilon(1e-12));
  }
}

TEST_CASE("tree search trace is monotone and threads share the queue") {
  const auto g = gen_er(60, 0.1, 9);
  const auto u = uniform_weights(60, 10);
  const std::vector<int> dims{1, 8, 4};
  const auto m = make_gcn<double>(dims, OutputKind::kCrtsLogits, FeatureMode::kUtility, 2);
  for (int threads : {1, 4}) {
    CrtsConfig cfg;
    cfg.backtrack_prob = 0.1;
    cfg.timeout = 0.3;
    cfg.threads = threads;
    const auto r = gcn_crts(g, u, m, cfg);
    REQUIRE(!r.trace.empty());
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      CHECK(r.trace[i].utility > r.trace[i - 1].utility);
      CHECK(r.trace[i].time >= r.trace[i - 1].time);
    }
    CHECK(r.result.utility == doctest::Approx(r.trace.back().utility));
    CHECK(g.is_independent(r.result.solution));
  }
}

TEST_CASE("tree search edge cases") {
  const auto g = gen_er(30, 0.2, 4);
  const auto u = uniform_weights(30, 5);
  CrtsConfig cfg;
  cfg.timeout = 0.0;
  const auto r = gcn_crts(g, u, flat_crts(), cfg);
  CHECK(r.descents >= 1);
  CHECK(g.is_independent(r.result.solution));

  cfg.timeout = 60.0;
  cfg.max_descents = 25;
  cfg.backtrack_prob = 0.3;
  cfg.seed = 17;
  const auto a = gcn_crts(g, u, flat_crts(3), cfg);
  const auto b = gcn_crts(g, u, flat_crts(3), cfg);
  CHECK(a.result.solution == b.result.solution);
  CHECK(a.descents == b.descents);

  CHECK_THROWS_AS(gcn_crts(g, u, identity_scalar(), cfg), UsageError);
  cfg.backtrack_prob = 2.0;
  CHECK_THROWS_AS(gcn_crts(g, u, flat_crts(), cfg), UsageError);
}
