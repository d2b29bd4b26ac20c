#include "doctest.h"

#include <memory>

#include "gcnsched/distributed.hpp"
#include "gcnsched/exact.hpp"
#include "oracles.hpp"

using namespace gcnsched;

namespace {

std::shared_ptr<const GcnModeld> shared(GcnModeld m) { return std::make_shared<const GcnModeld>(std::move(m)); }

GcnModeld identity1() {
  const std::vector<int> dims{1, 1};
  return identity_gcn<double>(dims, OutputKind::kScalarEmbedding, FeatureMode::kConstant);
}

ConflictGraph random_instance(int s) {
  const int v = 10 + s % 50;
  return s % 2 ? gen_er(v, 0.05 + 0.01 * (s % 20), s) : gen_ba(v, 1 + s % 4, s);
}

}  // namespace

TEST_CASE("constant embedding reproduces local greedy exactly") {
  for (int s = 0; s < 300; ++s) {
    const auto g = random_instance(s);
    const auto u = uniform_weights(g.vertex_count(), s);
    const auto a = gcn_lgs(g, u, EmbeddingSource::constant());
    const auto b = lgs(g, u);
    CHECK(a.solution == b.solution);
    CHECK(a.rounds == b.rounds);
    CHECK(a.messages == b.messages);
  }
}

TEST_CASE("identity-start GCN(1) selects like local greedy with L extra rounds") {
  const auto src = EmbeddingSource::gcn(shared(identity1()));
  for (int s = 0; s < 100; ++s) {
    const auto g = random_instance(s);
    const auto u = uniform_weights(g.vertex_count(), s);
    const auto a = gcn_lgs(g, u, src);
    const auto b = lgs(g, u);
    CHECK(a.solution == b.solution);
    CHECK(a.rounds == b.rounds + 1);
    CHECK(a.messages == b.messages);
  }
}

TEST_CASE("embedding sources") {
  const auto g = gen_er(7, 0.3, 1);
  const VertexWeights u = uniform_weights(7, 2);
  CHECK(resolve_embedding(EmbeddingSource::constant(), g, u) == Eigen::VectorXd::Ones(7));

  const auto big = ConflictGraph(10000);
  const VertexWeights ub = VertexWeights::Ones(10000);
  const auto src = EmbeddingSource::random(42);
  const Eigen::VectorXd z = resolve_embedding(src, big, ub);
  CHECK(z == resolve_embedding(src, big, ub));
  CHECK(std::abs(z.mean() - 1.0) < 0.05);
  CHECK(src.extra_rounds() == 0);

  const Eigen::VectorXd cache = uniform_weights(7, 3);
  const auto cached = EmbeddingSource::cached(cache);
  const auto perturbed = perturb_edges(g, 0.5, 4).graph;
  CHECK(resolve_embedding(cached, perturbed, u) == cache);
  CHECK_THROWS_AS(resolve_embedding(cached, gen_er(8, 0.3, 1), uniform_weights(8, 1)), ShapeError);
  CHECK_THROWS_AS(gcn_lgs(gen_er(8, 0.3, 1), uniform_weights(8, 1), cached), ShapeError);
  CHECK(gcn_lgs(g, u, cached).rounds == lgs(g, cache.cwiseProduct(u), u).rounds);

  const std::vector<int> mlp_dims{2, 32, 32, 32, 32, 1};
  const auto mlp = make_gcn<double>(mlp_dims, OutputKind::kScalarEmbedding, FeatureMode::kDegree, 1, Aggregation::kNone);
  CHECK(EmbeddingSource::mlp(shared(mlp)).extra_rounds() == 0);
  CHECK_THROWS_AS(EmbeddingSource::mlp(shared(identity1())), UsageError);
  const std::vector<int> deep{1, 4, 4, 1};
  const auto gcn3 = make_gcn<double>(deep, OutputKind::kScalarEmbedding, FeatureMode::kConstant, 1);
  CHECK(EmbeddingSource::gcn(shared(gcn3)).extra_rounds() == 3);
}

TEST_CASE("fresh GCN rounds add the depth, cached embedding adds nothing") {
  const std::vector<int> dims{1, 8, 8, 1};
  const auto m = shared(make_gcn<double>(dims, OutputKind::kScalarEmbedding, FeatureMode::kConstant, 5));
  for (int s = 0; s < 50; ++s) {
    const auto g = random_instance(s);
    const auto u = uniform_weights(g.vertex_count(), s);
    const auto fresh = gcn_lgs(g, u, EmbeddingSource::gcn(m));
    const auto reuse = gcn_lgs(g, u, EmbeddingSource::cached(embed(g, u, *m)));
    CHECK(fresh.solution == reuse.solution);
    CHECK(fresh.rounds == reuse.rounds + 3);
    CHECK(g.is_independent(fresh.solution));
  }
}

TEST_CASE("iterated GCN-LGS") {
  const ConflictGraph none(9);
  const auto u = uniform_weights(9, 1);
  const auto r = gcn_lgs_it(none, u, identity1());
  CHECK(r.solution.size() == 9);
  CHECK(r.rounds == 2);

  for (int s = 0; s < 200; ++s) {
    const auto g = random_instance(s);
    const auto w = uniform_weights(g.vertex_count(), s + 1);
    const auto it = gcn_lgs_it(g, w, identity1());
    CHECK(it.solution == lgs(g, w).solution);
    CHECK(it.rounds % 2 == 0);
    CHECK(g.is_independent(it.solution));
  }
  const std::vector<int> dims{1, 8, 1};
  const auto m = make_gcn<double>(dims, OutputKind::kScalarEmbedding, FeatureMode::kConstant, 2);
  for (int s = 0; s < 50; ++s) {
    const auto g = random_instance(s);
    const auto w = uniform_weights(g.vertex_count(), s + 2);
    const auto it = gcn_lgs_it(g, w, m);
    CHECK(g.is_independent(it.solution));
    CHECK(it.rounds % 3 == 0);
    const auto cut = gcn_lgs_it(g, w, m, 1);
    CHECK(cut.rounds == 3);
  }
}

TEST_CASE("cached embedding from a perturbed topology stays feasible and degrades with perturbation") {
  const std::vector<int> dims{1, 1};
  auto m = identity1();
  m.layers[0].theta1(0, 0) = 1.0;
  const auto src = shared(m);
  std::vector<double> ar;
  for (double p : {0.0, 0.5, 1.0}) {
    double total = 0.0;
    for (int s = 0; s < 40; ++s) {
      const auto g0 = gen_er(30, 10.0 / 29, 500 + s);
      const auto gi = perturb_edges(g0, p, s).graph;
      const auto u = uniform_weights(30, s);
      const auto r = gcn_lgs(gi, u, EmbeddingSource::cached(embed(g0, u, *src)));
      REQUIRE(gi.is_independent(r.solution));
      total += approximation_ratio(r, mwis_exact(gi, u));
      if (p == 0.0) CHECK(r.solution == gcn_lgs(g0, u, EmbeddingSource::gcn(src)).solution);
    }
    ar.push_back(total / 40);
  }
  CHECK(ar[1] <= ar[0] + 0.01);
  CHECK(ar[2] <= ar[1] + 0.01);
}
