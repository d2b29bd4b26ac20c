#include "gcnsched/solvers.hpp"

#include <charconv>
#include <random>

#include "gcnsched/distributed.hpp"

namespace gcnsched {

namespace {

/// "lgs-3" -> 3; -1 when `name` is not prefix + positive integer.
int truncation(const std::string& name, const std::string& prefix) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return -1;
  int n = 0;
  const char* first = name.data() + prefix.size();
  const char* last = name.data() + name.size();
  auto [ptr, ec] = std::from_chars(first, last, n);
  return (ec == std::errc{} && ptr == last && n >= 1) ? n : -1;
}

std::shared_ptr<const GcnModeld> need(const std::shared_ptr<const GcnModeld>& m, const std::string& name,
                                      const char* what) {
  if (!m) throw UsageError("solver " + name + " needs a " + what + " model");
  return m;
}

}  // namespace

std::vector<std::string> known_solvers() {
  return {"cgs",       "lgs",     "lgs-N",     "gcn-lgs",    "gcn-lgs-N",  "gcn-lgs-it", "gcn-crs-v", "gcn-crs-e",
          "gcn-cgs",   "gcn-crts", "random-lgs", "random-crs", "mlp-lgs",    "mlp-crs",    "exact"};
}

SolverFn make_solver(const std::string& name, const SolverModels& models, const SolverOptions& opts) {
  if (name == "cgs") return [](const ConflictGraph& g, const VertexWeights& u, std::uint64_t) { return cgs(g, u); };
  if (name == "lgs") return [](const ConflictGraph& g, const VertexWeights& u, std::uint64_t) { return lgs(g, u); };
  if (int n = truncation(name, "lgs-"); n > 0)
    return [n](const ConflictGraph& g, const VertexWeights& u, std::uint64_t) { return lgs_truncated(g, u, n); };
  if (name == "exact") {
    const ExactBudget b = opts.exact;
    return [b](const ConflictGraph& g, const VertexWeights& u, std::uint64_t) { return mwis_exact(g, u, b); };
  }
  if (name == "gcn-lgs" || name == "mlp-lgs") {
    const auto src = name == "gcn-lgs" ? EmbeddingSource::gcn(need(models.gcn, name, "gcn"))
                                       : EmbeddingSource::mlp(need(models.mlp, name, "mlp"));
    return [src](const ConflictGraph& g, const VertexWeights& u, std::uint64_t) { return gcn_lgs(g, u, src); };
  }
  if (int n = truncation(name, "gcn-lgs-"); n > 0) {
    const auto src = EmbeddingSource::gcn(need(models.gcn, name, "gcn"));
    return [src, n](const ConflictGraph& g, const VertexWeights& u, std::uint64_t) { return gcn_lgs(g, u, src, n); };
  }
  if (name == "random-lgs")
    return [](const ConflictGraph& g, const VertexWeights& u, std::uint64_t seed) {
      return gcn_lgs(g, u, EmbeddingSource::random(seed));
    };
  if (name == "gcn-lgs-it") {
    const auto m = need(models.gcn, name, "gcn");
    return [m](const ConflictGraph& g, const VertexWeights& u, std::uint64_t) { return gcn_lgs_it(g, u, *m); };
  }
  if (name == "gcn-crs-v" || name == "gcn-crs-e" || name == "mlp-crs") {
    const auto m = name == "mlp-crs" ? need(models.mlp, name, "mlp") : need(models.gcn, name, "gcn");
    RolloutConfig rc;
    rc.branching = opts.branching;
    rc.fortify = opts.fortify;
    rc.variant = name == "gcn-crs-e" ? RolloutVariant::kEnhanced : RolloutVariant::kVanilla;
    return [m, rc](const ConflictGraph& g, const VertexWeights& u, std::uint64_t seed) {
      RolloutConfig c = rc;
      c.seed = seed;
      return gcn_crs(g, u, *m, c);
    };
  }
  if (name == "random-crs") {
    RolloutConfig rc;
    rc.branching = opts.branching;
    rc.fortify = opts.fortify;
    return [rc](const ConflictGraph& g, const VertexWeights& u, std::uint64_t seed) {
      RolloutConfig c = rc;
      c.seed = seed;
      std::mt19937_64 rng(seed);
      ResidualEmbedder random_z = [&rng](const ConflictGraph& sub, const VertexWeights&) {
        std::normal_distribution<double> dist(1.0, 0.2);
        Eigen::VectorXd z(sub.vertex_count());
        for (auto& x : z) x = dist(rng);
        return z;
      };
      return gcn_crs(g, u, random_z, c);
    };
  }
  if (name == "gcn-cgs") {
    const auto m = need(models.qnet, name, "q-values");
    return [m](const ConflictGraph& g, const VertexWeights& u, std::uint64_t) { return gcn_cgs_search(g, u, *m, 0.0, 0); };
  }
  if (name == "gcn-crts") {
    const auto m = need(models.crts, name, "crts");
    const CrtsConfig cc = opts.crts;
    return [m, cc](const ConflictGraph& g, const VertexWeights& u, std::uint64_t seed) {
      CrtsConfig c = cc;
      c.seed = seed;
      return gcn_crts(g, u, *m, c).result;
    };
  }
  throw UsageError("unknown solver \"" + name + "\"");
}

}  // namespace gcnsched
