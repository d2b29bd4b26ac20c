#pragma once

#include <cstdint>
#include <memory>

#include "gcnsched/gcn.hpp"
#include "gcnsched/greedy.hpp"

namespace gcnsched {

/// Where the per-vertex scaling z comes from.
struct EmbeddingSource {
  enum class Kind { kGcn, kMlp, kRandom, kConstant, kCached };
  Kind kind = Kind::kConstant;
  std::shared_ptr<const GcnModeld> model;  // kGcn, kMlp
  double mean = 1.0, stddev = 0.2;         // kRandom
  std::uint64_t seed = 0;                  // kRandom
  Eigen::VectorXd cache;                   // kCached

  static EmbeddingSource constant() { return {}; }
  static EmbeddingSource gcn(std::shared_ptr<const GcnModeld> m);
  static EmbeddingSource mlp(std::shared_ptr<const GcnModeld> m);
  static EmbeddingSource random(std::uint64_t seed, double mean = 1.0, double stddev = 0.2);
  static EmbeddingSource cached(Eigen::VectorXd z);

  /// Extra exchange rounds spent producing z: L for a fresh GCN, 0 otherwise
  /// (degree-only perceptron, random, constant and cached embeddings are local).
  int extra_rounds() const;
};

/// z for graph g. Throws ShapeError when a cached vector has the wrong length.
Eigen::VectorXd resolve_embedding(const EmbeddingSource& source, const ConflictGraph& g, const VertexWeights& u);

/// lgs on w = z * u, utility scored with u; rounds include extra_rounds().
SolveResult gcn_lgs(const ConflictGraph& g, const VertexWeights& u, const EmbeddingSource& source,
                    int max_rounds = kUnbounded);

/// Embedding recomputed on the residual graph before every selection round;
/// each outer iteration costs L + 1 rounds.
SolveResult gcn_lgs_it(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model,
                       int max_outer = kUnbounded);

}  // namespace gcnsched
