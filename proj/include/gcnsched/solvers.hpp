#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "gcnsched/exact.hpp"
#include "gcnsched/gcn.hpp"
#include "gcnsched/search.hpp"

namespace gcnsched {

struct SolverModels {
  std::shared_ptr<const GcnModeld> gcn;   // scalar embedding shared by LGS / LGS-it / CRS variants
  std::shared_ptr<const GcnModeld> mlp;   // per-vertex perceptron ablation
  std::shared_ptr<const GcnModeld> qnet;  // greedy Q-search
  std::shared_ptr<const GcnModeld> crts;  // tree-search head
};

struct SolverOptions {
  int branching = 32;
  bool fortify = false;
  CrtsConfig crts;
  ExactBudget exact;
};

/// Solver bound to its models; the seed feeds randomized solvers only.
using SolverFn = std::function<SolveResult(const ConflictGraph&, const VertexWeights&, std::uint64_t seed)>;

/// Names: cgs, lgs, lgs-N, gcn-lgs, gcn-lgs-N, gcn-lgs-it, gcn-crs-v,
/// gcn-crs-e, gcn-cgs, gcn-crts, random-lgs, random-crs, mlp-lgs, mlp-crs,
/// exact. Throws UsageError for unknown names or missing models.
SolverFn make_solver(const std::string& name, const SolverModels& models, const SolverOptions& opts);

std::vector<std::string> known_solvers();

}  // namespace gcnsched
