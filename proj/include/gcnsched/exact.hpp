#pragma once

#include "gcnsched/greedy.hpp"

namespace gcnsched {

struct ExactBudget {
  long node_limit = 200'000'000;
  double time_limit = 60.0;  // seconds
};

/// Branch and bound for MWIS. Branches on the residual vertex of highest
/// residual degree (include first), bounds with a greedy clique cover and
/// starts from the greedy incumbent. Vertices with u <= 0 are never taken.
/// result.optimal is false when the budget ran out.
SolveResult mwis_exact(const ConflictGraph& g, const VertexWeights& u, const ExactBudget& budget = {});

/// Exhaustive enumeration over all 2^V subsets; V <= 25.
SolveResult mwis_brute_force(const ConflictGraph& g, const VertexWeights& u);

/// u(sol) / u(opt); 1 when the optimum is 0. Throws UsageError when opt is
/// not flagged optimal.
double approximation_ratio(const SolveResult& sol, const SolveResult& opt);

}  // namespace gcnsched
