#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gcnsched/gcn.hpp"
#include "gcnsched/greedy.hpp"

namespace gcnsched {

/// Solver fed with w = z * u when scoring a scalar embedding.
enum class Downstream {
  kLgs,      // local greedy
  kCrsStep,  // full rollout with the model as guide (vanilla, cfg branching)
};

struct TrainSample {
  const ConflictGraph* graph = nullptr;
  VertexWeights u;
  Eigen::VectorXd z;
  std::vector<char> selected;  // indicator of v_hat
  double gamma = 0.0;
  bool skipped = false;  // greedy utility was zero
  ForwardTape<double> tape;
};

/// gamma = u(g_d(G, z * u)) / u(cgs(G, u)). Records the tape for backward().
TrainSample compute_reward(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model,
                           Downstream downstream = Downstream::kLgs, int crs_branching = 32);

/// Mean over non-skipped samples of gamma_i * dPsi/dXi . v_hat_i.
GcnGradient<double> dpg_gradient(const std::vector<TrainSample>& batch, const GcnModeld& model);

/// Xi <- Xi + alpha * dpg_gradient(batch). Returns the number of samples used.
int dpg_step(const std::vector<TrainSample>& batch, GcnModeld& model, double alpha);

enum class Optimizer {
  kSgd,   // plain steps, optional heavy-ball momentum
  kAdam,  // per-parameter normalized steps
};

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 32;
  int epochs = 25;
  double validation_fraction = 0.05;
  std::uint64_t seed = 0;
  /// Heavy-ball momentum; 0 gives plain SGD. Velocity is cleared at every
  /// epoch boundary when reset_each_epoch is set.
  double momentum = 0.0;
  bool reset_each_epoch = true;
  /// Adam moments are cleared at epoch boundaries under the same flag.
  Optimizer optimizer = Optimizer::kSgd;
  double adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  int workers = 1;
  Downstream downstream = Downstream::kLgs;
  int crs_branching = 8;
  /// Validation draws this many utility vectors per validation graph.
  int validation_draws = 4;

  // Q-learning (gcn_cgs_search) settings.
  double epsilon_decay = 0.999;
  double epsilon_min = 0.05;
  int buffer_capacity = 10000;
  int episodes_per_epoch = 200;

  void validate() const;
};

struct TrainLogRow {
  int epoch = 0;
  double mean_train_gamma = 0.0;
  double mean_val_gamma = 0.0;
  long skipped = 0;
};

struct TrainResult {
  GcnModeld model;  // best on validation
  double initial_val_gamma = 0.0;
  double best_val_gamma = 0.0;
  long used = 0, skipped = 0;
  std::vector<TrainLogRow> log;
};

/// Splits `graphs` into train/validation by seed (at least one validation
/// graph; fewer than two graphs is a configuration error). Utilities are
/// drawn U(0,1) afresh for every training pass.
TrainResult dpg_train(const std::vector<ConflictGraph>& graphs, const GcnModeld& init, const TrainConfig& cfg);

/// Mean gamma of `model` over fixed (graph, utility) pairs.
double mean_gamma(const std::vector<const ConflictGraph*>& graphs, const std::vector<VertexWeights>& weights,
                  const GcnModeld& model, Downstream downstream, int crs_branching, int workers);

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log);

// Supervised tree-search head.

/// Indicator of the greedy solution, used as the training label.
Eigen::VectorXd crts_label(const ConflictGraph& g, const VertexWeights& u);

struct CrtsLoss {
  double loss = 0.0;
  int column = 0;  // argmin column
  GcnGradient<double> grad;
};

/// min_b (1/V) sum_v CE(y_v, Z_vb) with Z clamped to [1e-7, 1-1e-7]; gradient
/// flows only through the argmin column.
CrtsLoss crts_loss(const ConflictGraph& g, const VertexWeights& u, const Eigen::VectorXd& y, const GcnModeld& model);

struct CrtsExample {
  const ConflictGraph* graph = nullptr;
  VertexWeights u;
  Eigen::VectorXd y;
};

/// One descent step on the batch-mean loss. Returns the batch-mean loss
/// before the update.
double crts_supervised_step(const std::vector<CrtsExample>& batch, GcnModeld& model, double alpha);

/// Supervised training on greedy labels; keeps the model with the lowest
/// validation loss. The log's gamma columns hold losses.
TrainResult crts_train(const std::vector<ConflictGraph>& graphs, const GcnModeld& init, const TrainConfig& cfg);

// Q-learning for the greedy Q-search.

inline double epsilon_at(long step, double decay = 0.999, double floor = 0.05) {
  return std::max(floor, std::pow(decay, static_cast<double>(step)));
}

/// Finite-horizon Q-learning with discount 1: reward 0 on non-terminal steps
/// and gamma at the terminal one. Keeps the model with the best validation gamma.
TrainResult dqn_train(const std::vector<ConflictGraph>& graphs, const GcnModeld& init, const TrainConfig& cfg);

/// Mean gamma of epsilon-free gcn_cgs_search.
double mean_gamma_qsearch(const std::vector<const ConflictGraph*>& graphs, const std::vector<VertexWeights>& weights,
                          const GcnModeld& model, int workers);

}  // namespace gcnsched
