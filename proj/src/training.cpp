#include "gcnsched/training.hpp"

#include <deque>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>

#include "gcnsched/csv.hpp"
#include "gcnsched/parallel.hpp"
#include "gcnsched/search.hpp"

namespace gcnsched {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0 && learning_rate < 1.0)) throw UsageError("learning rate must lie in [0, 1)");
  if (batch_size < 1) throw UsageError("batch size must be >= 1");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw UsageError("validation fraction must lie in (0, 1)");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("momentum must lie in [0, 1)");
  if (validation_draws < 1) throw UsageError("validation draws must be >= 1");
  if (buffer_capacity < 1) throw UsageError("buffer capacity must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 && adam_eps > 0.0))
    throw UsageError("Adam betas must lie in [0, 1) and eps must be positive");
}

namespace {

/// Parameter update rule shared by the trainers. `sign` is +1 for ascent.
class Stepper {
 public:
  Stepper(const GcnModeld& model, const TrainConfig& cfg, double sign) : cfg_(cfg), sign_(sign) { reset(model); }

  void reset(const GcnModeld& model) {
    m1_ = zero_gradient(model);
    m2_ = zero_gradient(model);
    t_ = 0;
  }

  void step(GcnModeld& model, const GcnGradient<double>& g) {
    ++t_;
    if (cfg_.optimizer == Optimizer::kSgd) {
      for (std::size_t l = 0; l < m1_.size(); ++l) {
        m1_[l].theta0 = cfg_.momentum * m1_[l].theta0 + g[l].theta0;
        m1_[l].theta1 = cfg_.momentum * m1_[l].theta1 + g[l].theta1;
      }
      apply_gradient(model, m1_, sign_ * cfg_.learning_rate);
      return;
    }
    const double b1 = cfg_.adam_beta1, b2 = cfg_.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    GcnGradient<double> dir = zero_gradient(model);
    auto update = [&](Eigen::MatrixXd& m1, Eigen::MatrixXd& m2, const Eigen::MatrixXd& gi, Eigen::MatrixXd& out) {
      m1 = b1 * m1 + (1.0 - b1) * gi;
      m2 = b2 * m2 + (1.0 - b2) * gi.cwiseAbs2();
      out = (m1 / c1).array() / ((m2 / c2).array().sqrt() + cfg_.adam_eps);
    };
    for (std::size_t l = 0; l < m1_.size(); ++l) {
      update(m1_[l].theta0, m2_[l].theta0, g[l].theta0, dir[l].theta0);
      update(m1_[l].theta1, m2_[l].theta1, g[l].theta1, dir[l].theta1);
    }
    apply_gradient(model, dir, sign_ * cfg_.learning_rate);
  }

 private:
  const TrainConfig& cfg_;
  double sign_;
  GcnGradient<double> m1_, m2_;
  long t_ = 0;
};

}  // namespace

TrainSample compute_reward(const ConflictGraph& g, const VertexWeights& u, const GcnModeld& model,
                           Downstream downstream, int crs_branching) {
  check_weights(g, u);
  if ((u.array() < 0.0).any()) throw UsageError("compute_reward needs non-negative utilities");
  TrainSample s;
  s.graph = &g;
  s.u = u;
  s.z = embed(g, u, model, &s.tape);
  if (!s.z.allFinite()) throw std::runtime_error("non-finite embedding (training diverged?)");
  const double greedy = cgs(g, u).utility;
  VertexSet sel;
  if (downstream == Downstream::kLgs) {
    sel = lgs(g, s.z.cwiseProduct(u), u).solution;
  } else {
    RolloutConfig rc;
    rc.branching = crs_branching;
    sel = gcn_crs(g, u, model, rc).solution;
  }
  s.selected.assign(g.vertex_count(), 0);
  for (Vertex v : sel) s.selected[v] = 1;
  if (greedy <= 0.0) {
    s.skipped = true;
  } else {
    s.gamma = total_utility(u, sel) / greedy;
  }
  return s;
}

GcnGradient<double> dpg_gradient(const std::vector<TrainSample>& batch, const GcnModeld& model) {
  GcnGradient<double> grad = zero_gradient(model);
  const auto used = std::count_if(batch.begin(), batch.end(), [](const TrainSample& s) { return !s.skipped; });
  if (used == 0) return grad;
  for (const auto& s : batch) {
    if (s.skipped) continue;
    Eigen::MatrixXd upstream(s.selected.size(), 1);
    for (std::size_t v = 0; v < s.selected.size(); ++v) upstream(static_cast<Eigen::Index>(v), 0) = s.selected[v];
    accumulate(grad, backward(s.tape, model, upstream), s.gamma / static_cast<double>(used));
  }
  return grad;
}

int dpg_step(const std::vector<TrainSample>& batch, GcnModeld& model, double alpha) {
  apply_gradient(model, dpg_gradient(batch, model), alpha);
  return static_cast<int>(std::count_if(batch.begin(), batch.end(), [](const TrainSample& s) { return !s.skipped; }));
}

double mean_gamma(const std::vector<const ConflictGraph*>& graphs, const std::vector<VertexWeights>& weights,
                  const GcnModeld& model, Downstream downstream, int crs_branching, int workers) {
  std::vector<double> gamma(graphs.size(), 0.0);
  std::vector<char> used(graphs.size(), 0);
  parallel_for(graphs.size(), workers, [&](std::size_t i) {
    const TrainSample s = compute_reward(*graphs[i], weights[i], model, downstream, crs_branching);
    gamma[i] = s.gamma;
    used[i] = !s.skipped;
  });
  double sum = 0.0;
  long n = 0;
  for (std::size_t i = 0; i < gamma.size(); ++i)
    if (used[i]) {
      sum += gamma[i];
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

void write_train_log(std::ostream& out, const std::vector<TrainLogRow>& log) {
  out << "epoch,mean_train_gamma,mean_val_gamma,skipped\n";
  for (const auto& r : log)
    out << r.epoch << ',' << fmt(r.mean_train_gamma) << ',' << fmt(r.mean_val_gamma) << ',' << r.skipped << '\n';
}

namespace {

struct Split {
  std::vector<const ConflictGraph*> train, val;
};

Split split_dataset(const std::vector<ConflictGraph>& graphs, double fraction, std::mt19937_64& rng) {
  if (graphs.size() < 2) throw UsageError("dataset too small for a validation split");
  std::vector<std::size_t> perm(graphs.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * graphs.size())));
  if (n_val >= graphs.size()) throw UsageError("validation split leaves no training graphs");
  Split s;
  for (std::size_t i = 0; i < perm.size(); ++i) (i < n_val ? s.val : s.train).push_back(&graphs[perm[i]]);
  return s;
}

/// Fixed validation pairs: `draws` utility vectors per validation graph.
void validation_pairs(const std::vector<const ConflictGraph*>& val, int draws, std::mt19937_64& rng,
                      std::vector<const ConflictGraph*>& graphs_out, std::vector<VertexWeights>& weights_out) {
  for (const ConflictGraph* g : val)
    for (int d = 0; d < draws; ++d) {
      graphs_out.push_back(g);
      weights_out.push_back(uniform_weights(g->vertex_count(), rng()));
    }
}

void check_finite(const GcnModeld& model) {
  if (!model.all_finite()) throw std::runtime_error("training diverged: non-finite parameters");
}

}  // namespace

TrainResult dpg_train(const std::vector<ConflictGraph>& graphs, const GcnModeld& init, const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  if (init.output_dim() != 1) throw UsageError("dpg_train needs a scalar-output model");
  std::mt19937_64 rng(cfg.seed);
  const Split split = split_dataset(graphs, cfg.validation_fraction, rng);
  std::vector<const ConflictGraph*> val_graphs;
  std::vector<VertexWeights> val_weights;
  validation_pairs(split.val, cfg.validation_draws, rng, val_graphs, val_weights);
  auto validate_model = [&](const GcnModeld& m) {
    return mean_gamma(val_graphs, val_weights, m, cfg.downstream, cfg.crs_branching, cfg.workers);
  };

  TrainResult out;
  GcnModeld model = init;
  out.model = init;
  out.initial_val_gamma = out.best_val_gamma = validate_model(init);
  Stepper stepper(model, cfg, 1.0);
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);
  double last_val = out.initial_val_gamma;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.reset_each_epoch) stepper.reset(model);
    std::shuffle(order.begin(), order.end(), rng);
    double gamma_sum = 0.0;
    long used = 0, skipped = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      std::vector<VertexWeights> us;
      for (std::size_t i = b; i < end; ++i) us.push_back(uniform_weights(split.train[order[i]]->vertex_count(), rng()));
      std::vector<TrainSample> batch(end - b);
      parallel_for(batch.size(), cfg.workers, [&](std::size_t i) {
        batch[i] = compute_reward(*split.train[order[b + i]], us[i], model, cfg.downstream, cfg.crs_branching);
      });
      for (const auto& s : batch) {
        if (s.skipped) {
          ++skipped;
        } else {
          gamma_sum += s.gamma;
          ++used;
        }
      }
      stepper.step(model, dpg_gradient(batch, model));
      check_finite(model);
      last_val = validate_model(model);
      if (last_val > out.best_val_gamma) {
        out.best_val_gamma = last_val;
        out.model = model;
      }
    }
    out.used += used;
    out.skipped += skipped;
    out.log.push_back({epoch, used ? gamma_sum / static_cast<double>(used) : 0.0, last_val, skipped});
  }
  return out;
}

Eigen::VectorXd crts_label(const ConflictGraph& g, const VertexWeights& u) {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(g.vertex_count());
  for (Vertex v : cgs(g, u).solution) y[v] = 1.0;
  return y;
}

CrtsLoss crts_loss(const ConflictGraph& g, const VertexWeights& u, const Eigen::VectorXd& y, const GcnModeld& model) {
  if (model.output != OutputKind::kCrtsLogits) throw UsageError("crts_loss needs a crts-logits model");
  if (y.size() != g.vertex_count()) throw ShapeError("label length does not match graph");
  constexpr double kEps = 1e-7;
  CrtsLoss out;
  const int n = g.vertex_count();
  if (n == 0) {
    out.grad = zero_gradient(model);
    return out;
  }
  ForwardTape<double> tape;
  const Eigen::MatrixXd x0 = input_features<double>(g, u, model.features);
  const Eigen::MatrixXd logits = forward(g, x0, model, &tape);
  const Eigen::MatrixXd z = pair_probabilities(logits, model.pair_activation);
  out.loss = std::numeric_limits<double>::infinity();
  for (Eigen::Index b = 0; b < z.cols(); ++b) {
    double l = 0.0;
    for (int v = 0; v < n; ++v) {
      const double zc = std::clamp(z(v, b), kEps, 1.0 - kEps);
      l -= y[v] * std::log(zc) + (1.0 - y[v]) * std::log(1.0 - zc);
    }
    l /= n;
    if (l < out.loss) {
      out.loss = l;
      out.column = static_cast<int>(b);
    }
  }
  Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(n, logits.cols());
  for (int v = 0; v < n; ++v) {
    const double zv = z(v, out.column);
    if (zv < kEps || zv > 1.0 - kEps) continue;  // clamped: flat
    const double d = (zv - y[v]) / n;
    upstream(v, 2 * out.column) = d;
    if (model.pair_activation == PairActivation::kSoftmax) upstream(v, 2 * out.column + 1) = -d;
  }
  out.grad = backward(tape, model, upstream);
  return out;
}

namespace {

/// Batch-mean loss and its gradient.
double crts_batch_gradient(const std::vector<CrtsExample>& batch, const GcnModeld& model, GcnGradient<double>& grad) {
  grad = zero_gradient(model);
  double loss = 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& ex : batch) {
    CrtsLoss l = crts_loss(*ex.graph, ex.u, ex.y, model);
    loss += l.loss * scale;
    accumulate(grad, l.grad, scale);
  }
  return loss;
}

}  // namespace

double crts_supervised_step(const std::vector<CrtsExample>& batch, GcnModeld& model, double alpha) {
  if (batch.empty()) return 0.0;
  GcnGradient<double> grad;
  const double loss = crts_batch_gradient(batch, model, grad);
  apply_gradient(model, grad, -alpha);
  return loss;
}

TrainResult crts_train(const std::vector<ConflictGraph>& graphs, const GcnModeld& init, const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  if (init.output != OutputKind::kCrtsLogits) throw UsageError("crts_train needs a crts-logits model");
  std::mt19937_64 rng(cfg.seed);
  const Split split = split_dataset(graphs, cfg.validation_fraction, rng);
  std::vector<const ConflictGraph*> val_graphs;
  std::vector<VertexWeights> val_weights;
  validation_pairs(split.val, cfg.validation_draws, rng, val_graphs, val_weights);
  std::vector<Eigen::VectorXd> val_labels;
  for (std::size_t i = 0; i < val_graphs.size(); ++i) val_labels.push_back(crts_label(*val_graphs[i], val_weights[i]));
  auto val_loss = [&](const GcnModeld& m) {
    std::vector<double> l(val_graphs.size());
    parallel_for(val_graphs.size(), cfg.workers,
                 [&](std::size_t i) { l[i] = crts_loss(*val_graphs[i], val_weights[i], val_labels[i], m).loss; });
    return std::accumulate(l.begin(), l.end(), 0.0) / static_cast<double>(l.size());
  };

  TrainResult out;
  GcnModeld model = init;
  out.model = init;
  out.initial_val_gamma = out.best_val_gamma = val_loss(init);
  Stepper stepper(model, cfg, -1.0);
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.reset_each_epoch) stepper.reset(model);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    long batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      std::vector<CrtsExample> batch;
      for (std::size_t i = b; i < end; ++i) {
        const ConflictGraph* g = split.train[order[i]];
        CrtsExample ex{g, uniform_weights(g->vertex_count(), rng()), {}};
        ex.y = crts_label(*g, ex.u);
        batch.push_back(std::move(ex));
      }
      GcnGradient<double> grad;
      loss_sum += crts_batch_gradient(batch, model, grad);
      stepper.step(model, grad);
      ++batches;
      check_finite(model);
    }
    const double vl = val_loss(model);
    if (vl < out.best_val_gamma) {
      out.best_val_gamma = vl;
      out.model = model;
    }
    out.log.push_back({epoch, batches ? loss_sum / static_cast<double>(batches) : 0.0, vl, 0});
  }
  return out;
}

double mean_gamma_qsearch(const std::vector<const ConflictGraph*>& graphs, const std::vector<VertexWeights>& weights,
                          const GcnModeld& model, int workers) {
  std::vector<double> gamma(graphs.size(), 0.0);
  std::vector<char> used(graphs.size(), 0);
  parallel_for(graphs.size(), workers, [&](std::size_t i) {
    const double greedy = cgs(*graphs[i], weights[i]).utility;
    if (greedy <= 0.0) return;
    gamma[i] = gcn_cgs_search(*graphs[i], weights[i], model, 0.0, 0).utility / greedy;
    used[i] = 1;
  });
  double sum = 0.0;
  long n = 0;
  for (std::size_t i = 0; i < gamma.size(); ++i)
    if (used[i]) {
      sum += gamma[i];
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

namespace {

struct Replay {
  const ConflictGraph* graph = nullptr;
  std::shared_ptr<const VertexWeights> u;
  SearchTransition t;
  double reward = 0.0;
};

/// Q-values on the residual graph given by `mask`, plus the parent map.
Eigen::VectorXd residual_q(const ConflictGraph& g, const VertexWeights& u, const std::vector<char>& mask,
                           const GcnModeld& model, InducedSubgraph& sub, ForwardTape<double>* tape) {
  sub = induced_subgraph(g, mask);
  VertexWeights u_sub(static_cast<Eigen::Index>(sub.to_parent.size()));
  for (std::size_t i = 0; i < sub.to_parent.size(); ++i) u_sub[static_cast<Eigen::Index>(i)] = u[sub.to_parent[i]];
  return embed(sub.graph, u_sub, model, tape);
}

}  // namespace

TrainResult dqn_train(const std::vector<ConflictGraph>& graphs, const GcnModeld& init, const TrainConfig& cfg) {
  cfg.validate();
  init.validate();
  if (init.output_dim() != 1) throw UsageError("dqn_train needs a scalar-output model");
  std::mt19937_64 rng(cfg.seed);
  const Split split = split_dataset(graphs, cfg.validation_fraction, rng);
  std::vector<const ConflictGraph*> val_graphs;
  std::vector<VertexWeights> val_weights;
  validation_pairs(split.val, cfg.validation_draws, rng, val_graphs, val_weights);

  TrainResult out;
  GcnModeld model = init;
  out.model = init;
  out.initial_val_gamma = out.best_val_gamma = mean_gamma_qsearch(val_graphs, val_weights, init, cfg.workers);
  std::deque<Replay> buffer;
  long step = 0;
  std::uniform_int_distribution<std::size_t> pick_graph(0, split.train.size() - 1);
  Stepper stepper(model, cfg, -1.0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (cfg.reset_each_epoch) stepper.reset(model);
    double gamma_sum = 0.0;
    long used = 0, skipped = 0;
    for (int e = 0; e < cfg.episodes_per_epoch; ++e, ++step) {
      const ConflictGraph* g = split.train[pick_graph(rng)];
      auto u = std::make_shared<const VertexWeights>(uniform_weights(g->vertex_count(), rng()));
      const double greedy = cgs(*g, *u).utility;
      if (greedy <= 0.0) {
        ++skipped;
        continue;
      }
      std::vector<SearchTransition> episode;
      const SolveResult r = gcn_cgs_search(*g, *u, model, epsilon_at(step, cfg.epsilon_decay, cfg.epsilon_min), rng(),
                                           &episode);
      const double gamma = r.utility / greedy;
      gamma_sum += gamma;
      ++used;
      for (auto& t : episode) {
        const double reward = t.done ? gamma : 0.0;
        buffer.push_back({g, u, std::move(t), reward});
        if (static_cast<int>(buffer.size()) > cfg.buffer_capacity) buffer.pop_front();
      }
      if (static_cast<int>(buffer.size()) < cfg.batch_size) continue;

      GcnGradient<double> grad = zero_gradient(model);
      std::uniform_int_distribution<std::size_t> pick(0, buffer.size() - 1);
      std::vector<std::size_t> idx(static_cast<std::size_t>(cfg.batch_size));
      for (auto& i : idx) i = pick(rng);
      std::vector<GcnGradient<double>> grads(idx.size());
      parallel_for(idx.size(), cfg.workers, [&](std::size_t k) {
        const Replay& rp = buffer[idx[k]];
        double target = rp.reward;
        if (!rp.t.done) {
          InducedSubgraph next_sub;
          target += residual_q(*rp.graph, *rp.u, rp.t.next_residual, model, next_sub, nullptr).maxCoeff();
        }
        InducedSubgraph sub;
        ForwardTape<double> tape;
        const Eigen::VectorXd q = residual_q(*rp.graph, *rp.u, rp.t.residual, model, sub, &tape);
        const auto a = std::lower_bound(sub.to_parent.begin(), sub.to_parent.end(), rp.t.action) - sub.to_parent.begin();
        Eigen::MatrixXd upstream = Eigen::MatrixXd::Zero(q.size(), 1);
        upstream(a, 0) = q[a] - target;
        grads[k] = backward(tape, model, upstream);
      });
      for (const auto& g_k : grads) accumulate(grad, g_k, 1.0 / static_cast<double>(grads.size()));
      stepper.step(model, grad);
      check_finite(model);
    }
    const double val = mean_gamma_qsearch(val_graphs, val_weights, model, cfg.workers);
    if (val > out.best_val_gamma) {
      out.best_val_gamma = val;
      out.model = model;
    }
    out.used += used;
    out.skipped += skipped;
    out.log.push_back({epoch, used ? gamma_sum / static_cast<double>(used) : 0.0, val, skipped});
  }
  return out;
}

}  // namespace gcnsched
