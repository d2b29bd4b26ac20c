#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gcnsched/graph.hpp"

namespace gcnsched {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Activation { kLeakyRelu, kLinear };

/// What the final layer means to the downstream solver.
enum class OutputKind {
  kScalarEmbedding,  // g_L = 1, topology-aware scaling z
  kQValues,          // g_L = 1, per-vertex action values
  kCrtsLogits,       // g_L = 2B, B (in, out) logit pairs
};

enum class PairActivation { kSigmoid, kSoftmax };

/// Input features S fed to the first layer.
enum class FeatureMode {
  kConstant,  // S = 1, featureless topological embedding
  kUtility,   // S = u
  kDegree,    // S = [d/d_avg, 1], used by the per-vertex perceptron ablation
};

/// kNone drops the Laplacian term, which turns the stack into a per-vertex MLP.
enum class Aggregation { kLaplacian, kNone };

inline int feature_dim(FeatureMode mode) { return mode == FeatureMode::kDegree ? 2 : 1; }

template <typename Scalar>
struct GcnLayer {
  MatrixX<Scalar> theta0;  // g_{l-1} x g_l
  MatrixX<Scalar> theta1;  // g_{l-1} x g_l
  Activation activation = Activation::kLeakyRelu;

  bool operator==(const GcnLayer& o) const {
    return activation == o.activation && theta0.rows() == o.theta0.rows() &&
           theta0.cols() == o.theta0.cols() && theta1.rows() == o.theta1.rows() &&
           theta1.cols() == o.theta1.cols() && theta0 == o.theta0 && theta1 == o.theta1;
  }
};

/// Stack of layers X^l = act(X^{l-1} Theta0 + L X^{l-1} Theta1), no biases.
template <typename Scalar>
struct GcnModel {
  std::vector<GcnLayer<Scalar>> layers;
  OutputKind output = OutputKind::kScalarEmbedding;
  FeatureMode features = FeatureMode::kConstant;
  Aggregation aggregation = Aggregation::kLaplacian;
  PairActivation pair_activation = PairActivation::kSigmoid;
  Scalar leaky_slope = Scalar(0.2);

  int depth() const { return static_cast<int>(layers.size()); }
  int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().theta0.rows()); }
  int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().theta0.cols()); }
  int branching() const { return output_dim() / 2; }

  std::vector<int> dims() const {
    std::vector<int> d;
    if (layers.empty()) return d;
    d.push_back(input_dim());
    for (const auto& l : layers) d.push_back(static_cast<int>(l.theta0.cols()));
    return d;
  }

  /// Throws ShapeError when the layer chain is broken or parameters are not finite.
  void validate() const {
    if (layers.empty()) throw ShapeError("GCN has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.theta0.rows() != l.theta1.rows() || l.theta0.cols() != l.theta1.cols())
        throw ShapeError("layer " + std::to_string(i) + ": theta0/theta1 shapes differ");
      if (i > 0 && l.theta0.rows() != layers[i - 1].theta0.cols())
        throw ShapeError("layer " + std::to_string(i) + ": input dim does not chain");
      if (!l.theta0.allFinite() || !l.theta1.allFinite())
        throw ShapeError("layer " + std::to_string(i) + ": non-finite parameter");
    }
    if (input_dim() != feature_dim(features)) throw ShapeError("input dim does not match feature mode");
    if (output == OutputKind::kCrtsLogits ? (output_dim() < 2 || output_dim() % 2 != 0)
                                          : output_dim() != 1)
      throw ShapeError("output dim does not match output kind");
  }

  bool all_finite() const {
    for (const auto& l : layers)
      if (!l.theta0.allFinite() || !l.theta1.allFinite()) return false;
    return true;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.theta0.size() + l.theta1.size());
    return n;
  }

  template <typename NewScalar>
  GcnModel<NewScalar> cast() const {
    GcnModel<NewScalar> out;
    out.output = output;
    out.features = features;
    out.aggregation = aggregation;
    out.pair_activation = pair_activation;
    out.leaky_slope = static_cast<NewScalar>(leaky_slope);
    for (const auto& l : layers)
      out.layers.push_back({l.theta0.template cast<NewScalar>(), l.theta1.template cast<NewScalar>(),
                            l.activation});
    return out;
  }

  bool operator==(const GcnModel&) const = default;
};

using GcnModeld = GcnModel<double>;

template <typename Scalar>
struct LayerGradient {
  MatrixX<Scalar> theta0;
  MatrixX<Scalar> theta1;
};

template <typename Scalar>
using GcnGradient = std::vector<LayerGradient<Scalar>>;

template <typename Scalar>
GcnGradient<Scalar> zero_gradient(const GcnModel<Scalar>& model) {
  GcnGradient<Scalar> g;
  for (const auto& l : model.layers)
    g.push_back({MatrixX<Scalar>::Zero(l.theta0.rows(), l.theta0.cols()),
                 MatrixX<Scalar>::Zero(l.theta1.rows(), l.theta1.cols())});
  return g;
}

/// acc += scale * g
template <typename Scalar>
void accumulate(GcnGradient<Scalar>& acc, const GcnGradient<Scalar>& g, Scalar scale) {
  for (std::size_t i = 0; i < acc.size(); ++i) {
    acc[i].theta0 += scale * g[i].theta0;
    acc[i].theta1 += scale * g[i].theta1;
  }
}

/// model += step * g
template <typename Scalar>
void apply_gradient(GcnModel<Scalar>& model, const GcnGradient<Scalar>& g, Scalar step) {
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    model.layers[i].theta0 += step * g[i].theta0;
    if (model.aggregation == Aggregation::kLaplacian) model.layers[i].theta1 += step * g[i].theta1;
  }
}

/// Xavier-uniform initialization, s = sqrt(6 / (g_{l-1} + g_l)). Hidden layers
/// use leaky ReLU, the output layer is linear.
template <typename Scalar = double>
GcnModel<Scalar> make_gcn(std::span<const int> dims, OutputKind output, FeatureMode features,
                          std::uint64_t seed, Aggregation aggregation = Aggregation::kLaplacian) {
  if (dims.size() < 2) throw ShapeError("make_gcn needs at least two dims");
  GcnModel<Scalar> model;
  model.output = output;
  model.features = features;
  model.aggregation = aggregation;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 1; l < dims.size(); ++l) {
    const int in = dims[l - 1], out = dims[l];
    const double s = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> dist(-s, s);
    GcnLayer<Scalar> layer;
    layer.theta0.resize(in, out);
    layer.theta1.resize(in, out);
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) layer.theta0(i, j) = static_cast<Scalar>(dist(rng));
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j)
        layer.theta1(i, j) = aggregation == Aggregation::kLaplacian ? static_cast<Scalar>(dist(rng)) : Scalar(0);
    layer.activation = l + 1 == dims.size() ? Activation::kLinear : Activation::kLeakyRelu;
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

/// Model whose output equals input feature `pass_feature`: Theta1 = 0 and
/// Theta0 routes that feature through the first hidden unit. With a single
/// layer and S = 1 the downstream greedy solvers are reproduced exactly.
/// `noise` adds uniform(-noise, noise) to every other parameter.
template <typename Scalar = double>
GcnModel<Scalar> identity_gcn(std::span<const int> dims, OutputKind output, FeatureMode features,
                              int pass_feature = 0, Scalar noise = Scalar(0), std::uint64_t seed = 0,
                              Aggregation aggregation = Aggregation::kLaplacian) {
  if (dims.size() < 2 || dims.back() != 1) throw ShapeError("identity_gcn needs a scalar output");
  GcnModel<Scalar> model;
  model.output = output;
  model.features = features;
  model.aggregation = aggregation;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto jitter = [&] { return noise == Scalar(0) ? Scalar(0) : static_cast<Scalar>(noise * dist(rng)); };
  for (std::size_t l = 1; l < dims.size(); ++l) {
    const int in = dims[l - 1], out = dims[l];
    GcnLayer<Scalar> layer;
    layer.theta0.resize(in, out);
    layer.theta1.resize(in, out);
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) {
        const int src = l == 1 ? pass_feature : 0;
        layer.theta0(i, j) = (i == src && j == 0) ? Scalar(1) : jitter();
        layer.theta1(i, j) = aggregation == Aggregation::kLaplacian ? jitter() : Scalar(0);
      }
    layer.activation = l + 1 == dims.size() ? Activation::kLinear : Activation::kLeakyRelu;
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

/// Feature matrix S for a graph (V x feature_dim).
template <typename Scalar = double>
MatrixX<Scalar> input_features(const ConflictGraph& g, const VertexWeights& u, FeatureMode mode) {
  const int n = g.vertex_count();
  switch (mode) {
    case FeatureMode::kConstant:
      return MatrixX<Scalar>::Ones(n, 1);
    case FeatureMode::kUtility:
      if (u.size() != n) throw ShapeError("utility length does not match graph");
      return u.cast<Scalar>();
    case FeatureMode::kDegree: {
      MatrixX<Scalar> s(n, 2);
      const double avg = g.average_degree();
      for (int v = 0; v < n; ++v) {
        s(v, 0) = avg > 0 ? static_cast<Scalar>(g.degree(v) / avg) : Scalar(0);
        s(v, 1) = Scalar(1);
      }
      return s;
    }
  }
  return {};
}

/// Per-layer intermediates recorded by forward() for backward().
template <typename Scalar>
struct ForwardTape {
  SparseLaplacian<Scalar> laplacian;
  std::vector<MatrixX<Scalar>> inputs;          // X^{l-1}
  std::vector<MatrixX<Scalar>> propagated;      // L X^{l-1}
  std::vector<MatrixX<Scalar>> preactivations;  // before act_l
};

namespace detail {

template <typename Scalar>
void activate(MatrixX<Scalar>& x, Activation act, Scalar slope) {
  if (act == Activation::kLeakyRelu) x = x.unaryExpr([slope](Scalar v) { return v > Scalar(0) ? v : slope * v; });
}

template <typename Scalar>
MatrixX<Scalar> activation_derivative(const MatrixX<Scalar>& pre, Activation act, Scalar slope) {
  if (act == Activation::kLinear) return MatrixX<Scalar>::Ones(pre.rows(), pre.cols());
  return pre.unaryExpr([slope](Scalar v) { return v > Scalar(0) ? Scalar(1) : slope; });
}

}  // namespace detail

/// Dense (matrix-level) evaluation of the layer stack over the whole graph.
template <typename Derived>
MatrixX<typename Derived::Scalar> forward(const SparseLaplacian<typename Derived::Scalar>& lap,
                                          const Eigen::MatrixBase<Derived>& x0,
                                          const GcnModel<typename Derived::Scalar>& model,
                                          ForwardTape<typename Derived::Scalar>* tape = nullptr) {
  using Scalar = typename Derived::Scalar;
  if (x0.rows() != lap.rows()) throw ShapeError("feature rows do not match vertex count");
  if (model.layers.empty() || x0.cols() != model.input_dim())
    throw ShapeError("feature dim does not match model input dim");
  if (!x0.allFinite()) throw ShapeError("non-finite input features");
  MatrixX<Scalar> x = x0;
  if (tape) {
    tape->laplacian = lap;
    tape->inputs.clear();
    tape->propagated.clear();
    tape->preactivations.clear();
  }
  for (const auto& layer : model.layers) {
    MatrixX<Scalar> pre = x * layer.theta0;
    MatrixX<Scalar> lx;
    if (model.aggregation == Aggregation::kLaplacian) {
      lx = lap * x;
      pre.noalias() += lx * layer.theta1;
    }
    if (tape) {
      tape->inputs.push_back(std::move(x));
      tape->propagated.push_back(std::move(lx));
      tape->preactivations.push_back(pre);
    }
    x = std::move(pre);
    detail::activate(x, layer.activation, model.leaky_slope);
  }
  return x;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> forward(const ConflictGraph& g, const Eigen::MatrixBase<Derived>& x0,
                                          const GcnModel<typename Derived::Scalar>& model,
                                          ForwardTape<typename Derived::Scalar>* tape = nullptr) {
  return forward(normalized_laplacian<typename Derived::Scalar>(g), x0, model, tape);
}

/// Same map computed one vertex at a time from neighbour rows only:
/// X_v Theta0 + [X_v - sum_u X_u / sqrt(d_v d_u)] Theta1.
template <typename Derived>
MatrixX<typename Derived::Scalar> forward_local(const ConflictGraph& g, const Eigen::MatrixBase<Derived>& x0,
                                                const GcnModel<typename Derived::Scalar>& model) {
  using Scalar = typename Derived::Scalar;
  const int n = g.vertex_count();
  if (x0.rows() != n) throw ShapeError("feature rows do not match vertex count");
  if (model.layers.empty() || x0.cols() != model.input_dim())
    throw ShapeError("feature dim does not match model input dim");
  std::vector<Scalar> inv_sqrt_deg(n);
  for (int v = 0; v < n; ++v)
    inv_sqrt_deg[v] = g.degree(v) > 0 ? Scalar(1) / std::sqrt(static_cast<Scalar>(g.degree(v))) : Scalar(0);
  MatrixX<Scalar> x = x0;
  for (const auto& layer : model.layers) {
    MatrixX<Scalar> next(n, layer.theta0.cols());
    Eigen::Matrix<Scalar, 1, Eigen::Dynamic> agg(x.cols());
    for (int v = 0; v < n; ++v) {
      Eigen::Matrix<Scalar, 1, Eigen::Dynamic> row = x.row(v) * layer.theta0;
      if (model.aggregation == Aggregation::kLaplacian) {
        agg = x.row(v);
        for (Vertex u : g.neighbors(v)) agg -= (inv_sqrt_deg[v] * inv_sqrt_deg[u]) * x.row(u);
        row += agg * layer.theta1;
      }
      next.row(v) = row;
    }
    detail::activate(next, layer.activation, model.leaky_slope);
    x = std::move(next);
  }
  return x;
}

/// Reverse-mode gradient of sum_{v,c} upstream(v,c) X^L(v,c) w.r.t. every Theta.
template <typename Scalar, typename Derived>
GcnGradient<Scalar> backward(const ForwardTape<Scalar>& tape, const GcnModel<Scalar>& model,
                             const Eigen::MatrixBase<Derived>& upstream) {
  const int depth = model.depth();
  if (static_cast<int>(tape.inputs.size()) != depth || static_cast<int>(tape.preactivations.size()) != depth)
    throw ShapeError("tape does not match model depth");
  if (upstream.rows() != tape.preactivations.back().rows() || upstream.cols() != model.output_dim())
    throw ShapeError("upstream gradient shape does not match model output");
  GcnGradient<Scalar> grad(depth);
  MatrixX<Scalar> g = upstream;
  for (int l = depth - 1; l >= 0; --l) {
    const auto& layer = model.layers[l];
    if (tape.inputs[l].cols() != layer.theta0.rows() || tape.preactivations[l].cols() != layer.theta0.cols())
      throw ShapeError("tape does not match model at layer " + std::to_string(l));
    MatrixX<Scalar> dpre =
        g.cwiseProduct(detail::activation_derivative(tape.preactivations[l], layer.activation, model.leaky_slope));
    grad[l].theta0 = tape.inputs[l].transpose() * dpre;
    if (model.aggregation == Aggregation::kLaplacian) {
      grad[l].theta1 = tape.propagated[l].transpose() * dpre;
    } else {
      grad[l].theta1 = MatrixX<Scalar>::Zero(layer.theta1.rows(), layer.theta1.cols());
    }
    if (l > 0) {
      g = dpre * layer.theta0.transpose();
      // The normalized Laplacian is symmetric, so L^T = L.
      if (model.aggregation == Aggregation::kLaplacian) g.noalias() += tape.laplacian * (dpre * layer.theta1.transpose());
    }
  }
  return grad;
}

/// First entry of each (in, out) logit pair mapped to a probability (V x B).
template <typename Scalar>
MatrixX<Scalar> pair_probabilities(const MatrixX<Scalar>& logits, PairActivation act) {
  const Eigen::Index b = logits.cols() / 2;
  MatrixX<Scalar> z(logits.rows(), b);
  for (Eigen::Index v = 0; v < logits.rows(); ++v)
    for (Eigen::Index c = 0; c < b; ++c) {
      const Scalar a = act == PairActivation::kSigmoid ? logits(v, 2 * c) : logits(v, 2 * c) - logits(v, 2 * c + 1);
      z(v, c) = Scalar(1) / (Scalar(1) + std::exp(-a));
    }
  return z;
}

/// V x B matrix Z in [0,1] for the random-tree-search head; features follow
/// the model's FeatureMode (normally S = u).
template <typename Scalar>
MatrixX<Scalar> forward_crts(const ConflictGraph& g, const VertexWeights& u, const GcnModel<Scalar>& model,
                             ForwardTape<Scalar>* tape = nullptr) {
  if (model.output != OutputKind::kCrtsLogits) throw UsageError("forward_crts needs a crts-logits model");
  const MatrixX<Scalar> x0 = input_features<Scalar>(g, u, model.features);
  return pair_probabilities<Scalar>(forward(g, x0, model, tape), model.pair_activation);
}

/// z = Psi_G(S) for scalar-output models, S built from the model's FeatureMode.
template <typename Scalar = double>
VectorX<Scalar> embed(const ConflictGraph& g, const VertexWeights& u, const GcnModel<Scalar>& model,
                      ForwardTape<Scalar>* tape = nullptr) {
  if (model.output_dim() != 1) throw UsageError("embed needs a scalar-output model");
  const MatrixX<Scalar> x0 = input_features<Scalar>(g, u, model.features);
  return forward(g, x0, model, tape).col(0);
}

}  // namespace gcnsched
