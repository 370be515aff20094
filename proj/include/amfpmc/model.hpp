#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "amfpmc/error.hpp"
#include "amfpmc/graph.hpp"
#include "amfpmc/types.hpp"

namespace amfpmc {

struct Hyperparameters {
  int embedding_dim = 512;
  double dropout = 0.3;
  int epochs = 15;
  int batch_size = 256;
  double learning_rate = 0.01;
  double alpha = 0.8;
  std::uint64_t seed = 1;
  bool balance_classes = true;

  void validate() const {
    if (embedding_dim < 1 || epochs < 1 || batch_size < 1) {
      throw Error(ErrorKind::InvalidConfig,
                  "embedding_dim, epochs and batch_size must be >= 1");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
      throw Error(ErrorKind::InvalidConfig, "dropout must lie in [0, 1)");
    }
    if (!(learning_rate > 0.0)) {
      throw Error(ErrorKind::InvalidConfig, "learning_rate must be positive");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw Error(ErrorKind::InvalidConfig, "alpha must lie in [0, 1]");
    }
  }

  bool operator==(const Hyperparameters&) const = default;
};

/// A training example: canonical pair, hard label and the (possibly
/// propagated) soft target.
struct LabeledPair {
  DrugIndex a = 0;
  DrugIndex b = 0;
  ClassId label = 0;
  SoftTarget target;
};

/// Embedding and bias tables are shared by both input slots, which is what
/// makes inference exactly symmetric in the pair order.
///
///   h      = E[i] .* E[j]
///   logits = W h + c + u (b[i] + b[j])
template <typename Scalar>
struct ModelParameters {
  Matrix<Scalar> embedding;      // E, n x d
  Vector<Scalar> drug_bias;      // b, n
  Matrix<Scalar> projection;     // W, K x d
  Vector<Scalar> class_bias;     // c, K
  Vector<Scalar> bias_coupling;  // u, K

  static ModelParameters zeros(Eigen::Index n, Eigen::Index k,
                               Eigen::Index d) {
    return {Matrix<Scalar>::Zero(n, d), Vector<Scalar>::Zero(n),
            Matrix<Scalar>::Zero(k, d), Vector<Scalar>::Zero(k),
            Vector<Scalar>::Zero(k)};
  }

  Eigen::Index n_drugs() const { return embedding.rows(); }
  Eigen::Index n_classes() const { return projection.rows(); }
  Eigen::Index dim() const { return embedding.cols(); }

  auto blocks() {
    return std::tie(embedding, drug_bias, projection, class_bias,
                    bias_coupling);
  }
  auto blocks() const {
    return std::tie(embedding, drug_bias, projection, class_bias,
                    bias_coupling);
  }

  bool same_shape(const ModelParameters& o) const {
    return embedding.rows() == o.embedding.rows() &&
           embedding.cols() == o.embedding.cols() &&
           drug_bias.size() == o.drug_bias.size() &&
           projection.rows() == o.projection.rows() &&
           projection.cols() == o.projection.cols() &&
           class_bias.size() == o.class_bias.size() &&
           bias_coupling.size() == o.bias_coupling.size();
  }

  bool operator==(const ModelParameters& o) const {
    return same_shape(o) && embedding == o.embedding &&
           drug_bias == o.drug_bias && projection == o.projection &&
           class_bias == o.class_bias && bias_coupling == o.bias_coupling;
  }
};

template <typename Scalar>
using Gradients = ModelParameters<Scalar>;

/// E and W uniform on [-1/sqrt(d), 1/sqrt(d)], biases zero, coupling one.
template <typename Scalar>
ModelParameters<Scalar> init_model(std::size_t n, int k, int d, Rng& rng) {
  if (n < 2 || k < 2 || d < 1) {
    throw Error(ErrorKind::InvalidDimensions,
                "need n >= 2, K >= 2, d >= 1 (got n=" + std::to_string(n) +
                    ", K=" + std::to_string(k) + ", d=" + std::to_string(d) +
                    ")");
  }
  auto params = ModelParameters<Scalar>::zeros(static_cast<Eigen::Index>(n),
                                               k, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  auto fill = [&](Matrix<Scalar>& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        m(r, c) = static_cast<Scalar>((2.0 * uniform01(rng) - 1.0) * scale);
  };
  fill(params.embedding);
  fill(params.projection);
  params.bias_coupling.setOnes();
  return params;
}

template <typename Scalar>
ModelParameters<Scalar> init_model(std::size_t n, int k,
                                   const Hyperparameters& hp) {
  Rng rng(hp.seed);
  return init_model<Scalar>(n, k, hp.embedding_dim, rng);
}

/// Intermediate values of one forward pass, kept for backprop. The masks
/// already carry the inverted-dropout scale (ones when dropout is off).
template <typename Scalar>
struct ForwardPass {
  Vector<Scalar> left_mask, right_mask;
  Vector<Scalar> left, right;  // masked embedding rows
  Vector<Scalar> hidden;
  Vector<Scalar> logits;
};

namespace detail {

template <typename Scalar>
void check_pair(const ModelParameters<Scalar>& params, DrugIndex i,
                DrugIndex j) {
  if (i < 0 || j < 0 || i >= params.n_drugs() || j >= params.n_drugs()) {
    throw Error(ErrorKind::UnknownDrug, "pair (" + std::to_string(i) + ", " +
                                            std::to_string(j) +
                                            ") outside the model roster");
  }
  if (i == j) {
    throw Error(ErrorKind::SelfLoop,
                "cannot score drug " + std::to_string(i) + " with itself");
  }
}

template <typename Scalar>
Vector<Scalar> dropout_mask(Eigen::Index d, double rate, Rng& rng) {
  Vector<Scalar> mask(d);
  const auto keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  for (Eigen::Index k = 0; k < d; ++k) {
    mask[k] = uniform01(rng) < rate ? Scalar(0) : keep_scale;
  }
  return mask;
}

}  // namespace detail

/// Masks are only drawn when `rng` is given and `dropout` > 0; otherwise the
/// pass is the deterministic, symmetric inference pass.
template <typename Scalar>
ForwardPass<Scalar> forward(const ModelParameters<Scalar>& params, DrugIndex i,
                            DrugIndex j, double dropout = 0.0,
                            Rng* rng = nullptr) {
  detail::check_pair(params, i, j);
  const auto d = params.dim();
  ForwardPass<Scalar> pass;
  if (rng != nullptr && dropout > 0.0) {
    pass.left_mask = detail::dropout_mask<Scalar>(d, dropout, *rng);
    pass.right_mask = detail::dropout_mask<Scalar>(d, dropout, *rng);
    pass.left = pass.left_mask.cwiseProduct(params.embedding.row(i).transpose());
    pass.right =
        pass.right_mask.cwiseProduct(params.embedding.row(j).transpose());
  } else {
    pass.left_mask = Vector<Scalar>::Ones(d);
    pass.right_mask = Vector<Scalar>::Ones(d);
    pass.left = params.embedding.row(i).transpose();
    pass.right = params.embedding.row(j).transpose();
  }
  pass.hidden = pass.left.cwiseProduct(pass.right);
  pass.logits = params.projection * pass.hidden + params.class_bias +
                params.bias_coupling * (params.drug_bias[i] +
                                        params.drug_bias[j]);
  return pass;
}

template <typename Scalar>
Vector<Scalar> softmax(const Vector<Scalar>& logits) {
  Vector<Scalar> e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

template <typename Scalar>
Vector<Scalar> predict(const ModelParameters<Scalar>& params, DrugIndex i,
                       DrugIndex j) {
  return softmax<Scalar>(forward(params, i, j).logits);
}

inline constexpr double kLogClamp = 1e-12;

/// Cross entropy against (soft) targets, weighted per row and averaged over
/// the batch. `row_weights` has one entry per row.
template <typename Scalar>
Scalar weighted_cross_entropy(const Matrix<Scalar>& probs,
                              const Matrix<Scalar>& targets,
                              const Vector<Scalar>& row_weights) {
  if (probs.rows() != targets.rows() || probs.cols() != targets.cols() ||
      row_weights.size() != probs.rows()) {
    throw Error(ErrorKind::ShapeMismatch, "loss inputs disagree in shape");
  }
  if (probs.rows() == 0) throw Error(ErrorKind::EmptyBatch, "empty batch");
  const auto log_p =
      probs.array().max(static_cast<Scalar>(kLogClamp)).log().matrix();
  const Vector<Scalar> per_row =
      -(targets.cwiseProduct(log_p)).rowwise().sum();
  return per_row.cwiseProduct(row_weights).sum() /
         static_cast<Scalar>(probs.rows());
}

/// Mean over rows of w[argmax target] * cross entropy (ties -> lowest class).
template <typename Scalar>
Scalar loss(const Matrix<Scalar>& probs, const Matrix<Scalar>& targets,
            const Vector<Scalar>& class_weights) {
  if (class_weights.size() != targets.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "class weights length != K");
  }
  Vector<Scalar> row_weights(targets.rows());
  for (Eigen::Index r = 0; r < targets.rows(); ++r) {
    Eigen::Index best;
    targets.row(r).maxCoeff(&best);
    row_weights[r] = class_weights[best];
  }
  return weighted_cross_entropy<Scalar>(probs, targets, row_weights);
}

template <typename Scalar>
struct BackwardResult {
  Gradients<Scalar> grads;
  Scalar loss = 0;
};

/// Exact gradients of the batch loss, where each example is weighted by the
/// class weight of its hard label. Shared parameters accumulate from both
/// slots; embedding rows outside the batch get zero gradient.
template <typename Scalar>
BackwardResult<Scalar> backward(const ModelParameters<Scalar>& params,
                                std::span<const LabeledPair> batch,
                                const Vector<Scalar>& class_weights,
                                double dropout = 0.0, Rng* rng = nullptr) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "empty batch");
  const auto k = params.n_classes();
  if (class_weights.size() != k) {
    throw Error(ErrorKind::ShapeMismatch, "class weights length != K");
  }
  BackwardResult<Scalar> out{
      Gradients<Scalar>::zeros(params.n_drugs(), k, params.dim()), Scalar(0)};
  auto& g = out.grads;
  const auto inv_batch = Scalar(1) / static_cast<Scalar>(batch.size());

  for (const auto& ex : batch) {
    if (ex.target.size() != k) {
      throw Error(ErrorKind::ShapeMismatch, "target length != K");
    }
    if (ex.label < 0 || ex.label >= k) {
      throw Error(ErrorKind::InvalidClass, "label outside 0..K-1");
    }
    const auto pass = forward(params, ex.a, ex.b, dropout, rng);
    const Vector<Scalar> p = softmax<Scalar>(pass.logits);
    const Vector<Scalar> t = ex.target.template cast<Scalar>();
    const Scalar w = class_weights[ex.label];

    out.loss -= w * t.dot(p.array().max(Scalar(kLogClamp)).log().matrix()) *
                inv_batch;

    const Vector<Scalar> dlogits = (w * inv_batch) * (p * t.sum() - t);
    const Scalar bias_sum = params.drug_bias[ex.a] + params.drug_bias[ex.b];

    g.projection.noalias() += dlogits * pass.hidden.transpose();
    g.class_bias += dlogits;
    g.bias_coupling += dlogits * bias_sum;
    const Scalar dbias = dlogits.dot(params.bias_coupling);
    g.drug_bias[ex.a] += dbias;
    g.drug_bias[ex.b] += dbias;

    const Vector<Scalar> dhidden = params.projection.transpose() * dlogits;
    g.embedding.row(ex.a) += dhidden.cwiseProduct(pass.left_mask)
                                 .cwiseProduct(pass.right)
                                 .transpose();
    g.embedding.row(ex.b) += dhidden.cwiseProduct(pass.right_mask)
                                 .cwiseProduct(pass.left)
                                 .transpose();
  }
  return out;
}

/// Batch loss on the inference pass with label-weighted rows; the scalar
/// function `backward` differentiates when dropout is off.
template <typename Scalar>
Scalar batch_loss(const ModelParameters<Scalar>& params,
                  std::span<const LabeledPair> batch,
                  const Vector<Scalar>& class_weights) {
  if (batch.empty()) throw Error(ErrorKind::EmptyBatch, "empty batch");
  Scalar total = 0;
  for (const auto& ex : batch) {
    const Vector<Scalar> p = predict(params, ex.a, ex.b);
    const Vector<Scalar> t = ex.target.template cast<Scalar>();
    total -= class_weights[ex.label] *
             t.dot(p.array().max(Scalar(kLogClamp)).log().matrix());
  }
  return total / static_cast<Scalar>(batch.size());
}

/// Max relative error between `backward` and central finite differences over
/// every parameter. Entries whose magnitudes are both below `floor` are
/// compared on absolute scale against `floor`.
template <typename Scalar>
Scalar gradient_check(const ModelParameters<Scalar>& params,
                      std::span<const LabeledPair> batch,
                      const Vector<Scalar>& class_weights, Scalar eps = 1e-5,
                      Scalar floor = 1e-6) {
  const auto analytic = backward(params, batch, class_weights).grads;
  auto probe = params;
  Scalar worst = 0;
  auto check_block = [&](auto& values, const auto& grads) {
    for (Eigen::Index idx = 0; idx < values.size(); ++idx) {
      Scalar& x = values.data()[idx];
      const Scalar saved = x;
      x = saved + eps;
      const Scalar up = batch_loss(probe, batch, class_weights);
      x = saved - eps;
      const Scalar down = batch_loss(probe, batch, class_weights);
      x = saved;
      const Scalar numeric = (up - down) / (2 * eps);
      const Scalar exact = grads.data()[idx];
      const Scalar denom =
          std::max({std::abs(numeric), std::abs(exact), floor});
      worst = std::max(worst, std::abs(numeric - exact) / denom);
    }
  };
  std::apply(
      [&](auto&... probe_blocks) {
        std::apply(
            [&](const auto&... grad_blocks) {
              (check_block(probe_blocks, grad_blocks), ...);
            },
            analytic.blocks());
      },
      probe.blocks());
  return worst;
}

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  ModelParameters<Scalar> first_moment;
  ModelParameters<Scalar> second_moment;
  std::int64_t step = 0;

  static AdamState for_params(const ModelParameters<Scalar>& params) {
    auto zero = ModelParameters<Scalar>::zeros(
        params.n_drugs(), params.n_classes(), params.dim());
    return {zero, zero, 0};
  }
};

/// One bias-corrected Adam update over every parameter block.
template <typename Scalar>
void adam_step(ModelParameters<Scalar>& params, const Gradients<Scalar>& grads,
               AdamState<Scalar>& state, Scalar learning_rate,
               const AdamConstants& k = {}) {
  if (!params.same_shape(grads) || !params.same_shape(state.first_moment) ||
      !params.same_shape(state.second_moment)) {
    throw Error(ErrorKind::ShapeMismatch,
                "parameters, gradients and optimizer state differ in shape");
  }
  state.step += 1;
  const auto b1 = static_cast<Scalar>(k.beta1);
  const auto b2 = static_cast<Scalar>(k.beta2);
  const auto eps = static_cast<Scalar>(k.epsilon);
  const Scalar correction1 =
      Scalar(1) - std::pow(b1, static_cast<Scalar>(state.step));
  const Scalar correction2 =
      Scalar(1) - std::pow(b2, static_cast<Scalar>(state.step));

  auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    p.array() -= learning_rate * (m.array() / correction1) /
                 ((v.array() / correction2).sqrt() + eps);
  };
  update(params.embedding, grads.embedding, state.first_moment.embedding,
         state.second_moment.embedding);
  update(params.drug_bias, grads.drug_bias, state.first_moment.drug_bias,
         state.second_moment.drug_bias);
  update(params.projection, grads.projection, state.first_moment.projection,
         state.second_moment.projection);
  update(params.class_bias, grads.class_bias, state.first_moment.class_bias,
         state.second_moment.class_bias);
  update(params.bias_coupling, grads.bias_coupling,
         state.first_moment.bias_coupling, state.second_moment.bias_coupling);
}

template <typename Scalar>
struct EmbeddingTable {
  std::vector<std::string> drug_ids;
  Matrix<Scalar> values;
};

/// Copy of E with external ids in roster order.
template <typename Scalar>
EmbeddingTable<Scalar> export_embeddings(const ModelParameters<Scalar>& params,
                                         const DrugRoster& roster) {
  if (static_cast<std::size_t>(params.n_drugs()) != roster.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "model has " + std::to_string(params.n_drugs()) +
                    " embedding rows but the roster has " +
                    std::to_string(roster.size()) + " drugs");
  }
  EmbeddingTable<Scalar> table;
  for (const auto& drug : roster) table.drug_ids.push_back(drug.external_id);
  table.values = params.embedding;
  return table;
}

using Model = ModelParameters<double>;

}  // namespace amfpmc
