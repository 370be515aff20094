#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "amfpmc/metrics.hpp"
#include "amfpmc/model.hpp"

using namespace amfpmc;

namespace {

// Random parameters with nonzero biases so every gradient path is live.
Model random_model(Rng& rng, int n, int k, int d) {
  auto m = init_model<double>(n, k, d, rng);
  for (Eigen::Index i = 0; i < m.drug_bias.size(); ++i)
    m.drug_bias[i] = uniform01(rng) - 0.5;
  for (Eigen::Index c = 0; c < k; ++c) {
    m.class_bias[c] = uniform01(rng) - 0.5;
    m.bias_coupling[c] = 0.5 + uniform01(rng);
  }
  return m;
}

std::vector<LabeledPair> random_batch(Rng& rng, int n, int k, int size) {
  std::vector<LabeledPair> batch;
  for (int s = 0; s < size; ++s) {
    const auto a = static_cast<DrugIndex>(uniform_index(rng, n));
    auto b = static_cast<DrugIndex>(uniform_index(rng, n - 1));
    if (b >= a) ++b;
    SoftTarget t(k);
    for (int c = 0; c < k; ++c) t[c] = uniform01(rng) + 0.01;
    t /= t.sum();
    const auto label = static_cast<ClassId>(argmax(t));
    batch.push_back({std::min(a, b), std::max(a, b), label, t});
  }
  return batch;
}

// Largest absolute entry across every parameter block of x - y.
double max_block_diff(const Model& x, const Model& y) {
  double worst = 0.0;
  std::apply(
      [&](const auto&... a) {
        std::apply(
            [&](const auto&... b) {
              ((worst = std::max(worst, (a - b).cwiseAbs().maxCoeff())), ...);
            },
            y.blocks());
      },
      x.blocks());
  return worst;
}

Eigen::VectorXd random_weights(Rng& rng, int k) {
  Eigen::VectorXd w(k);
  for (int c = 0; c < k; ++c) w[c] = 0.5 + uniform01(rng);
  return w;
}

}  // namespace

TEST_CASE("init_model shapes, ranges and determinism") {
  Hyperparameters hp;
  hp.embedding_dim = 4;
  hp.seed = 11;
  const auto m = init_model<double>(3, 2, hp);
  CHECK(m.embedding.rows() == 3);
  CHECK(m.embedding.cols() == 4);
  CHECK(m.projection.rows() == 2);
  CHECK(m.projection.cols() == 4);
  CHECK(m.drug_bias.isZero());
  CHECK(m.class_bias.isZero());
  CHECK(m.bias_coupling == Eigen::VectorXd::Ones(2));
  CHECK(m.embedding.cwiseAbs().maxCoeff() <= 0.5);
  CHECK(m.projection.cwiseAbs().maxCoeff() <= 0.5);
  CHECK(init_model<double>(3, 2, hp) == m);
  hp.seed = 12;
  CHECK_FALSE(init_model<double>(3, 2, hp) == m);

  Rng rng(1);
  CHECK_THROWS_AS(init_model<double>(1, 2, 4, rng), Error);
  CHECK_THROWS_AS(init_model<double>(3, 1, 4, rng), Error);
  CHECK_THROWS_AS(init_model<double>(3, 2, 0, rng), Error);
}

TEST_CASE("hyperparameter validation") {
  Hyperparameters hp;
  CHECK_NOTHROW(hp.validate());
  hp.dropout = 1.0;
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = {};
  hp.embedding_dim = 0;
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = {};
  hp.learning_rate = 0.0;
  CHECK_THROWS_AS(hp.validate(), Error);
  hp = {};
  hp.alpha = 1.01;
  CHECK_THROWS_AS(hp.validate(), Error);
}

TEST_CASE("forward evaluates the formula") {
  auto m = Model::zeros(2, 1, 1);
  m.embedding(0, 0) = 2.0;
  m.embedding(1, 0) = 3.0;
  m.projection(0, 0) = 0.5;
  m.class_bias[0] = 0.1;
  m.bias_coupling[0] = 1.0;
  const auto pass = forward(m, 0, 1);
  CHECK(pass.logits[0] == doctest::Approx(3.1).epsilon(1e-15));

  m.drug_bias << 0.25, -0.5;
  CHECK(forward(m, 1, 0).logits[0] ==
        doctest::Approx(3.1 - 0.25).epsilon(1e-15));
}

TEST_CASE("zero embedding leaves only the class bias") {
  Rng rng(3);
  auto m = random_model(rng, 4, 3, 5);
  m.drug_bias.setZero();
  m.embedding.row(2).setZero();
  CHECK(forward(m, 2, 0).logits == m.class_bias);
}

TEST_CASE("forward and predict reject bad pairs") {
  Rng rng(4);
  const auto m = random_model(rng, 4, 3, 2);
  CHECK_THROWS_AS(forward(m, 1, 1), Error);
  CHECK_THROWS_AS(predict(m, 0, 4), Error);
}

TEST_CASE("prediction symmetry, normalisation and shift invariance") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 9));
    const int k = 2 + static_cast<int>(uniform_index(rng, 5));
    const int d = 1 + static_cast<int>(uniform_index(rng, 8));
    auto m = random_model(rng, n, k, d);
    const auto i = static_cast<DrugIndex>(uniform_index(rng, n));
    auto j = static_cast<DrugIndex>(uniform_index(rng, n - 1));
    if (j >= i) ++j;
    const auto p = predict(m, i, j);
    CHECK(p == predict(m, j, i));
    CHECK(forward(m, i, j).logits == forward(m, j, i).logits);
    CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
    CHECK(p.minCoeff() > 0.0);
    m.class_bias.array() += 3.7;
    CHECK((predict(m, i, j) - p).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("float instantiation stays symmetric") {
  Rng rng(6);
  const auto m = init_model<float>(5, 3, 4, rng);
  CHECK(predict(m, 1, 3) == predict(m, 3, 1));
}

TEST_CASE("dropout masks are drawn per slot only when training") {
  Rng rng(7);
  const auto m = random_model(rng, 5, 3, 64);
  const auto plain = forward(m, 0, 1, 0.5);
  CHECK(plain.left_mask == Eigen::VectorXd::Ones(64));
  Rng a(99), b(99);
  const auto x = forward(m, 0, 1, 0.5, &a);
  const auto y = forward(m, 0, 1, 0.5, &b);
  CHECK(x.logits == y.logits);
  CHECK_FALSE(x.left_mask == x.right_mask);
  for (Eigen::Index k = 0; k < 64; ++k) {
    CHECK((x.left_mask[k] == 0.0 || x.left_mask[k] == 2.0));
  }
  Rng off(99);
  const auto unused = off();
  Rng fresh(99);
  forward(m, 0, 1, 0.0, &fresh);
  CHECK(fresh() == unused);  // no draws at dropout 0
}

TEST_CASE("loss worked values") {
  Matrix<double> target(1, 4);
  target << 0, 1, 0, 0;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
  CHECK(loss<double>(target, target, ones) <= 1e-10);
  Matrix<double> uniform = Matrix<double>::Constant(1, 4, 0.25);
  CHECK(loss<double>(uniform, target, ones) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(loss<double>(uniform, target, Eigen::VectorXd(2 * ones)) ==
        doctest::Approx(2 * std::log(4.0)).epsilon(1e-12));

  // Weight comes from the argmax of the (soft) target.
  Eigen::VectorXd w(4);
  w << 1, 3, 5, 7;
  Matrix<double> soft(1, 4);
  soft << 0.1, 0.2, 0.6, 0.1;
  CHECK(loss<double>(uniform, soft, w) ==
        doctest::Approx(5 * std::log(4.0)).epsilon(1e-12));

  // A zero probability is clamped rather than producing infinity.
  Matrix<double> zero(1, 4);
  zero << 1, 0, 0, 0;
  CHECK(loss<double>(zero, target, ones) ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-12));

  CHECK_THROWS_AS(loss<double>(uniform, Matrix<double>(2, 4), ones), Error);
  CHECK_THROWS_AS(loss<double>(uniform, target, Eigen::VectorXd(ones.head(3))),
                  Error);
  CHECK_THROWS_AS(loss<double>(Matrix<double>(0, 4), Matrix<double>(0, 4), ones),
                  Error);
}

TEST_CASE("backward matches finite differences") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + static_cast<int>(uniform_index(rng, 8));
    const int k = 2 + static_cast<int>(uniform_index(rng, 5));
    const int d = 1 + static_cast<int>(uniform_index(rng, 8));
    const auto m = random_model(rng, n, k, d);
    const auto batch = random_batch(rng, n, k, 6);
    const auto w = random_weights(rng, k);
    CHECK(gradient_check<double>(m, batch, w) < 1e-4);
  }
}

TEST_CASE("spec-sized gradient check and eps sensitivity") {
  Rng rng(9);
  const auto m = random_model(rng, 5, 4, 3);
  const auto batch = random_batch(rng, 5, 4, 8);
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
  const double coarse = gradient_check<double>(m, batch, w, 1e-5);
  const double fine = gradient_check<double>(m, batch, w, 5e-6);
  CHECK(coarse < 1e-4);
  CHECK(fine <= 10 * std::max(coarse, 1e-9));
}

TEST_CASE("zero model with uniform targets has vanishing gradients") {
  const auto m = Model::zeros(4, 3, 2);
  std::vector<LabeledPair> batch = {
      {0, 1, 0, SoftTarget::Constant(3, 1.0 / 3)},
      {2, 3, 1, SoftTarget::Constant(3, 1.0 / 3)}};
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
  const auto g = backward<double>(m, batch, w).grads;
  CHECK(max_block_diff(g, Model::zeros(4, 3, 2)) < 1e-15);
  CHECK(gradient_check<double>(m, batch, w) < 1e-4);
}

TEST_CASE("backward sparsity and batch-mean behaviour") {
  Rng rng(10);
  const auto m = random_model(rng, 6, 3, 4);
  std::vector<LabeledPair> batch = {{1, 4, 2, SoftTarget::Unit(3, 2)}};
  const Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
  const auto r = backward<double>(m, batch, w);
  for (int row : {0, 2, 3, 5}) {
    CHECK(r.grads.embedding.row(row).isZero(0.0));
    CHECK(r.grads.drug_bias[row] == 0.0);
  }
  CHECK_FALSE(r.grads.embedding.row(1).isZero(0.0));
  CHECK(r.loss == doctest::Approx(batch_loss<double>(m, batch, w)));

  auto many = random_batch(rng, 6, 3, 7);
  auto doubled = many;
  doubled.insert(doubled.end(), many.begin(), many.end());
  const auto once = backward<double>(m, many, w);
  const auto twice = backward<double>(m, doubled, w);
  CHECK(twice.loss == doctest::Approx(once.loss).epsilon(1e-12));
  CHECK(max_block_diff(once.grads, twice.grads) <= 1e-12);

  CHECK_THROWS_AS(backward<double>(m, std::span<const LabeledPair>{}, w),
                  Error);
  CHECK_THROWS_AS(backward<double>(m, many, Eigen::VectorXd::Ones(2)), Error);
}

TEST_CASE("backward weights rows by the hard label") {
  Rng rng(12);
  const auto m = random_model(rng, 4, 3, 2);
  // Soft target peaks at class 2 but the label is 0.
  SoftTarget t(3);
  t << 0.3, 0.1, 0.6;
  std::vector<LabeledPair> batch = {{0, 1, 0, t}};
  Eigen::VectorXd w(3);
  w << 2.0, 1.0, 5.0;
  const auto r = backward<double>(m, batch, w);
  const Eigen::VectorXd unit = Eigen::VectorXd::Ones(3);
  CHECK(r.loss == doctest::Approx(2.0 * backward<double>(m, batch, unit).loss)
                      .epsilon(1e-12));
}

TEST_CASE("adam first step and zero gradient") {
  auto m = Model::zeros(2, 2, 1);
  m.embedding << 1.0, -2.0;
  auto state = AdamState<double>::for_params(m);
  auto g = Model::zeros(2, 2, 1);
  const auto before = m;
  adam_step(m, g, state, 0.01);
  CHECK(m == before);
  CHECK(state.step == 1);

  g.embedding << 0.3, -4.0;
  state = AdamState<double>::for_params(m);
  adam_step(m, g, state, 0.01);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  CHECK(m.embedding(0, 0) ==
        doctest::Approx(1.0 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-14));
  CHECK(m.embedding(1, 0) ==
        doctest::Approx(-2.0 + 0.01 * 4.0 / (4.0 + 1e-8)).epsilon(1e-14));
  CHECK(m.drug_bias == before.drug_bias);

  auto wrong = Model::zeros(3, 2, 1);
  CHECK_THROWS_AS(adam_step(m, wrong, state, 0.01), Error);
}

TEST_CASE("optimisation trajectories are bitwise reproducible") {
  auto run = [] {
    Rng rng(13);
    auto m = random_model(rng, 6, 3, 4);
    auto state = AdamState<double>::for_params(m);
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
    for (int step = 0; step < 25; ++step) {
      const auto batch = random_batch(rng, 6, 3, 4);
      adam_step(m, backward<double>(m, batch, w, 0.3, &rng).grads, state, 0.01);
    }
    return m;
  };
  CHECK(run() == run());
}

TEST_CASE("embedding export") {
  Rng rng(14);
  const auto m = random_model(rng, 3, 2, 5);
  DrugRoster roster;
  roster.add("x");
  roster.add("y");
  roster.add("z");
  const auto table = export_embeddings(m, roster);
  CHECK(table.drug_ids == std::vector<std::string>{"x", "y", "z"});
  CHECK(table.values.rows() == 3);
  CHECK(table.values == m.embedding);
  CHECK(table.values.row(1) == m.embedding.row(1));
  CHECK_THROWS_AS(export_embeddings(m, DrugRoster::numbered(2)), Error);
}
