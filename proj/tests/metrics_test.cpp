#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "amfpmc/error.hpp"
#include "amfpmc/metrics.hpp"

using namespace amfpmc;

namespace {

// O(m^2) pair counting.
double brute_auc(const std::vector<ScoredLabel>& items) {
  double concordant = 0.0, ties = 0.0, pos = 0.0, neg = 0.0;
  for (const auto& x : items) (x.positive ? pos : neg) += 1.0;
  for (const auto& p : items) {
    if (!p.positive) continue;
    for (const auto& n : items) {
      if (n.positive) continue;
      if (p.score > n.score) concordant += 1.0;
      else if (p.score == n.score) ties += 1.0;
    }
  }
  return (concordant + 0.5 * ties) / (pos * neg);
}

// Scores on a coarse grid so ties are common.
std::vector<ScoredLabel> random_items(Rng& rng, std::size_t m) {
  std::vector<ScoredLabel> items(m);
  for (auto& it : items) {
    it.score = static_cast<double>(uniform_index(rng, 40)) / 40.0;
    it.positive = uniform01(rng) < 0.4;
  }
  items[0].positive = true;
  items[1].positive = false;
  return items;
}

Eigen::MatrixXd random_probs(Rng& rng, Eigen::Index m, Eigen::Index k) {
  Eigen::MatrixXd p(m, k);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) p(r, c) = uniform01(rng) + 1e-3;
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("roc_auc worked examples") {
  std::vector<ScoredLabel> perfect = {{0.9, true}, {0.8, true}, {0.1, false}};
  CHECK(roc_auc(perfect) == 1.0);
  std::vector<ScoredLabel> flat = {{0.5, true}, {0.5, false}, {0.5, false}};
  CHECK(roc_auc(flat) == 0.5);
  std::vector<ScoredLabel> mixed = {
      {0.9, true}, {0.8, false}, {0.7, true}, {0.6, false}};
  CHECK(roc_auc(mixed) == 0.75);
  std::vector<ScoredLabel> only_pos = {{0.1, true}, {0.2, true}};
  CHECK(kind_of([&] { roc_auc(only_pos); }) == ErrorKind::DegenerateLabels);
}

TEST_CASE("roc_auc equals brute-force pair counting") {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = 2 + uniform_index(rng, 199);
    const auto items = random_items(rng, m);
    CHECK(roc_auc(items) == brute_auc(items));
  }
}

TEST_CASE("roc_auc invariances") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    auto items = random_items(rng, 2 + uniform_index(rng, 199));
    const double base = roc_auc(items);
    auto transformed = items;
    for (auto& it : transformed) it.score = std::exp(3.0 * it.score) - 7.0;
    CHECK(roc_auc(transformed) == base);
    auto flipped = items;
    for (auto& it : flipped) it.positive = !it.positive;
    CHECK(roc_auc(flipped) == doctest::Approx(1.0 - base).epsilon(1e-12));
  }
}

TEST_CASE("average_precision worked examples") {
  std::vector<ScoredLabel> first = {
      {0.9, true}, {0.8, true}, {0.3, false}, {0.1, false}};
  CHECK(average_precision(first) == 1.0);
  std::vector<ScoredLabel> last = {
      {0.9, false}, {0.8, false}, {0.7, false}, {0.6, false}, {0.1, true}};
  CHECK(average_precision(last) == doctest::Approx(1.0 / 5).epsilon(1e-15));
  std::vector<ScoredLabel> mixed = {{0.9, true}, {0.8, false}, {0.7, true}};
  CHECK(average_precision(mixed) == doctest::Approx(5.0 / 6).epsilon(1e-15));
  std::vector<ScoredLabel> none = {{0.9, false}};
  CHECK(kind_of([&] { average_precision(none); }) == ErrorKind::NoPositives);
}

TEST_CASE("average_precision breaks ties by input order") {
  std::vector<ScoredLabel> pos_first = {{0.5, true}, {0.5, false}};
  std::vector<ScoredLabel> neg_first = {{0.5, false}, {0.5, true}};
  CHECK(average_precision(pos_first) == 1.0);
  CHECK(average_precision(neg_first) == 0.5);
}

TEST_CASE("average_precision lower bound and random baseline") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    auto items = random_items(rng, 50 + uniform_index(rng, 100));
    items[0].score = 2.0;  // a positive strictly on top
    double positives = 0;
    for (const auto& it : items) positives += it.positive;
    CHECK(average_precision(items) >= 1.0 / positives);
  }
  // A positive on top does not lift AP to the positive rate: one positive
  // first, 50 negatives, then the other 49 positives.
  std::vector<ScoredLabel> split(100);
  for (int i = 0; i < 100; ++i) {
    split[i] = {100.0 - i, i == 0 || i > 50};
  }
  CHECK(average_precision(split) < 0.5);

  std::vector<ScoredLabel> big(100000);
  double positives = 0;
  for (auto& it : big) {
    it.score = uniform01(rng);
    it.positive = uniform01(rng) < 0.3;
    positives += it.positive;
  }
  CHECK(std::abs(average_precision(big) - positives / big.size()) < 1e-2);
}

TEST_CASE("identity predictions score perfectly") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(6, 3);
  const std::vector<ClassId> truths = {0, 1, 2, 2, 1, 0};
  for (int r = 0; r < 6; ++r) p(r, truths[r]) = 1.0;
  const auto rep = multiclass_report(p, truths);
  CHECK(rep.accuracy == 1.0);
  for (const auto* avg : {&rep.micro, &rep.macro}) {
    CHECK(avg->precision == 1.0);
    CHECK(avg->recall == 1.0);
    CHECK(avg->f1 == 1.0);
    CHECK(avg->auroc == 1.0);
    CHECK(avg->aupr == 1.0);
  }
}

TEST_CASE("argmax ties go to the lowest class") {
  Eigen::MatrixXd p(2, 2);
  p << 0.6, 0.4, 0.6, 0.4;
  const std::vector<ClassId> truths = {0, 1};
  const auto rep = multiclass_report(p, truths);
  CHECK(rep.accuracy == 0.5);
  Eigen::VectorXd tie(3);
  tie << 0.2, 0.4, 0.4;
  CHECK(argmax(tie) == 1);
}

TEST_CASE("report matches per-class brute-force counts") {
  Rng rng(4);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index k = 2 + uniform_index(rng, 5);
    const Eigen::Index m = 5 + uniform_index(rng, 60);
    const auto p = random_probs(rng, m, k);
    std::vector<ClassId> truths(m);
    for (auto& t : truths) t = static_cast<ClassId>(uniform_index(rng, k - 1));
    truths[0] = 0;
    truths[1] = 1;
    const auto rep = multiclass_report(p, truths);

    // Micro P, R, F1 coincide with accuracy exactly.
    CHECK(rep.micro.precision == rep.accuracy);
    CHECK(rep.micro.recall == rep.accuracy);
    CHECK(rep.micro.f1 == rep.accuracy);

    double macro_p = 0, macro_r = 0, macro_auc = 0;
    int supported = 0, curves = 0;
    std::size_t correct = 0;
    for (Eigen::Index c = 0; c < k; ++c) {
      std::size_t tp = 0, predicted = 0, support = 0;
      std::vector<ScoredLabel> col;
      for (Eigen::Index r = 0; r < m; ++r) {
        Eigen::Index guess = 0;
        for (Eigen::Index j = 1; j < k; ++j)
          if (p(r, j) > p(r, guess)) guess = j;
        predicted += guess == c;
        support += truths[r] == c;
        tp += guess == c && truths[r] == c;
        if (c == 0) correct += guess == truths[r];
        col.push_back({p(r, c), truths[r] == c});
      }
      const auto row = std::find_if(
          rep.per_class.begin(), rep.per_class.end(),
          [&](const ClassMetrics& x) { return x.label == c; });
      REQUIRE(row != rep.per_class.end());
      CHECK(row->support == support);
      const double prec = predicted ? double(tp) / predicted : 0.0;
      const double rec = support ? double(tp) / support : 0.0;
      CHECK(row->precision == doctest::Approx(prec).epsilon(1e-15));
      CHECK(row->recall == doctest::Approx(rec).epsilon(1e-15));
      if (support > 0) {
        ++supported;
        macro_p += prec;
        macro_r += rec;
      }
      if (support > 0 && support < static_cast<std::size_t>(m)) {
        REQUIRE(row->auroc.has_value());
        CHECK(*row->auroc == brute_auc(col));
        macro_auc += brute_auc(col);
        ++curves;
      } else {
        CHECK_FALSE(row->auroc.has_value());
        CHECK_FALSE(row->aupr.has_value());
      }
    }
    CHECK(rep.accuracy == double(correct) / m);
    CHECK(rep.macro.precision == doctest::Approx(macro_p / supported));
    CHECK(rep.macro.recall == doctest::Approx(macro_r / supported));
    CHECK(rep.macro.auroc == doctest::Approx(macro_auc / curves));

    std::vector<ScoredLabel> pooled;
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < k; ++c)
        pooled.push_back({p(r, c), truths[r] == c});
    CHECK(rep.micro.auroc == brute_auc(pooled));

    CHECK(rep.per_class.size() == static_cast<std::size_t>(k));
    for (std::size_t i = 1; i < rep.per_class.size(); ++i) {
      const auto& a = rep.per_class[i - 1];
      const auto& b = rep.per_class[i];
      CHECK((a.support > b.support ||
             (a.support == b.support && a.label < b.label)));
    }
    for (const auto& row : rep.supported_classes()) CHECK(row.support > 0);
  }
}

TEST_CASE("report errors") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Constant(2, 3, 1.0 / 3);
  const std::vector<ClassId> one = {0};
  CHECK(kind_of([&] { multiclass_report(p, one); }) == ErrorKind::ShapeMismatch);
  const std::vector<ClassId> bad = {0, 3};
  CHECK(kind_of([&] { multiclass_report(p, bad); }) == ErrorKind::InvalidClass);
  CHECK(kind_of([&] {
          multiclass_report(Eigen::MatrixXd(0, 3), std::vector<ClassId>{});
        }) == ErrorKind::EmptyInput);
  const std::vector<ClassId> same = {1, 1};
  CHECK(kind_of([&] { multiclass_report(p, same); }) ==
        ErrorKind::DegenerateLabels);
}

TEST_CASE("constant predictions give chance AUROC") {
  Eigen::MatrixXd p(6, 2);
  p.col(0).setConstant(5.0 / 6);
  p.col(1).setConstant(1.0 / 6);
  const std::vector<ClassId> truths = {0, 0, 0, 1, 0, 0};
  const auto rep = multiclass_report(p, truths);
  CHECK(rep.accuracy == doctest::Approx(5.0 / 6));
  for (const auto& row : rep.per_class) CHECK(*row.auroc == 0.5);
}

TEST_CASE("average_reports") {
  Rng rng(5);
  std::vector<MultiClassReport> reps;
  for (int f = 0; f < 3; ++f) {
    const auto p = random_probs(rng, 20, 3);
    std::vector<ClassId> truths(20);
    for (auto& t : truths) t = static_cast<ClassId>(uniform_index(rng, 3));
    truths[0] = 0;
    truths[1] = 1;
    truths[2] = 2;
    reps.push_back(multiclass_report(p, truths));
  }
  const auto mean = average_reports(reps);
  CHECK(mean.n_samples == 60);
  CHECK(mean.accuracy ==
        doctest::Approx((reps[0].accuracy + reps[1].accuracy +
                         reps[2].accuracy) / 3));
  CHECK(mean.macro.auroc ==
        doctest::Approx((reps[0].macro.auroc + reps[1].macro.auroc +
                         reps[2].macro.auroc) / 3));
  std::size_t support = 0;
  for (const auto& row : mean.per_class) support += row.support;
  CHECK(support == 60);
  CHECK(average_reports(std::span(reps.data(), 1)) == reps[0]);
  CHECK_THROWS_AS(average_reports({}), Error);
}

TEST_CASE("class weights") {
  const std::vector<std::size_t> balanced = {4, 4, 4};
  CHECK(class_weights(balanced) == Eigen::VectorXd::Ones(3));
  const std::vector<std::size_t> skewed = {30, 10};
  const auto w = class_weights(skewed);
  CHECK(w[0] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(w[1] == doctest::Approx(2.0).epsilon(1e-15));
  const std::vector<std::size_t> gap = {30, 0, 10};
  const auto g = class_weights(gap);
  CHECK(g[1] == 0.0);
  CHECK(g[0] == doctest::Approx(2.0 / 3));
  CHECK(g[2] == doctest::Approx(2.0));
  const std::vector<std::size_t> empty = {0, 0};
  CHECK(kind_of([&] { class_weights(empty); }) == ErrorKind::AllEmpty);
}
