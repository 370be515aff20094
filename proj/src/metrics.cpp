#include "amfpmc/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "amfpmc/error.hpp"

namespace amfpmc {

double roc_auc(std::span<const ScoredLabel> items) {
  const std::size_t m = items.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return items[x].score < items[y].score;
  });

  // Twice the midrank keeps the rank sum integral.
  double rank_sum_x2 = 0.0;
  std::size_t positives = 0;
  std::size_t start = 0;
  while (start < m) {
    std::size_t end = start + 1;
    while (end < m && items[order[end]].score == items[order[start]].score) {
      ++end;
    }
    const double twice_midrank = static_cast<double>(start + 1 + end);
    for (std::size_t r = start; r < end; ++r) {
      if (items[order[r]].positive) {
        rank_sum_x2 += twice_midrank;
        ++positives;
      }
    }
    start = end;
  }
  const std::size_t negatives = m - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorKind::DegenerateLabels,
                "AUROC needs both positives and negatives (" +
                    std::to_string(positives) + " positives, " +
                    std::to_string(negatives) + " negatives)");
  }
  const double p = static_cast<double>(positives);
  const double u = rank_sum_x2 / 2.0 - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

double average_precision(std::span<const ScoredLabel> items) {
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) {
                     return items[x].score > items[y].score;
                   });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (items[order[r]].positive) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) {
    throw Error(ErrorKind::NoPositives, "average precision needs a positive");
  }
  return sum / static_cast<double>(hits);
}

Eigen::Index argmax(const Eigen::Ref<const Eigen::VectorXd>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k) {
    if (row[k] > row[best]) best = k;
  }
  return best;
}

std::vector<ClassMetrics> MultiClassReport::supported_classes() const {
  std::vector<ClassMetrics> out;
  std::copy_if(per_class.begin(), per_class.end(), std::back_inserter(out),
               [](const ClassMetrics& c) { return c.support > 0; });
  return out;
}

namespace {

double safe_ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

void sort_per_class(std::vector<ClassMetrics>& rows) {
  std::sort(rows.begin(), rows.end(),
            [](const ClassMetrics& x, const ClassMetrics& y) {
              if (x.support != y.support) return x.support > y.support;
              return x.label < y.label;
            });
}

}  // namespace

MultiClassReport multiclass_report(const Eigen::MatrixXd& probs,
                                   std::span<const ClassId> truths) {
  const auto m = probs.rows();
  const auto k = probs.cols();
  if (m == 0) throw Error(ErrorKind::EmptyInput, "no rows to evaluate");
  if (static_cast<std::size_t>(m) != truths.size()) {
    throw Error(ErrorKind::ShapeMismatch,
                std::to_string(m) + " probability rows but " +
                    std::to_string(truths.size()) + " truths");
  }
  if (k < 2) throw Error(ErrorKind::ShapeMismatch, "need at least 2 classes");

  std::vector<std::size_t> support(k, 0), predicted(k, 0), true_pos(k, 0);
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < m; ++r) {
    const ClassId truth = truths[r];
    if (truth < 0 || truth >= k) {
      throw Error(ErrorKind::InvalidClass,
                  "truth " + std::to_string(truth) + " outside 0.." +
                      std::to_string(k - 1));
    }
    const auto guess = argmax(probs.row(r).transpose());
    ++support[truth];
    ++predicted[guess];
    if (guess == truth) {
      ++true_pos[truth];
      ++correct;
    }
  }

  MultiClassReport report;
  report.n_samples = static_cast<std::size_t>(m);
  report.accuracy = static_cast<double>(correct) / static_cast<double>(m);

  // Pooled confusion: every wrong row is one FP and one FN.
  const double tp = static_cast<double>(correct);
  const double wrong = static_cast<double>(m) - tp;
  report.micro.precision = tp / (tp + wrong);
  report.micro.recall = tp / (tp + wrong);
  report.micro.f1 = (2.0 * tp) / (2.0 * tp + wrong + wrong);

  std::vector<ScoredLabel> pooled;
  pooled.reserve(static_cast<std::size_t>(m * k));
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) {
      pooled.push_back({probs(r, c), truths[r] == c});
    }
  }
  report.micro.auroc = roc_auc(pooled);
  report.micro.aupr = average_precision(pooled);

  std::vector<ScoredLabel> column(static_cast<std::size_t>(m));
  std::size_t n_supported = 0, n_curves = 0;
  for (Eigen::Index c = 0; c < k; ++c) {
    ClassMetrics row;
    row.label = static_cast<ClassId>(c);
    row.support = support[c];
    row.precision = safe_ratio(static_cast<double>(true_pos[c]),
                               static_cast<double>(predicted[c]));
    row.recall = safe_ratio(static_cast<double>(true_pos[c]),
                            static_cast<double>(support[c]));
    row.f1 = safe_ratio(2.0 * row.precision * row.recall,
                        row.precision + row.recall);
    if (support[c] > 0 && support[c] < static_cast<std::size_t>(m)) {
      for (Eigen::Index r = 0; r < m; ++r) {
        column[r] = {probs(r, c), truths[r] == c};
      }
      row.auroc = roc_auc(column);
      row.aupr = average_precision(column);
    }
    if (support[c] > 0) {
      ++n_supported;
      report.macro.precision += row.precision;
      report.macro.recall += row.recall;
      report.macro.f1 += row.f1;
    }
    if (row.auroc) {
      ++n_curves;
      report.macro.auroc += *row.auroc;
      report.macro.aupr += *row.aupr;
    }
    report.per_class.push_back(row);
  }
  if (n_curves == 0) {
    throw Error(ErrorKind::DegenerateLabels,
                "no class has both positive and negative test rows");
  }
  report.macro.precision /= static_cast<double>(n_supported);
  report.macro.recall /= static_cast<double>(n_supported);
  report.macro.f1 /= static_cast<double>(n_supported);
  report.macro.auroc /= static_cast<double>(n_curves);
  report.macro.aupr /= static_cast<double>(n_curves);
  sort_per_class(report.per_class);
  return report;
}

MultiClassReport average_reports(std::span<const MultiClassReport> reports) {
  if (reports.empty()) throw Error(ErrorKind::EmptyInput, "no reports");
  const double n = static_cast<double>(reports.size());
  MultiClassReport mean;
  auto accumulate = [](AveragedMetrics& into, const AveragedMetrics& from) {
    into.precision += from.precision;
    into.recall += from.recall;
    into.f1 += from.f1;
    into.auroc += from.auroc;
    into.aupr += from.aupr;
  };
  auto scale = [](AveragedMetrics& x, double s) {
    x.precision *= s;
    x.recall *= s;
    x.f1 *= s;
    x.auroc *= s;
    x.aupr *= s;
  };

  struct Acc {
    ClassMetrics sum;
    std::size_t folds = 0, curve_folds = 0;
  };
  std::vector<Acc> classes;
  for (const auto& r : reports) {
    mean.n_samples += r.n_samples;
    mean.accuracy += r.accuracy;
    accumulate(mean.micro, r.micro);
    accumulate(mean.macro, r.macro);
    for (const auto& c : r.per_class) {
      if (static_cast<std::size_t>(c.label) >= classes.size()) {
        classes.resize(c.label + 1);
      }
      auto& acc = classes[c.label];
      acc.sum.label = c.label;
      acc.sum.support += c.support;
      acc.sum.precision += c.precision;
      acc.sum.recall += c.recall;
      acc.sum.f1 += c.f1;
      ++acc.folds;
      if (c.auroc) {
        acc.sum.auroc = acc.sum.auroc.value_or(0.0) + *c.auroc;
        acc.sum.aupr = acc.sum.aupr.value_or(0.0) + *c.aupr;
        ++acc.curve_folds;
      }
    }
  }
  mean.accuracy /= n;
  scale(mean.micro, 1.0 / n);
  scale(mean.macro, 1.0 / n);
  for (auto& acc : classes) {
    if (acc.folds == 0) continue;
    auto row = acc.sum;
    const double f = static_cast<double>(acc.folds);
    row.precision /= f;
    row.recall /= f;
    row.f1 /= f;
    if (acc.curve_folds > 0) {
      *row.auroc /= static_cast<double>(acc.curve_folds);
      *row.aupr /= static_cast<double>(acc.curve_folds);
    }
    mean.per_class.push_back(row);
  }
  sort_per_class(mean.per_class);
  return mean;
}

Eigen::VectorXd class_weights(std::span<const std::size_t> counts) {
  const auto total = std::accumulate(counts.begin(), counts.end(),
                                     std::size_t{0});
  if (total == 0) throw Error(ErrorKind::AllEmpty, "every class is empty");
  const auto effective =
      std::count_if(counts.begin(), counts.end(),
                    [](std::size_t c) { return c > 0; });
  Eigen::VectorXd w = Eigen::VectorXd::Zero(
      static_cast<Eigen::Index>(counts.size()));
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) {
      w[c] = static_cast<double>(total) /
             (static_cast<double>(effective) * static_cast<double>(counts[c]));
    }
  }
  return w;
}

}  // namespace amfpmc
