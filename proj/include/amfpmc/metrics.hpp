#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "amfpmc/types.hpp"

namespace amfpmc {

struct ScoredLabel {
  double score = 0.0;
  bool positive = false;
};

/// Mann-Whitney AUROC via midrank sums, O(m log m). Ties count one half.
/// Throws DegenerateLabels unless both labels are present.
double roc_auc(std::span<const ScoredLabel> items);

/// Step-wise average precision over descending scores; equal scores keep
/// input order. Throws NoPositives.
double average_precision(std::span<const ScoredLabel> items);

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auroc = 0.0;
  double aupr = 0.0;
  bool operator==(const AveragedMetrics&) const = default;
};

struct ClassMetrics {
  ClassId label = 0;
  std::size_t support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Null when the class has no positives or no negatives among test rows.
  std::optional<double> auroc;
  std::optional<double> aupr;
  bool operator==(const ClassMetrics&) const = default;
};

struct MultiClassReport {
  std::size_t n_samples = 0;
  double accuracy = 0.0;
  AveragedMetrics micro;
  AveragedMetrics macro;
  /// Every class 0..K-1, sorted by support descending then class index.
  std::vector<ClassMetrics> per_class;

  /// Rows with nonzero support, in per_class order.
  std::vector<ClassMetrics> supported_classes() const;

  bool operator==(const MultiClassReport&) const = default;
};

/// Argmax (ties to the lowest index) classification report over an M x K
/// probability matrix.
///
/// Macro metrics average the one-vs-rest per-class values over classes with
/// nonzero support. Micro AUROC/AUPR pool all M*K one-vs-rest pairs; micro
/// P/R/F1 pool confusion counts and therefore all equal accuracy.
/// Throws ShapeMismatch, EmptyInput, InvalidClass, or DegenerateLabels when
/// no class has a defined AUROC.
MultiClassReport multiclass_report(const Eigen::MatrixXd& probs,
                                   std::span<const ClassId> truths);

/// Elementwise mean of fold reports; per-class curve metrics average over
/// the folds where they are defined and supports are summed.
MultiClassReport average_reports(std::span<const MultiClassReport> reports);

/// Balanced weights total / (K_eff * count_k); zero for empty classes, where
/// K_eff counts the nonempty classes. Throws AllEmpty.
Eigen::VectorXd class_weights(std::span<const std::size_t> counts);

/// Index of the largest entry, lowest index on ties.
Eigen::Index argmax(const Eigen::Ref<const Eigen::VectorXd>& row);

}  // namespace amfpmc
