#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "amfpmc/graph.hpp"
#include "amfpmc/metrics.hpp"
#include "amfpmc/model.hpp"
#include "amfpmc/propagation.hpp"

namespace amfpmc {

/// Attaches propagated soft targets to labelled pairs. Targets read only
/// `propagation_graph`, which must be built from training edges alone.
std::vector<LabeledPair> label_pairs(const InteractionGraph& propagation_graph,
                                     std::span<const Interaction> pairs,
                                     double alpha);

/// Same pairs with one-hot targets and no graph involved.
std::vector<LabeledPair> one_hot_pairs(std::span<const Interaction> pairs,
                                       int n_classes);

/// Per-class sample counts of the labels.
std::vector<std::size_t> label_counts(std::span<const LabeledPair> pairs,
                                      int n_classes);

struct TrainingTrace {
  std::vector<double> epoch_loss;  // mean mini-batch loss per epoch
};

/// Seeded mini-batch Adam training. The seed drives initialisation, the
/// per-epoch shuffles and the dropout masks, in that order. Class weights
/// are the balanced weights of the given labels (ones when balancing is off).
/// Throws EmptyDataset.
Model train(std::span<const LabeledPair> pairs, const Hyperparameters& hp,
            std::size_t n_drugs, int n_classes,
            TrainingTrace* trace = nullptr);

/// M x K matrix of inference probabilities.
Eigen::MatrixXd score_pairs(const Model& params,
                            std::span<const Interaction> pairs);

std::vector<ClassId> truths_of(std::span<const Interaction> pairs);

struct FoldAssignment {
  int k = 0;
  std::vector<int> fold_of;  // parallel to the input pairs

  std::vector<Interaction> select(std::span<const Interaction> pairs,
                                  int fold, bool in_fold) const;
};

/// Seeded shuffle within each class, then one round-robin sweep across
/// folds continuing from class to class. Throws TooFewPairs.
FoldAssignment stratified_kfold(std::span<const Interaction> pairs, int k,
                                std::uint64_t seed);

/// Graph over the same roster holding only `train_pairs`.
InteractionGraph build_training_graph(const InteractionGraph& like,
                                      std::span<const Interaction> train_pairs);

/// Throws LeakageDetected if any test pair is present in the graph.
void assert_no_leakage(const InteractionGraph& training_graph,
                       std::span<const Interaction> test_pairs);

struct HoldoutResult {
  std::vector<MultiClassReport> folds;
  MultiClassReport mean;    // average of the fold reports
  MultiClassReport pooled;  // all out-of-fold predictions together
};

/// k-fold evaluation of a holdout-mode graph. Each fold's propagation graph
/// and class weights come from the other folds' edges only.
HoldoutResult holdout_evaluate(const InteractionGraph& graph,
                               const Hyperparameters& hp, int k,
                               std::uint64_t seed);

/// Both graphs restricted to the drugs they share, on a roster in t0 order.
/// Throws EmptyIntersection.
std::pair<InteractionGraph, InteractionGraph> reconcile_rosters(
    const InteractionGraph& t0, const InteractionGraph& t1);

struct RetrospectiveSplit {
  InteractionGraph graph_t0;  // on the reconciled roster
  std::vector<Interaction> train;
  std::vector<Interaction> test;  // truth = t1 class, 0 if still unlabeled
  std::size_t unlabeled_universe = 0;
};

inline constexpr std::size_t kDefaultTestCap = 5'000'000;

/// Train: every t0 edge plus negative_ratio * |edges| seeded unlabeled pairs
/// as class 0. Test: the remaining unlabeled pairs, uniformly subsampled to
/// `test_cap` when the universe is larger.
RetrospectiveSplit retrospective_split(const InteractionGraph& t0,
                                       const InteractionGraph& t1,
                                       double negative_ratio,
                                       std::uint64_t seed,
                                       std::size_t test_cap = kDefaultTestCap);

struct RetrospectiveResult {
  MultiClassReport report;
  std::size_t n_test = 0;
};

/// Trains on split.train, scores split.test, restricted to pairs with both
/// endpoints in `subset` when given. Throws EmptySubset.
RetrospectiveResult retrospective_evaluate(
    const RetrospectiveSplit& split, const Hyperparameters& hp,
    const std::optional<std::unordered_set<DrugIndex>>& subset = std::nullopt);

struct GridSpec {
  std::vector<int> embedding_dim;
  std::vector<double> dropout;
  std::vector<int> epochs;
  std::vector<int> batch_size;
  std::vector<double> learning_rate;
  std::vector<double> alpha;

  /// Batch sizes {128..1024}, learning rates {0.1..0.0001}, dropout 0..0.9,
  /// epochs 1..50 and alpha 0..1 in steps of 0.1 at d = 512.
  static GridSpec full_table(int embedding_dim = 512);
  static GridSpec single(const Hyperparameters& hp);

  std::size_t size() const;
  /// Grid points in nested order: dim, dropout, epochs, batch, lr, alpha
  /// (alpha varies fastest). Seed and balancing come from `base`.
  std::vector<Hyperparameters> enumerate(const Hyperparameters& base) const;
};

enum class GridObjective { Accuracy, MacroAuroc };

struct GridPointResult {
  Hyperparameters hp;
  double score = 0.0;
};

struct GridResult {
  Hyperparameters best;
  std::vector<GridPointResult> points;
};

/// Stratified validation split, one training run per grid point, argmax of
/// the objective with ties going to the earliest point. Throws EmptyGrid.
GridResult grid_search(const InteractionGraph& graph, const GridSpec& grid,
                       const Hyperparameters& base, double validation_fraction,
                       std::uint64_t seed,
                       GridObjective objective = GridObjective::Accuracy);

/// Stratified split of pairs into (train, validation).
std::pair<std::vector<Interaction>, std::vector<Interaction>>
stratified_holdout(std::span<const Interaction> pairs, double fraction,
                   std::uint64_t seed);

/// Non-learned floor: each test pair scored by its neighbourhood
/// distribution in `graph`.
Eigen::MatrixXd baseline_neighborhood(const InteractionGraph& graph,
                                      std::span<const Interaction> test_pairs);

/// Every test pair gets the empirical training class frequencies.
/// Throws EmptyDataset.
Eigen::MatrixXd baseline_majority(std::span<const Interaction> train_pairs,
                                  std::size_t n_test, int n_classes);

}  // namespace amfpmc
