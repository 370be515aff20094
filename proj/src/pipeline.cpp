#include "amfpmc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace amfpmc {

std::vector<LabeledPair> label_pairs(const InteractionGraph& propagation_graph,
                                     std::span<const Interaction> pairs,
                                     double alpha) {
  const auto cfg = PropagationConfig::with_alpha(alpha);
  std::vector<LabeledPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.push_back({p.a, p.b, p.label,
                   propagate_target(propagation_graph, p.a, p.b, p.label, cfg)});
  }
  return out;
}

std::vector<LabeledPair> one_hot_pairs(std::span<const Interaction> pairs,
                                       int n_classes) {
  std::vector<LabeledPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    if (p.label < 0 || p.label >= n_classes) {
      throw Error(ErrorKind::InvalidClass, "label outside 0..K-1");
    }
    out.push_back({p.a, p.b, p.label, SoftTarget::Unit(n_classes, p.label)});
  }
  return out;
}

std::vector<std::size_t> label_counts(std::span<const LabeledPair> pairs,
                                      int n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (const auto& p : pairs) counts.at(p.label) += 1;
  return counts;
}

Model train(std::span<const LabeledPair> pairs, const Hyperparameters& hp,
            std::size_t n_drugs, int n_classes, TrainingTrace* trace) {
  hp.validate();
  if (pairs.empty()) {
    throw Error(ErrorKind::EmptyDataset, "no training pairs");
  }
  Rng rng(hp.seed);
  Model params = init_model<double>(n_drugs, n_classes, hp.embedding_dim, rng);
  auto state = AdamState<double>::for_params(params);

  const Eigen::VectorXd weights =
      hp.balance_classes ? class_weights(label_counts(pairs, n_classes))
                         : Eigen::VectorXd::Ones(n_classes);

  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<LabeledPair> batch;
  batch.reserve(static_cast<std::size_t>(hp.batch_size));
  const auto batch_size = static_cast<std::size_t>(hp.batch_size);

  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const auto stop = std::min(order.size(), start + batch_size);
      batch.clear();
      for (auto r = start; r < stop; ++r) batch.push_back(pairs[order[r]]);
      auto step = backward<double>(params, batch, weights, hp.dropout, &rng);
      adam_step<double>(params, step.grads, state, hp.learning_rate);
      epoch_loss += step.loss;
      ++n_batches;
    }
    if (trace != nullptr) {
      trace->epoch_loss.push_back(epoch_loss / static_cast<double>(n_batches));
    }
  }
  return params;
}

Eigen::MatrixXd score_pairs(const Model& params,
                            std::span<const Interaction> pairs) {
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(pairs.size()),
                        params.n_classes());
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    probs.row(static_cast<Eigen::Index>(r)) =
        predict(params, pairs[r].a, pairs[r].b).transpose();
  }
  return probs;
}

std::vector<ClassId> truths_of(std::span<const Interaction> pairs) {
  std::vector<ClassId> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.label);
  return out;
}

std::vector<Interaction> FoldAssignment::select(
    std::span<const Interaction> pairs, int fold, bool in_fold) const {
  std::vector<Interaction> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if ((fold_of.at(i) == fold) == in_fold) out.push_back(pairs[i]);
  }
  return out;
}

namespace {

std::map<ClassId, std::vector<std::size_t>> indices_by_class(
    std::span<const Interaction> pairs) {
  std::map<ClassId, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    groups[pairs[i].label].push_back(i);
  }
  return groups;
}

}  // namespace

FoldAssignment stratified_kfold(std::span<const Interaction> pairs, int k,
                                std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::InvalidConfig, "k must be at least 2");
  if (pairs.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorKind::TooFewPairs,
                std::to_string(pairs.size()) + " pairs cannot fill " +
                    std::to_string(k) + " folds");
  }
  Rng rng(seed);
  FoldAssignment folds{k, std::vector<int>(pairs.size(), -1)};
  std::size_t cursor = 0;
  for (auto& [label, members] : indices_by_class(pairs)) {
    shuffle(members.begin(), members.end(), rng);
    for (auto idx : members) {
      folds.fold_of[idx] = static_cast<int>(cursor++ % k);
    }
  }
  return folds;
}

InteractionGraph build_training_graph(
    const InteractionGraph& like, std::span<const Interaction> train_pairs) {
  auto graph = like.empty_like();
  for (const auto& p : train_pairs) {
    // Sampled non-interacting pairs train the model but are not edges.
    if (graph.mode() == Mode::Retrospective && p.label == 0) continue;
    graph.add_interaction(p.a, p.b, p.label);
  }
  return graph;
}

void assert_no_leakage(const InteractionGraph& training_graph,
                       std::span<const Interaction> test_pairs) {
  for (const auto& p : test_pairs) {
    if (training_graph.lookup(p.a, p.b)) {
      throw Error(ErrorKind::LeakageDetected,
                  "test pair (" + std::to_string(p.a) + ", " +
                      std::to_string(p.b) + ") is in the training graph");
    }
  }
}

HoldoutResult holdout_evaluate(const InteractionGraph& graph,
                               const Hyperparameters& hp, int k,
                               std::uint64_t seed) {
  if (graph.mode() != Mode::Holdout) {
    throw Error(ErrorKind::InvalidConfig,
                "holdout evaluation needs a holdout-mode graph");
  }
  const auto edges = graph.edges();
  if (edges.empty()) throw Error(ErrorKind::EmptyDataset, "graph has no edges");
  const auto folds = stratified_kfold(edges, k, seed);

  HoldoutResult result;
  Eigen::MatrixXd pooled_probs(static_cast<Eigen::Index>(edges.size()),
                               graph.n_classes());
  std::vector<ClassId> pooled_truths;
  Eigen::Index row = 0;
  for (int f = 0; f < k; ++f) {
    const auto train_pairs = folds.select(edges, f, false);
    const auto test_pairs = folds.select(edges, f, true);
    const auto training_graph = build_training_graph(graph, train_pairs);
    assert_no_leakage(training_graph, test_pairs);

    const auto labeled = label_pairs(training_graph, train_pairs, hp.alpha);
    const auto model = train(labeled, hp, graph.n_drugs(), graph.n_classes());
    const Eigen::MatrixXd probs = score_pairs(model, test_pairs);
    const auto truths = truths_of(test_pairs);
    result.folds.push_back(multiclass_report(probs, truths));

    pooled_probs.middleRows(row, probs.rows()) = probs;
    row += probs.rows();
    pooled_truths.insert(pooled_truths.end(), truths.begin(), truths.end());
  }
  result.mean = average_reports(result.folds);
  result.pooled = multiclass_report(pooled_probs, pooled_truths);
  return result;
}

std::pair<InteractionGraph, InteractionGraph> reconcile_rosters(
    const InteractionGraph& t0, const InteractionGraph& t1) {
  DrugRoster common;
  std::vector<DrugIndex> from_t0(t0.n_drugs(), -1), from_t1(t1.n_drugs(), -1);
  for (const auto& drug : t0.roster()) {
    if (auto other = t1.roster().find(drug.external_id)) {
      const auto idx = common.add(drug.external_id, drug.name);
      from_t0[drug.index] = idx;
      from_t1[*other] = idx;
    }
  }
  if (common.size() == 0) {
    throw Error(ErrorKind::EmptyIntersection, "the snapshots share no drugs");
  }
  auto remap = [&](const InteractionGraph& g,
                   const std::vector<DrugIndex>& index) {
    InteractionGraph out(common, g.n_classes(), g.mode());
    for (const auto& e : g.edges()) {
      const auto a = index[e.a];
      const auto b = index[e.b];
      if (a >= 0 && b >= 0) out.add_interaction(a, b, e.label);
    }
    return out;
  };
  return {remap(t0, from_t0), remap(t1, from_t1)};
}

RetrospectiveSplit retrospective_split(const InteractionGraph& t0,
                                       const InteractionGraph& t1,
                                       double negative_ratio,
                                       std::uint64_t seed,
                                       std::size_t test_cap) {
  if (t0.mode() != Mode::Retrospective || t1.mode() != Mode::Retrospective) {
    throw Error(ErrorKind::InvalidConfig,
                "retrospective split needs retrospective-mode snapshots");
  }
  if (t0.n_classes() != t1.n_classes()) {
    throw Error(ErrorKind::DimensionMismatch,
                "snapshots disagree on the number of classes");
  }
  if (!(negative_ratio >= 0.0)) {
    throw Error(ErrorKind::InvalidConfig, "negative ratio must be >= 0");
  }
  auto [g0, g1] = reconcile_rosters(t0, t1);
  const auto n = static_cast<DrugIndex>(g0.n_drugs());

  std::vector<Interaction> unlabeled;
  for (DrugIndex a = 0; a < n; ++a) {
    for (DrugIndex b = a + 1; b < n; ++b) {
      if (!g0.lookup(a, b)) unlabeled.push_back({a, b, 0});
    }
  }

  RetrospectiveSplit split{std::move(g0), {}, {}, unlabeled.size()};
  split.train = split.graph_t0.edges();
  Rng rng(seed);

  // Partial Fisher-Yates: the first n_neg slots become the sampled negatives.
  const auto wanted = static_cast<std::size_t>(
      std::llround(negative_ratio * static_cast<double>(split.train.size())));
  const auto n_neg = std::min(wanted, unlabeled.size());
  for (std::size_t i = 0; i < n_neg; ++i) {
    const auto j = i + uniform_index(rng, unlabeled.size() - i);
    std::swap(unlabeled[i], unlabeled[j]);
  }
  auto by_pair = [](const Interaction& x, const Interaction& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  };
  std::sort(unlabeled.begin(), unlabeled.begin() + n_neg, by_pair);
  split.train.insert(split.train.end(), unlabeled.begin(),
                     unlabeled.begin() + n_neg);

  // Uniform subsample of the rest when it exceeds the cap.
  auto rest_begin = unlabeled.begin() + n_neg;
  auto rest_size = static_cast<std::size_t>(unlabeled.end() - rest_begin);
  if (rest_size > test_cap) {
    for (std::size_t i = 0; i < test_cap; ++i) {
      const auto j = i + uniform_index(rng, rest_size - i);
      std::swap(rest_begin[i], rest_begin[j]);
    }
    rest_size = test_cap;
  }
  std::sort(rest_begin, rest_begin + rest_size, by_pair);
  split.test.assign(rest_begin, rest_begin + rest_size);
  for (auto& p : split.test) p.label = g1.lookup(p.a, p.b).value_or(0);
  return split;
}

RetrospectiveResult retrospective_evaluate(
    const RetrospectiveSplit& split, const Hyperparameters& hp,
    const std::optional<std::unordered_set<DrugIndex>>& subset) {
  std::vector<Interaction> test;
  if (subset) {
    for (const auto& p : split.test) {
      if (subset->contains(p.a) && subset->contains(p.b)) test.push_back(p);
    }
    if (test.empty()) {
      throw Error(ErrorKind::EmptySubset,
                  "no test pair has both drugs in the subset");
    }
  } else {
    test = split.test;
  }
  if (test.empty()) throw Error(ErrorKind::EmptyDataset, "no test pairs");
  const auto& g = split.graph_t0;
  const auto labeled = label_pairs(g, split.train, hp.alpha);
  const auto model = train(labeled, hp, g.n_drugs(), g.n_classes());
  RetrospectiveResult out;
  out.n_test = test.size();
  out.report = multiclass_report(score_pairs(model, test), truths_of(test));
  return out;
}

GridSpec GridSpec::full_table(int embedding_dim) {
  GridSpec g;
  g.embedding_dim = {embedding_dim};
  for (int i = 0; i <= 9; ++i) g.dropout.push_back(i / 10.0);
  for (int e = 1; e <= 50; ++e) g.epochs.push_back(e);
  g.batch_size = {128, 256, 512, 1024};
  g.learning_rate = {0.1, 0.01, 0.001, 0.0001};
  for (int i = 0; i <= 10; ++i) g.alpha.push_back(i / 10.0);
  return g;
}

GridSpec GridSpec::single(const Hyperparameters& hp) {
  return {{hp.embedding_dim}, {hp.dropout},       {hp.epochs},
          {hp.batch_size},    {hp.learning_rate}, {hp.alpha}};
}

std::size_t GridSpec::size() const {
  return embedding_dim.size() * dropout.size() * epochs.size() *
         batch_size.size() * learning_rate.size() * alpha.size();
}

std::vector<Hyperparameters> GridSpec::enumerate(
    const Hyperparameters& base) const {
  std::vector<Hyperparameters> out;
  out.reserve(size());
  for (int d : embedding_dim)
    for (double drop : dropout)
      for (int ep : epochs)
        for (int bs : batch_size)
          for (double lr : learning_rate)
            for (double a : alpha) {
              Hyperparameters hp = base;
              hp.embedding_dim = d;
              hp.dropout = drop;
              hp.epochs = ep;
              hp.batch_size = bs;
              hp.learning_rate = lr;
              hp.alpha = a;
              out.push_back(hp);
            }
  return out;
}

std::pair<std::vector<Interaction>, std::vector<Interaction>>
stratified_holdout(std::span<const Interaction> pairs, double fraction,
                   std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::InvalidConfig,
                "validation fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<bool> held(pairs.size(), false);
  for (auto& [label, members] : indices_by_class(pairs)) {
    shuffle(members.begin(), members.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(members.size())));
    for (std::size_t i = 0; i < take; ++i) held[members[i]] = true;
  }
  std::pair<std::vector<Interaction>, std::vector<Interaction>> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    (held[i] ? out.second : out.first).push_back(pairs[i]);
  }
  if (out.first.empty() || out.second.empty()) {
    throw Error(ErrorKind::TooFewPairs,
                "too few pairs for a stratified validation split");
  }
  return out;
}

GridResult grid_search(const InteractionGraph& graph, const GridSpec& grid,
                       const Hyperparameters& base, double validation_fraction,
                       std::uint64_t seed, GridObjective objective) {
  if (grid.size() == 0) throw Error(ErrorKind::EmptyGrid, "empty grid");
  const auto edges = graph.edges();
  auto [train_pairs, validation] =
      stratified_holdout(edges, validation_fraction, seed);
  const auto training_graph = build_training_graph(graph, train_pairs);
  assert_no_leakage(training_graph, validation);
  const auto truths = truths_of(validation);

  GridResult result;
  double best = -1.0;
  for (const auto& hp : grid.enumerate(base)) {
    const auto labeled = label_pairs(training_graph, train_pairs, hp.alpha);
    const auto model = train(labeled, hp, graph.n_drugs(), graph.n_classes());
    const auto report =
        multiclass_report(score_pairs(model, validation), truths);
    const double score = objective == GridObjective::Accuracy
                             ? report.accuracy
                             : report.macro.auroc;
    result.points.push_back({hp, score});
    if (score > best) {
      best = score;
      result.best = hp;
    }
  }
  return result;
}

Eigen::MatrixXd baseline_neighborhood(const InteractionGraph& graph,
                                      std::span<const Interaction> test_pairs) {
  Eigen::MatrixXd probs(static_cast<Eigen::Index>(test_pairs.size()),
                        graph.n_classes());
  for (std::size_t r = 0; r < test_pairs.size(); ++r) {
    probs.row(static_cast<Eigen::Index>(r)) =
        neighborhood_distribution(graph, test_pairs[r].a, test_pairs[r].b)
            .transpose();
  }
  return probs;
}

Eigen::MatrixXd baseline_majority(std::span<const Interaction> train_pairs,
                                  std::size_t n_test, int n_classes) {
  if (train_pairs.empty()) {
    throw Error(ErrorKind::EmptyDataset, "no training pairs");
  }
  Eigen::RowVectorXd freq = Eigen::RowVectorXd::Zero(n_classes);
  for (const auto& p : train_pairs) freq[p.label] += 1.0;
  freq /= static_cast<double>(train_pairs.size());
  return freq.replicate(static_cast<Eigen::Index>(n_test), 1);
}

}  // namespace amfpmc
