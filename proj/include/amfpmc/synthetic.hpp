#pragma once

#include <cstdint>
#include <vector>

#include "amfpmc/graph.hpp"

namespace amfpmc {

/// Typed stochastic block model. Each unordered block pair (g, h) owns one
/// class; edges are drawn independently, a `label_noise` fraction get a
/// uniformly drawn wrong class, and `holdout_fraction` of the edges are
/// withheld from t0 but present in t1.
struct SyntheticConfig {
  std::size_t n_drugs = 200;
  int n_blocks = 4;
  /// 0 picks the minimum: B(B+1)/2 classes, plus one in retrospective mode.
  int n_classes = 0;
  double edge_probability = 0.3;
  /// Optional B x B symmetric override of edge_probability.
  Eigen::MatrixXd block_probability;
  /// Optional explicit block sizes summing to n_drugs; equal split otherwise.
  std::vector<std::size_t> block_sizes;
  double label_noise = 0.05;
  double holdout_fraction = 0.2;
  Mode mode = Mode::Holdout;
  std::uint64_t seed = 7;

  int resolved_classes() const;
  /// Throws InvalidConfig.
  void validate() const;
};

struct SyntheticGraph {
  InteractionGraph t0;
  InteractionGraph t1;
  std::vector<int> block_of;     // per drug
  Eigen::MatrixXi block_class;   // B x B, symmetric
  std::vector<Interaction> held_out;  // t1 minus t0, with their labels
  std::size_t noisy_edges = 0;

  /// The class the block structure assigns to a pair.
  ClassId planted_class(DrugIndex a, DrugIndex b) const {
    return block_class(block_of[a], block_of[b]);
  }
};

SyntheticGraph generate_synthetic(const SyntheticConfig& cfg);

}  // namespace amfpmc
