#pragma once

#include "amfpmc/graph.hpp"
#include "amfpmc/types.hpp"

namespace amfpmc {

struct PropagationConfig {
  double alpha = 0.0;

  /// Throws InvalidConfig unless 0 <= alpha <= 1.
  static PropagationConfig with_alpha(double alpha);
};

/// Normalised incident-edge class histogram of the pair. With no incident
/// edges at all: one-hot on class 0 (retrospective) or uniform (holdout).
SoftTarget neighborhood_distribution(const InteractionGraph& graph, DrugIndex a,
                                     DrugIndex b);

/// (1 - alpha) * onehot(label) + alpha * neighborhood_distribution(a, b).
SoftTarget propagate_target(const InteractionGraph& graph, DrugIndex a,
                            DrugIndex b, ClassId label,
                            const PropagationConfig& cfg);

}  // namespace amfpmc
