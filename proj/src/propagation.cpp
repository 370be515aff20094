#include "amfpmc/propagation.hpp"

#include <string>

namespace amfpmc {

PropagationConfig PropagationConfig::with_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig,
                "propagation factor must lie in [0, 1], got " +
                    std::to_string(alpha));
  }
  return PropagationConfig{alpha};
}

SoftTarget neighborhood_distribution(const InteractionGraph& graph, DrugIndex a,
                                     DrugIndex b) {
  const Eigen::VectorXi counts = graph.pair_class_histogram(a, b);
  const int total = counts.sum();
  const int k = graph.n_classes();
  if (total == 0) {
    if (graph.mode() == Mode::Retrospective) {
      return SoftTarget::Unit(k, 0);
    }
    return SoftTarget::Constant(k, 1.0 / k);
  }
  return counts.cast<double>() / static_cast<double>(total);
}

SoftTarget propagate_target(const InteractionGraph& graph, DrugIndex a,
                            DrugIndex b, ClassId label,
                            const PropagationConfig& cfg) {
  // Class 0 is a legal training label in retrospective mode (sampled
  // non-interacting pairs) even though it is never a stored edge.
  if (label < 0 || label >= graph.n_classes()) {
    throw Error(ErrorKind::InvalidClass,
                "label " + std::to_string(label) + " outside 0.." +
                    std::to_string(graph.n_classes() - 1));
  }
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "propagation factor outside [0, 1]");
  }
  SoftTarget target = cfg.alpha * neighborhood_distribution(graph, a, b);
  target[label] += 1.0 - cfg.alpha;
  return target;
}

}  // namespace amfpmc
