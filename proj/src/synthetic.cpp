#include "amfpmc/synthetic.hpp"

#include <cmath>
#include <numeric>

#include "amfpmc/error.hpp"

namespace amfpmc {

int SyntheticConfig::resolved_classes() const {
  const int needed = n_blocks * (n_blocks + 1) / 2 +
                     (mode == Mode::Retrospective ? 1 : 0);
  return n_classes == 0 ? needed : n_classes;
}

void SyntheticConfig::validate() const {
  auto fail = [](const std::string& why) {
    throw Error(ErrorKind::InvalidConfig, why);
  };
  if (n_blocks < 1) fail("need at least one block");
  if (n_drugs < 2 || n_drugs < static_cast<std::size_t>(n_blocks)) {
    fail("need at least two drugs and one drug per block");
  }
  const int needed = n_blocks * (n_blocks + 1) / 2 +
                     (mode == Mode::Retrospective ? 1 : 0);
  if (resolved_classes() < needed) {
    fail("K=" + std::to_string(n_classes) + " cannot give each of the " +
         std::to_string(n_blocks * (n_blocks + 1) / 2) +
         " block pairs its own class");
  }
  if (resolved_classes() < 2) fail("need at least two classes");
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(edge_probability)) fail("edge probability outside [0, 1]");
  if (block_probability.size() != 0) {
    if (block_probability.rows() != n_blocks ||
        block_probability.cols() != n_blocks) {
      fail("block probability matrix must be B x B");
    }
    if (!block_probability.isApprox(block_probability.transpose()) ||
        (block_probability.array() < 0.0).any() ||
        (block_probability.array() > 1.0).any()) {
      fail("block probabilities must be symmetric and within [0, 1]");
    }
  }
  if (!block_sizes.empty()) {
    if (block_sizes.size() != static_cast<std::size_t>(n_blocks) ||
        std::accumulate(block_sizes.begin(), block_sizes.end(),
                        std::size_t{0}) != n_drugs) {
      fail("block sizes must list B sizes summing to n_drugs");
    }
  }
  if (!(label_noise >= 0.0 && label_noise < 1.0)) {
    fail("label noise outside [0, 1)");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    fail("holdout fraction outside [0, 1)");
  }
}

SyntheticGraph generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const int k = cfg.resolved_classes();
  const int blocks = cfg.n_blocks;
  const ClassId first_class = cfg.mode == Mode::Retrospective ? 1 : 0;
  const int n_edge_classes = k - first_class;
  Rng rng(cfg.seed);

  std::vector<int> block_of(cfg.n_drugs);
  if (cfg.block_sizes.empty()) {
    for (std::size_t i = 0; i < cfg.n_drugs; ++i) {
      block_of[i] = static_cast<int>(i * blocks / cfg.n_drugs);
    }
  } else {
    std::size_t i = 0;
    for (int g = 0; g < blocks; ++g) {
      for (std::size_t s = 0; s < cfg.block_sizes[g]; ++s) block_of[i++] = g;
    }
  }

  Eigen::MatrixXi block_class(blocks, blocks);
  ClassId next = first_class;
  for (int g = 0; g < blocks; ++g) {
    for (int h = g; h < blocks; ++h) {
      block_class(g, h) = block_class(h, g) = next++;
    }
  }

  auto probability = [&](int g, int h) {
    return cfg.block_probability.size() != 0 ? cfg.block_probability(g, h)
                                             : cfg.edge_probability;
  };

  std::vector<Interaction> edges;
  std::size_t noisy = 0;
  const auto n = static_cast<DrugIndex>(cfg.n_drugs);
  for (DrugIndex a = 0; a < n; ++a) {
    for (DrugIndex b = a + 1; b < n; ++b) {
      const int g = block_of[a];
      const int h = block_of[b];
      if (uniform01(rng) >= probability(g, h)) continue;
      ClassId label = block_class(g, h);
      if (cfg.label_noise > 0.0 && n_edge_classes > 1 &&
          uniform01(rng) < cfg.label_noise) {
        // Uniform over the other edge classes.
        auto offset = static_cast<ClassId>(
            uniform_index(rng, static_cast<std::uint64_t>(n_edge_classes - 1)));
        ClassId wrong = first_class + offset;
        if (wrong >= label) ++wrong;
        label = wrong;
        ++noisy;
      }
      edges.push_back({a, b, label});
    }
  }

  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order.begin(), order.end(), rng);
  const auto n_held = static_cast<std::size_t>(std::floor(
      cfg.holdout_fraction * static_cast<double>(edges.size())));
  std::vector<bool> held(edges.size(), false);
  for (std::size_t i = 0; i < n_held; ++i) held[order[i]] = true;

  SyntheticGraph out{InteractionGraph(cfg.n_drugs, k, cfg.mode),
                     InteractionGraph(cfg.n_drugs, k, cfg.mode),
                     std::move(block_of), std::move(block_class), {}, noisy};
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    out.t1.add_interaction(e.a, e.b, e.label);
    if (held[i]) {
      out.held_out.push_back(e);
    } else {
      out.t0.add_interaction(e.a, e.b, e.label);
    }
  }
  return out;
}

}  // namespace amfpmc
