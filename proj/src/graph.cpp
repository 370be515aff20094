#include "amfpmc/graph.hpp"

#include <algorithm>

namespace amfpmc {

std::string_view to_string(Mode mode) {
  return mode == Mode::Retrospective ? "retrospective" : "holdout";
}

Mode parse_mode(std::string_view text) {
  if (text == "retrospective") return Mode::Retrospective;
  if (text == "holdout") return Mode::Holdout;
  throw Error(ErrorKind::InvalidConfig,
              "unknown mode '" + std::string(text) + "'");
}

DrugRoster DrugRoster::numbered(std::size_t n) {
  DrugRoster roster;
  for (std::size_t i = 0; i < n; ++i) roster.add("D" + std::to_string(i));
  return roster;
}

DrugIndex DrugRoster::add(std::string external_id,
                          std::optional<std::string> name) {
  if (by_id_.contains(external_id)) {
    throw Error(ErrorKind::InvalidConfig,
                "duplicate drug id '" + external_id + "'");
  }
  const auto index = static_cast<DrugIndex>(drugs_.size());
  by_id_.emplace(external_id, index);
  drugs_.push_back({index, std::move(external_id), std::move(name)});
  return index;
}

DrugIndex DrugRoster::intern(std::string_view external_id) {
  if (auto found = find(external_id)) return *found;
  return add(std::string(external_id));
}

std::optional<DrugIndex> DrugRoster::find(std::string_view external_id) const {
  auto it = by_id_.find(std::string(external_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

DrugIndex DrugRoster::index_of(std::string_view external_id) const {
  if (auto found = find(external_id)) return *found;
  throw Error(ErrorKind::UnknownDrug,
              "drug '" + std::string(external_id) + "' is not in the roster");
}

InteractionGraph::InteractionGraph(DrugRoster roster, int n_classes, Mode mode)
    : roster_(std::move(roster)),
      n_classes_(n_classes),
      mode_(mode),
      adjacency_(roster_.size()),
      node_counts_(Eigen::MatrixXi::Zero(
          static_cast<Eigen::Index>(roster_.size()), std::max(n_classes, 0))) {
  const int min_classes = mode == Mode::Retrospective ? 2 : 1;
  if (n_classes < min_classes) {
    throw Error(ErrorKind::InvalidDimensions,
                "graph needs at least " + std::to_string(min_classes) +
                    " classes in " + std::string(to_string(mode)) + " mode");
  }
}

InteractionGraph::InteractionGraph(std::size_t n_drugs, int n_classes,
                                   Mode mode)
    : InteractionGraph(DrugRoster::numbered(n_drugs), n_classes, mode) {}

std::uint64_t InteractionGraph::key(DrugIndex a, DrugIndex b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (lo << 32) | hi;
}

void InteractionGraph::check_drug(DrugIndex d) const {
  if (!roster_.contains(d)) {
    throw Error(ErrorKind::UnknownDrug,
                "drug index " + std::to_string(d) + " outside roster of " +
                    std::to_string(roster_.size()));
  }
}

bool InteractionGraph::is_valid_class(ClassId label) const {
  const ClassId lowest = mode_ == Mode::Retrospective ? 1 : 0;
  return label >= lowest && label < n_classes_;
}

void InteractionGraph::add_interaction(DrugIndex a, DrugIndex b,
                                       ClassId label) {
  check_drug(a);
  check_drug(b);
  if (a == b) {
    throw Error(ErrorKind::SelfLoop,
                "self-loop on drug " + roster_[a].external_id);
  }
  if (!is_valid_class(label)) {
    throw Error(ErrorKind::InvalidClass,
                "class " + std::to_string(label) + " is not a valid " +
                    std::string(to_string(mode_)) + " edge class (K=" +
                    std::to_string(n_classes_) + ")");
  }
  auto [it, inserted] = edges_.try_emplace(key(a, b), label);
  if (!inserted) {
    if (it->second == label) return;
    throw Error(ErrorKind::ConflictingLabel,
                "pair (" + roster_[a].external_id + ", " +
                    roster_[b].external_id + ") already has class " +
                    std::to_string(it->second) + ", got " +
                    std::to_string(label));
  }
  auto insert_sorted = [](std::vector<Neighbor>& list, Neighbor n) {
    auto pos = std::lower_bound(
        list.begin(), list.end(), n,
        [](const Neighbor& x, const Neighbor& y) { return x.drug < y.drug; });
    list.insert(pos, n);
  };
  insert_sorted(adjacency_[a], {b, label});
  insert_sorted(adjacency_[b], {a, label});
  node_counts_(a, label) += 1;
  node_counts_(b, label) += 1;
}

std::optional<ClassId> InteractionGraph::lookup(DrugIndex a,
                                                DrugIndex b) const {
  check_drug(a);
  check_drug(b);
  auto it = edges_.find(key(a, b));
  if (it == edges_.end()) return std::nullopt;
  return it->second;
}

std::span<const Neighbor> InteractionGraph::neighbors(DrugIndex a) const {
  check_drug(a);
  return adjacency_[a];
}

Eigen::VectorXi InteractionGraph::pair_class_histogram(DrugIndex a,
                                                       DrugIndex b) const {
  check_drug(a);
  check_drug(b);
  if (a == b) {
    throw Error(ErrorKind::SelfLoop, "histogram of a drug with itself");
  }
  Eigen::VectorXi counts =
      (node_counts_.row(a) + node_counts_.row(b)).transpose();
  // The (a, b) edge sits in both endpoint rows.
  if (auto own = lookup(a, b)) counts[*own] -= 2;
  return counts;
}

std::vector<Interaction> InteractionGraph::edges() const {
  std::vector<Interaction> out;
  out.reserve(edges_.size());
  for (DrugIndex a = 0; a < static_cast<DrugIndex>(adjacency_.size()); ++a) {
    for (const auto& n : adjacency_[a]) {
      if (n.drug > a) out.push_back({a, n.drug, n.label});
    }
  }
  return out;
}

InteractionGraph InteractionGraph::empty_like() const {
  return InteractionGraph(roster_, n_classes_, mode_);
}

}  // namespace amfpmc
