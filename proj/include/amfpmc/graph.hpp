#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "amfpmc/error.hpp"
#include "amfpmc/types.hpp"

namespace amfpmc {

struct Drug {
  DrugIndex index = 0;
  std::string external_id;
  std::optional<std::string> name;
};

/// Dense 0-based drug indices with an external-id translation table.
class DrugRoster {
 public:
  DrugRoster() = default;

  /// Roster of n drugs with generated ids "D0".."D{n-1}".
  static DrugRoster numbered(std::size_t n);

  /// Appends a drug; throws InvalidConfig if the id is already present.
  DrugIndex add(std::string external_id,
                std::optional<std::string> name = std::nullopt);
  /// Returns the existing index for the id or appends it.
  DrugIndex intern(std::string_view external_id);

  std::optional<DrugIndex> find(std::string_view external_id) const;
  /// Throws UnknownDrug.
  DrugIndex index_of(std::string_view external_id) const;

  const Drug& operator[](DrugIndex index) const { return drugs_.at(index); }
  std::size_t size() const { return drugs_.size(); }
  bool contains(DrugIndex index) const {
    return index >= 0 && static_cast<std::size_t>(index) < drugs_.size();
  }

  auto begin() const { return drugs_.begin(); }
  auto end() const { return drugs_.end(); }

 private:
  std::vector<Drug> drugs_;
  std::unordered_map<std::string, DrugIndex> by_id_;
};

struct Neighbor {
  DrugIndex drug;
  ClassId label;
  bool operator==(const Neighbor&) const = default;
};

/// An undirected labelled edge; canonical form has a < b.
struct Interaction {
  DrugIndex a = 0;
  DrugIndex b = 0;
  ClassId label = 0;
  bool operator==(const Interaction&) const = default;
};

/// Symmetric typed adjacency over a fixed drug roster. Each unordered pair is
/// stored once under its canonical (min, max) key; lookups are
/// order-insensitive. Per-drug class counts are maintained incrementally so
/// neighbourhood histograms cost O(K).
class InteractionGraph {
 public:
  InteractionGraph(DrugRoster roster, int n_classes, Mode mode);
  InteractionGraph(std::size_t n_drugs, int n_classes, Mode mode);

  /// Idempotent for an identical duplicate. Throws SelfLoop, UnknownDrug,
  /// InvalidClass, or ConflictingLabel.
  void add_interaction(DrugIndex a, DrugIndex b, ClassId label);

  std::optional<ClassId> lookup(DrugIndex a, DrugIndex b) const;

  /// Incident edges of a, ascending by partner index.
  std::span<const Neighbor> neighbors(DrugIndex a) const;

  /// count[c] = typed edges of class c incident to a or b, not counting the
  /// (a, b) edge itself.
  Eigen::VectorXi pair_class_histogram(DrugIndex a, DrugIndex b) const;

  /// All edges in canonical form, sorted by (a, b).
  std::vector<Interaction> edges() const;

  /// Same roster, class count and mode; no edges.
  InteractionGraph empty_like() const;

  bool is_valid_class(ClassId label) const;

  std::size_t n_drugs() const { return roster_.size(); }
  int n_classes() const { return n_classes_; }
  Mode mode() const { return mode_; }
  std::size_t edge_count() const { return edges_.size(); }
  const DrugRoster& roster() const { return roster_; }

  /// Row d holds the per-class edge counts incident to drug d.
  const Eigen::MatrixXi& node_class_counts() const { return node_counts_; }

 private:
  static std::uint64_t key(DrugIndex a, DrugIndex b);
  void check_drug(DrugIndex d) const;

  DrugRoster roster_;
  int n_classes_;
  Mode mode_;
  std::unordered_map<std::uint64_t, ClassId> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  Eigen::MatrixXi node_counts_;
};

}  // namespace amfpmc
