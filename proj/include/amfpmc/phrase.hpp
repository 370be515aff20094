#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "amfpmc/types.hpp"

namespace amfpmc {

struct InteractionSentence {
  std::string text;
  std::string drug_a_surface;
  std::string drug_b_surface;
};

/// Lowercase content tokens, direction verb first when one is present.
using KeywordPhrase = std::vector<std::string>;

/// Stop list, verb normalisation table and clause-cut tokens.
///
/// Stop-list file: one entry per line; an entry with spaces is removed only
/// as a whole token sequence ("combined with"). A line "@cut <token>" ends
/// the phrase at that token. Verb file: "<surface> <canonical>" per line.
/// Both files are UTF-8 and accept "#" comments.
struct PhraseRules {
  std::vector<std::vector<std::string>> stop_sequences;
  std::unordered_set<std::string> cut_tokens;
  std::unordered_map<std::string, std::string> verbs;

  static const PhraseRules& defaults();
  static PhraseRules load(const std::filesystem::path& stoplist,
                          const std::filesystem::path& verbs);
  static PhraseRules parse(std::string_view stoplist_text,
                           std::string_view verbs_text);
};

/// Lowercases and splits on whitespace, trimming surrounding punctuation.
std::vector<std::string> tokenize(std::string_view text);

/// Throws EmptyAfterNormalization if nothing but stop words and drug names
/// remain.
KeywordPhrase extract_phrase(const InteractionSentence& sentence,
                             const PhraseRules& rules = PhraseRules::defaults());

/// Space-joined tokens, e.g. "decreased metabolism".
std::string render(const KeywordPhrase& phrase);

/// Order-insensitive phrase equality.
bool same_phrase(const KeywordPhrase& x, const KeywordPhrase& y);

/// A DrugBank-style sentence that extracts back to `phrase`.
std::string render_template(const KeywordPhrase& phrase, bool a_first = true);

struct Grouping {
  enum class Kind { TopN, MinCount };
  Kind kind = Kind::TopN;
  std::size_t value = 35;

  static Grouping top_n(std::size_t n) { return {Kind::TopN, n}; }
  static Grouping min_count(std::size_t n) { return {Kind::MinCount, n}; }
};

/// Bidirectional phrase <-> class index map.
///
/// Retrospective: 0 = "no interaction", the top_n phrases take 1..top_n and
/// everything else is folded into a trailing "other" class. Holdout: every
/// phrase meeting min_count takes 0..K-1 and the rest are dropped.
/// Ranking is by descending count, ties broken lexicographically.
class ClassVocabulary {
 public:
  static constexpr std::string_view kNoInteraction = "no interaction";
  static constexpr std::string_view kOther = "other";

  static ClassVocabulary build(std::span<const KeywordPhrase> phrases,
                               Mode mode, Grouping grouping);

  /// Rebuilds a vocabulary from explicit entries (index order).
  static ClassVocabulary from_entries(Mode mode,
                                      std::vector<std::string> labels,
                                      std::vector<std::size_t> counts);

  /// Unseen phrases map to the "other" class in retrospective mode and throw
  /// UnknownPhrase in holdout mode.
  ClassId encode(const KeywordPhrase& phrase) const;
  const std::string& decode(ClassId label) const;

  int size() const { return static_cast<int>(labels_.size()); }
  Mode mode() const { return mode_; }
  std::optional<ClassId> other_class() const { return other_; }
  std::size_t count(ClassId label) const { return counts_.at(label); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::size_t>& counts() const { return counts_; }

 private:
  static std::string lookup_key(const KeywordPhrase& phrase);
  void index_labels();

  Mode mode_ = Mode::Holdout;
  std::vector<std::string> labels_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, ClassId> by_key_;
  std::optional<ClassId> other_;
};

}  // namespace amfpmc
