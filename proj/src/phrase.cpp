#include "amfpmc/phrase.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "amfpmc/error.hpp"

namespace amfpmc {
namespace {

// Mirrors data/stoplist.txt and data/verbs.txt.
constexpr std::string_view kDefaultStoplist = R"(# Interaction phrase stop list, version 1.
the
a
an
of
can
be
may
might
when
it
is
are
was
were
been
being
to
its
combined with
or severity
@cut which
)";

constexpr std::string_view kDefaultVerbs = R"(# Direction verb normalisation, version 1.
increase increased
increases increased
increased increased
decrease decreased
decreases decreased
decreased decreased
)";

constexpr std::string_view kTrimChars = ".,;:!?()[]{}\"'";

std::string_view trim_ws(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> content_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim_ws(line);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool matches_at(const std::vector<std::string>& tokens, std::size_t pos,
                const std::vector<std::string>& seq) {
  if (seq.empty() || pos + seq.size() > tokens.size()) return false;
  return std::equal(seq.begin(), seq.end(), tokens.begin() + pos);
}

// Removes every occurrence of any sequence, longest sequences first.
std::vector<std::string> remove_sequences(
    const std::vector<std::string>& tokens,
    std::vector<std::vector<std::string>> sequences) {
  std::stable_sort(sequences.begin(), sequences.end(),
                   [](const auto& x, const auto& y) {
                     return x.size() > y.size();
                   });
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < tokens.size()) {
    const auto hit = std::find_if(
        sequences.begin(), sequences.end(),
        [&](const auto& seq) { return matches_at(tokens, pos, seq); });
    if (hit != sequences.end()) {
      pos += hit->size();
    } else {
      out.push_back(tokens[pos++]);
    }
  }
  return out;
}

}  // namespace

PhraseRules PhraseRules::parse(std::string_view stoplist_text,
                               std::string_view verbs_text) {
  PhraseRules rules;
  for (auto line : content_lines(stoplist_text)) {
    if (line.starts_with("@cut")) {
      auto token = trim_ws(line.substr(4));
      if (token.empty()) {
        throw Error(ErrorKind::FormatError, "'@cut' without a token");
      }
      rules.cut_tokens.emplace(tokenize(token).at(0));
      continue;
    }
    rules.stop_sequences.push_back(tokenize(line));
  }
  for (auto line : content_lines(verbs_text)) {
    auto tokens = tokenize(line);
    if (tokens.size() != 2) {
      throw Error(ErrorKind::FormatError,
                  "verb table line must be '<surface> <canonical>': '" +
                      std::string(line) + "'");
    }
    rules.verbs[tokens[0]] = tokens[1];
  }
  return rules;
}

const PhraseRules& PhraseRules::defaults() {
  static const PhraseRules rules = parse(kDefaultStoplist, kDefaultVerbs);
  return rules;
}

PhraseRules PhraseRules::load(const std::filesystem::path& stoplist,
                              const std::filesystem::path& verbs) {
  return parse(read_file(stoplist), read_file(verbs));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (in >> raw) {
    const auto first = raw.find_first_not_of(kTrimChars);
    if (first == std::string::npos) continue;
    const auto last = raw.find_last_not_of(kTrimChars);
    std::string token = raw.substr(first, last - first + 1);
    for (char& ch : token) {
      ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    tokens.push_back(std::move(token));
  }
  return tokens;
}

KeywordPhrase extract_phrase(const InteractionSentence& sentence,
                             const PhraseRules& rules) {
  auto tokens = tokenize(sentence.text);

  std::vector<std::vector<std::string>> drug_forms = {tokenize("drug a"),
                                                      tokenize("drug b")};
  for (const auto* surface : {&sentence.drug_a_surface,
                              &sentence.drug_b_surface}) {
    if (auto form = tokenize(*surface); !form.empty()) {
      drug_forms.push_back(std::move(form));
    }
  }
  tokens = remove_sequences(tokens, std::move(drug_forms));

  auto cut = std::find_if(tokens.begin(), tokens.end(), [&](const auto& t) {
    return rules.cut_tokens.contains(t);
  });
  tokens.erase(cut, tokens.end());

  tokens = remove_sequences(tokens, rules.stop_sequences);

  KeywordPhrase phrase;
  std::optional<std::string> verb;
  for (auto& token : tokens) {
    auto it = rules.verbs.find(token);
    if (!verb && it != rules.verbs.end()) {
      verb = it->second;
    } else {
      phrase.push_back(std::move(token));
    }
  }
  if (verb) phrase.insert(phrase.begin(), *verb);
  if (phrase.empty()) {
    throw Error(ErrorKind::EmptyAfterNormalization,
                "nothing left of '" + sentence.text + "'");
  }
  return phrase;
}

std::string render(const KeywordPhrase& phrase) {
  std::string out;
  for (const auto& token : phrase) {
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

bool same_phrase(const KeywordPhrase& x, const KeywordPhrase& y) {
  auto xs = x;
  auto ys = y;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  return xs == ys;
}

std::string render_template(const KeywordPhrase& phrase, bool a_first) {
  const auto& rules = PhraseRules::defaults();
  std::string verb;
  KeywordPhrase content = phrase;
  if (!content.empty() && rules.verbs.contains(content.front())) {
    verb = rules.verbs.at(content.front());
    content.erase(content.begin());
  }
  const char* first = a_first ? "Drug a" : "Drug b";
  const char* second = a_first ? "Drug b" : "Drug a";
  std::string text = "The " + render(content) + " of " + second;
  if (!verb.empty()) text += " can be " + verb;
  text += " when combined with " + std::string(first);
  return text;
}

std::string ClassVocabulary::lookup_key(const KeywordPhrase& phrase) {
  auto sorted = phrase;
  std::sort(sorted.begin(), sorted.end());
  return render(sorted);
}

void ClassVocabulary::index_labels() {
  by_key_.clear();
  for (ClassId c = 0; c < size(); ++c) {
    if (mode_ == Mode::Retrospective && (c == 0 || c == other_)) continue;
    by_key_.emplace(lookup_key(tokenize(labels_[c])), c);
  }
}

ClassVocabulary ClassVocabulary::build(std::span<const KeywordPhrase> phrases,
                                       Mode mode, Grouping grouping) {
  if (phrases.empty()) {
    throw Error(ErrorKind::EmptyInput, "no phrases to build a vocabulary");
  }
  // Merge order-insensitive duplicates, keeping the first rendering seen.
  std::map<std::string, std::pair<std::string, std::size_t>> tally;
  for (const auto& phrase : phrases) {
    auto [it, fresh] = tally.try_emplace(lookup_key(phrase), render(phrase), 0);
    it->second.second += 1;
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  ranked.reserve(tally.size());
  for (auto& [key, entry] : tally) ranked.push_back(entry);
  std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });

  std::vector<std::string> labels;
  std::vector<std::size_t> counts;
  if (mode == Mode::Retrospective) {
    labels.emplace_back(kNoInteraction);
    counts.push_back(0);
    const auto keep = std::min(grouping.value, ranked.size());
    std::size_t other_count = 0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      if (r < keep) {
        labels.push_back(ranked[r].first);
        counts.push_back(ranked[r].second);
      } else {
        other_count += ranked[r].second;
      }
    }
    labels.emplace_back(kOther);
    counts.push_back(other_count);
  } else {
    for (const auto& [label, n] : ranked) {
      const bool keep = grouping.kind == Grouping::Kind::MinCount
                            ? n >= grouping.value
                            : labels.size() < grouping.value;
      if (keep) {
        labels.push_back(label);
        counts.push_back(n);
      }
    }
    if (labels.empty()) {
      throw Error(ErrorKind::EmptyInput, "no phrase meets the grouping rule");
    }
  }
  return from_entries(mode, std::move(labels), std::move(counts));
}

ClassVocabulary ClassVocabulary::from_entries(Mode mode,
                                              std::vector<std::string> labels,
                                              std::vector<std::size_t> counts) {
  if (labels.size() != counts.size() || labels.empty()) {
    throw Error(ErrorKind::ShapeMismatch, "vocabulary labels/counts mismatch");
  }
  ClassVocabulary vocab;
  vocab.mode_ = mode;
  vocab.labels_ = std::move(labels);
  vocab.counts_ = std::move(counts);
  if (mode == Mode::Retrospective) {
    if (vocab.labels_.size() < 2) {
      throw Error(ErrorKind::InvalidDimensions,
                  "retrospective vocabulary needs 'no interaction' and 'other'");
    }
    vocab.other_ = vocab.size() - 1;
  }
  vocab.index_labels();
  return vocab;
}

ClassId ClassVocabulary::encode(const KeywordPhrase& phrase) const {
  auto it = by_key_.find(lookup_key(phrase));
  if (it != by_key_.end()) return it->second;
  if (other_) return *other_;
  throw Error(ErrorKind::UnknownPhrase,
              "phrase '" + render(phrase) + "' is not in the vocabulary");
}

const std::string& ClassVocabulary::decode(ClassId label) const {
  if (label < 0 || label >= size()) {
    throw Error(ErrorKind::InvalidClass,
                "class " + std::to_string(label) + " outside vocabulary");
  }
  return labels_[label];
}

}  // namespace amfpmc
