#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "amfpmc/graph.hpp"
#include "amfpmc/metrics.hpp"
#include "amfpmc/model.hpp"
#include "amfpmc/phrase.hpp"

namespace amfpmc {

enum class PayloadKind { Sentences, Indices };

/// One TSV line: "<id_a>\t<id_b>\t<payload>". Sentence files may carry two
/// extra columns with the drugs' surface names.
struct InteractionRecord {
  std::string drug_a;
  std::string drug_b;
  std::variant<std::string, ClassId> payload;
  std::optional<std::string> name_a;
  std::optional<std::string> name_b;
  std::size_t line_no = 0;
};

/// Strict: '#' comments and blank lines are skipped, anything else malformed
/// throws ParseError naming the line.
std::vector<InteractionRecord> parse_interactions(std::istream& in,
                                                  PayloadKind kind);
std::vector<InteractionRecord> parse_interactions_file(
    const std::filesystem::path& path, PayloadKind kind);

/// Builds an index-mode graph, interning drugs in order of first appearance.
/// n_classes == 0 infers max label + 1 (at least 2 in retrospective mode).
InteractionGraph build_graph(const std::vector<InteractionRecord>& records,
                             Mode mode, int n_classes = 0);

void write_interactions(const InteractionGraph& graph,
                        const std::filesystem::path& path);

/// One external id per line; '#' comments allowed.
std::vector<std::string> read_id_list(const std::filesystem::path& path);

enum class ReportFormat { Text, Structured };

std::string format_report_text(const MultiClassReport& report);
std::string format_report_structured(const MultiClassReport& report);
MultiClassReport parse_report_structured(const std::string& text);

void write_report(const MultiClassReport& report,
                  const std::filesystem::path& path, ReportFormat format);
MultiClassReport read_report(const std::filesystem::path& path);

/// Parameters plus the drug ids they were trained on, when known.
struct ModelFile {
  Model params;
  std::vector<std::string> drug_ids;
};

/// "AMFPMC1 n K d" header, then sections E, b, W, c, u at 17 significant
/// digits, then an optional "ids" section.
void write_model(std::ostream& out, const Model& params,
                 const std::vector<std::string>& drug_ids = {});
void write_model(const std::filesystem::path& path, const Model& params,
                 const std::vector<std::string>& drug_ids = {});
ModelFile read_model(std::istream& in);
ModelFile read_model(const std::filesystem::path& path);

/// drug_id followed by d columns.
void write_embeddings_csv(const EmbeddingTable<double>& table,
                          const std::filesystem::path& path);
EmbeddingTable<double> read_embeddings_csv(const std::filesystem::path& path);

/// "index\tcount\tlabel" lines with a "# mode=<mode>" header.
void write_vocabulary(const ClassVocabulary& vocab,
                      const std::filesystem::path& path);
ClassVocabulary read_vocabulary(const std::filesystem::path& path);

}  // namespace amfpmc
