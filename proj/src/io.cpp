#include "amfpmc/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace amfpmc {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::string strip(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

bool skippable(const std::string& line) {
  const auto s = strip(line);
  return s.empty() || s.front() == '#';
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path.string());
  return out;
}

std::string exact(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

template <typename Int>
std::optional<Int> parse_int(const std::string& s) {
  Int value{};
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::vector<InteractionRecord> parse_interactions(std::istream& in,
                                                  PayloadKind kind) {
  std::vector<InteractionRecord> records;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::ParseError,
                "line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (skippable(line)) continue;
    auto fields = split(line, '\t');
    const bool sentence = kind == PayloadKind::Sentences;
    if (fields.size() != 3 && !(sentence && fields.size() == 5)) {
      fail("expected " +
           std::string(sentence ? "3 or 5" : "3") +
           " tab-separated fields, got " + std::to_string(fields.size()));
    }
    for (auto& f : fields) f = strip(f);
    InteractionRecord rec;
    rec.drug_a = fields[0];
    rec.drug_b = fields[1];
    rec.line_no = line_no;
    if (rec.drug_a.empty() || rec.drug_b.empty()) fail("empty drug id");
    if (rec.drug_a == rec.drug_b) fail("self-loop on " + rec.drug_a);
    if (fields[2].empty()) fail("empty payload");
    if (sentence) {
      rec.payload = fields[2];
      if (fields.size() == 5) {
        rec.name_a = fields[3];
        rec.name_b = fields[4];
      }
    } else {
      auto label = parse_int<ClassId>(fields[2]);
      if (!label || *label < 0) fail("class index '" + fields[2] + "'");
      rec.payload = *label;
    }
    records.push_back(std::move(rec));
  }
  if (in.bad()) throw Error(ErrorKind::IoError, "read failure");
  return records;
}

std::vector<InteractionRecord> parse_interactions_file(
    const std::filesystem::path& path, PayloadKind kind) {
  auto in = open_in(path);
  try {
    return parse_interactions(in, kind);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

InteractionGraph build_graph(const std::vector<InteractionRecord>& records,
                             Mode mode, int n_classes) {
  DrugRoster roster;
  ClassId max_label = 0;
  for (const auto& r : records) {
    const auto* label = std::get_if<ClassId>(&r.payload);
    if (label == nullptr) {
      throw Error(ErrorKind::InvalidConfig,
                  "line " + std::to_string(r.line_no) +
                      ": sentence payload; run extraction first");
    }
    max_label = std::max(max_label, *label);
    roster.intern(r.drug_a);
    roster.intern(r.drug_b);
  }
  if (n_classes == 0) {
    n_classes = std::max<int>(max_label + 1,
                              mode == Mode::Retrospective ? 2 : 1);
  }
  InteractionGraph graph(std::move(roster), n_classes, mode);
  for (const auto& r : records) {
    try {
      graph.add_interaction(graph.roster().index_of(r.drug_a),
                            graph.roster().index_of(r.drug_b),
                            std::get<ClassId>(r.payload));
    } catch (const Error& e) {
      throw Error(e.kind(),
                  "line " + std::to_string(r.line_no) + ": " + e.detail());
    }
  }
  return graph;
}

void write_interactions(const InteractionGraph& graph,
                        const std::filesystem::path& path) {
  auto out = open_out(path);
  const auto& roster = graph.roster();
  for (const auto& e : graph.edges()) {
    out << roster[e.a].external_id << '\t' << roster[e.b].external_id << '\t'
        << e.label << '\n';
  }
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    if (skippable(line)) continue;
    ids.push_back(strip(line));
  }
  return ids;
}

std::string format_report_text(const MultiClassReport& report) {
  std::ostringstream out;
  auto row = [&](const char* key, const std::string& value) {
    out << std::left << std::setw(18) << key << value << '\n';
  };
  row("samples", std::to_string(report.n_samples));
  row("accuracy", fixed4(report.accuracy));
  for (const auto* avg : {"micro", "macro"}) {
    const auto& m = std::string(avg) == "micro" ? report.micro : report.macro;
    const std::string p(avg);
    row((p + "_aupr").c_str(), fixed4(m.aupr));
    row((p + "_auroc").c_str(), fixed4(m.auroc));
    row((p + "_f1").c_str(), fixed4(m.f1));
    row((p + "_precision").c_str(), fixed4(m.precision));
    row((p + "_recall").c_str(), fixed4(m.recall));
  }
  out << "\nper_class (by support)\n";
  out << std::left << std::setw(8) << "class" << std::setw(10) << "support"
      << std::setw(9) << "auroc" << std::setw(9) << "aupr" << std::setw(11)
      << "precision" << std::setw(9) << "recall" << "f1\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? fixed4(*v) : std::string("-");
  };
  for (const auto& c : report.per_class) {
    out << std::left << std::setw(8) << c.label << std::setw(10) << c.support
        << std::setw(9) << opt(c.auroc) << std::setw(9) << opt(c.aupr)
        << std::setw(11) << fixed4(c.precision) << std::setw(9)
        << fixed4(c.recall) << fixed4(c.f1) << '\n';
  }
  return out.str();
}

std::string format_report_structured(const MultiClassReport& report) {
  using nlohmann::json;
  json doc;
  doc["n_samples"] = report.n_samples;
  doc["accuracy"] = report.accuracy;
  for (const auto* avg : {"micro", "macro"}) {
    const auto& m = std::string(avg) == "micro" ? report.micro : report.macro;
    const std::string p(avg);
    doc[p + "_precision"] = m.precision;
    doc[p + "_recall"] = m.recall;
    doc[p + "_f1"] = m.f1;
    doc[p + "_auroc"] = m.auroc;
    doc[p + "_aupr"] = m.aupr;
  }
  json rows = json::array();
  for (const auto& c : report.per_class) {
    json r;
    r["class"] = c.label;
    r["support"] = c.support;
    r["precision"] = c.precision;
    r["recall"] = c.recall;
    r["f1"] = c.f1;
    r["auroc"] = c.auroc ? json(*c.auroc) : json(nullptr);
    r["aupr"] = c.aupr ? json(*c.aupr) : json(nullptr);
    rows.push_back(r);
  }
  doc["per_class"] = rows;
  return doc.dump(2) + "\n";
}

MultiClassReport parse_report_structured(const std::string& text) {
  using nlohmann::json;
  try {
    const auto doc = json::parse(text);
    MultiClassReport report;
    report.n_samples = doc.at("n_samples").get<std::size_t>();
    report.accuracy = doc.at("accuracy").get<double>();
    for (const auto* avg : {"micro", "macro"}) {
      auto& m = std::string(avg) == "micro" ? report.micro : report.macro;
      const std::string p(avg);
      m.precision = doc.at(p + "_precision").get<double>();
      m.recall = doc.at(p + "_recall").get<double>();
      m.f1 = doc.at(p + "_f1").get<double>();
      m.auroc = doc.at(p + "_auroc").get<double>();
      m.aupr = doc.at(p + "_aupr").get<double>();
    }
    for (const auto& r : doc.at("per_class")) {
      ClassMetrics c;
      c.label = r.at("class").get<ClassId>();
      c.support = r.at("support").get<std::size_t>();
      c.precision = r.at("precision").get<double>();
      c.recall = r.at("recall").get<double>();
      c.f1 = r.at("f1").get<double>();
      if (!r.at("auroc").is_null()) c.auroc = r.at("auroc").get<double>();
      if (!r.at("aupr").is_null()) c.aupr = r.at("aupr").get<double>();
      report.per_class.push_back(c);
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("report: ") + e.what());
  }
}

void write_report(const MultiClassReport& report,
                  const std::filesystem::path& path, ReportFormat format) {
  auto out = open_out(path);
  out << (format == ReportFormat::Text ? format_report_text(report)
                                       : format_report_structured(report));
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

MultiClassReport read_report(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_report_structured(buf.str());
}

void write_model(std::ostream& out, const Model& params,
                 const std::vector<std::string>& drug_ids) {
  if (!drug_ids.empty() &&
      drug_ids.size() != static_cast<std::size_t>(params.n_drugs())) {
    throw Error(ErrorKind::DimensionMismatch, "drug id count != n");
  }
  out << "AMFPMC1 " << params.n_drugs() << ' ' << params.n_classes() << ' '
      << params.dim() << '\n';
  auto write_rows = [&](const char* name, const Matrix<double>& m) {
    out << name << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        out << (c ? " " : "") << exact(m(r, c));
      }
      out << '\n';
    }
  };
  auto write_vec = [&](const char* name, const Vector<double>& v) {
    out << name << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out << (i ? " " : "") << exact(v[i]);
    }
    out << '\n';
  };
  write_rows("E", params.embedding);
  write_vec("b", params.drug_bias);
  write_rows("W", params.projection);
  write_vec("c", params.class_bias);
  write_vec("u", params.bias_coupling);
  if (!drug_ids.empty()) {
    out << "ids\n";
    for (const auto& id : drug_ids) out << id << '\n';
  }
}

void write_model(const std::filesystem::path& path, const Model& params,
                 const std::vector<std::string>& drug_ids) {
  auto out = open_out(path);
  write_model(out, params, drug_ids);
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path.string());
}

ModelFile read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&](const char* expecting) {
    if (!std::getline(in, line)) {
      throw Error(ErrorKind::FormatError, std::string("truncated model: ") +
                                              "expected " + expecting);
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  std::istringstream header(next_line("header"));
  std::string magic;
  long n = -1, k = -1, d = -1;
  header >> magic >> n >> k >> d;
  std::string extra;
  if (magic != "AMFPMC1" || !header || n < 2 || k < 2 || d < 1 ||
      (header >> extra)) {
    throw Error(ErrorKind::FormatError, "bad header '" + line + "'");
  }
  ModelFile file{Model::zeros(n, k, d), {}};

  auto expect_section = [&](const char* name) {
    if (strip(next_line(name)) != name) {
      throw Error(ErrorKind::DimensionMismatch,
                  "line " + std::to_string(line_no) + ": expected section '" +
                      name + "', got '" + line + "'");
    }
  };
  auto read_values = [&](const char* what, Eigen::Index expected,
                         double* dst) {
    const auto fields = split(strip(next_line(what)), ' ');
    if (static_cast<Eigen::Index>(fields.size()) != expected) {
      throw Error(ErrorKind::DimensionMismatch,
                  "line " + std::to_string(line_no) + ": " + what + " has " +
                      std::to_string(fields.size()) + " values, expected " +
                      std::to_string(expected));
    }
    for (Eigen::Index i = 0; i < expected; ++i) {
      auto v = parse_double(fields[i]);
      if (!v) {
        throw Error(ErrorKind::FormatError,
                    "line " + std::to_string(line_no) + ": bad number '" +
                        fields[i] + "'");
      }
      dst[i] = *v;
    }
  };
  auto& p = file.params;
  expect_section("E");
  for (Eigen::Index r = 0; r < n; ++r) {
    read_values("E row", d, p.embedding.row(r).data());
  }
  expect_section("b");
  read_values("b", n, p.drug_bias.data());
  expect_section("W");
  for (Eigen::Index r = 0; r < k; ++r) {
    read_values("W row", d, p.projection.row(r).data());
  }
  expect_section("c");
  read_values("c", k, p.class_bias.data());
  expect_section("u");
  read_values("u", k, p.bias_coupling.data());

  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    if (strip(line) != "ids") {
      throw Error(ErrorKind::FormatError,
                  "line " + std::to_string(line_no) + ": unexpected '" + line +
                      "'");
    }
    for (long i = 0; i < n; ++i) {
      file.drug_ids.push_back(strip(next_line("drug id")));
    }
    break;
  }
  return file;
}

ModelFile read_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_model(in);
}

void write_embeddings_csv(const EmbeddingTable<double>& table,
                          const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "drug_id";
  for (Eigen::Index c = 0; c < table.values.cols(); ++c) out << ",e" << c;
  out << '\n';
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    out << table.drug_ids.at(r);
    for (Eigen::Index c = 0; c < table.values.cols(); ++c) {
      out << ',' << exact(table.values(r, c));
    }
    out << '\n';
  }
}

EmbeddingTable<double> read_embeddings_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::FormatError, "empty embedding file");
  }
  const auto d = static_cast<Eigen::Index>(split(line, ',').size()) - 1;
  EmbeddingTable<double> table;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (strip(line).empty()) continue;
    const auto fields = split(strip(line), ',');
    if (static_cast<Eigen::Index>(fields.size()) != d + 1) {
      throw Error(ErrorKind::DimensionMismatch, "ragged embedding row");
    }
    table.drug_ids.push_back(fields[0]);
    for (Eigen::Index c = 1; c <= d; ++c) {
      auto v = parse_double(fields[c]);
      if (!v) throw Error(ErrorKind::FormatError, "bad number " + fields[c]);
      values.push_back(*v);
    }
  }
  table.values = Eigen::Map<Matrix<double>>(
      values.data(), static_cast<Eigen::Index>(table.drug_ids.size()), d);
  return table;
}

void write_vocabulary(const ClassVocabulary& vocab,
                      const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# mode=" << to_string(vocab.mode()) << '\n';
  for (ClassId c = 0; c < vocab.size(); ++c) {
    out << c << '\t' << vocab.count(c) << '\t' << vocab.decode(c) << '\n';
  }
}

ClassVocabulary read_vocabulary(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  std::optional<Mode> mode;
  std::vector<std::string> labels;
  std::vector<std::size_t> counts;
  while (std::getline(in, line)) {
    const auto s = strip(line);
    if (s.starts_with("# mode=")) {
      mode = parse_mode(s.substr(7));
      continue;
    }
    if (skippable(s)) continue;
    const auto fields = split(s, '\t');
    auto index = fields.size() == 3 ? parse_int<ClassId>(fields[0])
                                    : std::nullopt;
    auto count = fields.size() == 3 ? parse_int<std::size_t>(fields[1])
                                    : std::nullopt;
    if (!index || !count || *index != static_cast<ClassId>(labels.size())) {
      throw Error(ErrorKind::FormatError, "bad vocabulary line '" + s + "'");
    }
    labels.push_back(fields[2]);
    counts.push_back(*count);
  }
  if (!mode) throw Error(ErrorKind::FormatError, "vocabulary lacks a mode");
  return ClassVocabulary::from_entries(*mode, std::move(labels),
                                       std::move(counts));
}

}  // namespace amfpmc
