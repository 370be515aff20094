// Command-line front end: phrase extraction, training, evaluation, grid
// search, prediction, embedding export and synthetic graph generation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>

#include "amfpmc/io.hpp"
#include "amfpmc/pipeline.hpp"
#include "amfpmc/synthetic.hpp"

namespace fs = std::filesystem;
using namespace amfpmc;

namespace {

struct CommonOptions {
  std::uint64_t seed = 1;
  std::string mode = "holdout";
  int classes = 0;
};

void add_hyperparameters(CLI::App* cmd, Hyperparameters& hp) {
  cmd->add_option("--dim", hp.embedding_dim, "Embedding size")
      ->capture_default_str();
  cmd->add_option("--dropout", hp.dropout, "Dropout rate")
      ->capture_default_str();
  cmd->add_option("--epochs", hp.epochs)->capture_default_str();
  cmd->add_option("--batch", hp.batch_size, "Mini-batch size")
      ->capture_default_str();
  cmd->add_option("--lr", hp.learning_rate, "Adam learning rate")
      ->capture_default_str();
  cmd->add_option("--alpha", hp.alpha, "Propagation factor in [0,1]")
      ->capture_default_str();
  cmd->add_option("--balance", hp.balance_classes, "Balanced class weights")
      ->capture_default_str();
}

void add_common(CLI::App* cmd, CommonOptions& common, bool with_mode) {
  cmd->add_option("--seed", common.seed, "Single seed for all randomness")
      ->capture_default_str();
  if (with_mode) {
    cmd->add_option("--mode", common.mode)
        ->check(CLI::IsMember({"retrospective", "holdout"}))
        ->capture_default_str();
    cmd->add_option("--classes", common.classes,
                    "Number of classes K (0 = infer from labels)")
        ->capture_default_str();
  }
}

ReportFormat parse_format(const std::string& s) {
  return s == "structured" ? ReportFormat::Structured : ReportFormat::Text;
}

void emit_report(const MultiClassReport& report, const std::string& path,
                 const std::string& format) {
  if (path.empty()) {
    std::cout << (parse_format(format) == ReportFormat::Text
                      ? format_report_text(report)
                      : format_report_structured(report));
  } else {
    write_report(report, path, parse_format(format));
    std::cout << "report written to " << path << '\n';
  }
}

InteractionGraph load_graph(const std::string& path, Mode mode, int classes) {
  return build_graph(parse_interactions_file(path, PayloadKind::Indices), mode,
                     classes);
}

void print_graph_summary(const char* what, const InteractionGraph& g) {
  std::cout << what << ": " << g.n_drugs() << " drugs, " << g.edge_count()
            << " interactions, K=" << g.n_classes() << " ("
            << to_string(g.mode()) << ")\n";
}

GridSpec read_grid(const std::string& path) {
  GridSpec grid;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ParseError,
                  path + ": line " + std::to_string(line_no) + ": missing '='");
    }
    std::string key = line.substr(0, eq);
    key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
    std::string rest = line.substr(eq + 1);
    std::replace(rest.begin(), rest.end(), ',', ' ');
    std::istringstream values(rest);
    double v;
    std::vector<double> parsed;
    while (values >> v) parsed.push_back(v);
    if (!values.eof() || parsed.empty()) {
      throw Error(ErrorKind::ParseError,
                  path + ": line " + std::to_string(line_no) + ": bad values");
    }
    auto as_int = [&] {
      return std::vector<int>(parsed.begin(), parsed.end());
    };
    if (key == "dim" || key == "embedding_dim") grid.embedding_dim = as_int();
    else if (key == "dropout") grid.dropout = parsed;
    else if (key == "epochs") grid.epochs = as_int();
    else if (key == "batch" || key == "batch_size") grid.batch_size = as_int();
    else if (key == "lr" || key == "learning_rate") grid.learning_rate = parsed;
    else if (key == "alpha") grid.alpha = parsed;
    else {
      throw Error(ErrorKind::ParseError,
                  path + ": line " + std::to_string(line_no) +
                      ": unknown key '" + key + "'");
    }
  }
  return grid;
}

// Dimensions absent from the file fall back to the base value.
void fill_grid_defaults(GridSpec& grid, const Hyperparameters& base) {
  const auto single = GridSpec::single(base);
  if (grid.embedding_dim.empty()) grid.embedding_dim = single.embedding_dim;
  if (grid.dropout.empty()) grid.dropout = single.dropout;
  if (grid.epochs.empty()) grid.epochs = single.epochs;
  if (grid.batch_size.empty()) grid.batch_size = single.batch_size;
  if (grid.learning_rate.empty()) grid.learning_rate = single.learning_rate;
  if (grid.alpha.empty()) grid.alpha = single.alpha;
}

std::string describe(const Hyperparameters& hp) {
  std::ostringstream out;
  out << "dim=" << hp.embedding_dim << " dropout=" << hp.dropout
      << " epochs=" << hp.epochs << " batch=" << hp.batch_size
      << " lr=" << hp.learning_rate << " alpha=" << hp.alpha;
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-class interaction-type prediction on typed graphs"};
  app.set_config("--config", "", "Flat key=value config file");
  app.require_subcommand(1);

  CommonOptions common;
  Hyperparameters hp;

  // extract
  auto* extract = app.add_subcommand(
      "extract", "Sentences TSV -> phrase vocabulary + indexed TSV");
  std::string ex_input, ex_stoplist, ex_verbs, ex_vocab_out, ex_out;
  std::size_t ex_top_n = 35, ex_min_count = 1;
  extract->add_option("--input", ex_input, "id_a<TAB>id_b<TAB>sentence[<TAB>name_a<TAB>name_b]")
      ->required()->check(CLI::ExistingFile);
  extract->add_option("--stoplist", ex_stoplist)->check(CLI::ExistingFile);
  extract->add_option("--verbs", ex_verbs)->check(CLI::ExistingFile);
  extract->add_option("--top-n", ex_top_n, "Common phrases kept (retrospective)")
      ->capture_default_str();
  extract->add_option("--min-count", ex_min_count, "Minimum phrase count (holdout)")
      ->capture_default_str();
  extract->add_option("--vocab", ex_vocab_out, "Vocabulary output")->required();
  extract->add_option("--out", ex_out, "Indexed TSV output")->required();
  add_common(extract, common, true);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model on a TSV graph");
  std::string tr_input, tr_out;
  double tr_negative_ratio = 1.0;
  train_cmd->add_option("--interactions", tr_input)->required()
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--negative-ratio", tr_negative_ratio,
                        "Sampled class-0 pairs per edge (retrospective)")
      ->capture_default_str();
  train_cmd->add_option("--out", tr_out, "Model output")->required();
  add_hyperparameters(train_cmd, hp);
  add_common(train_cmd, common, true);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Holdout or retrospective");
  evaluate->require_subcommand(1);
  std::string report_path, report_format = "text";
  auto* holdout = evaluate->add_subcommand("holdout", "Stratified k-fold");
  std::string ho_input;
  int ho_k = 5;
  holdout->add_option("--interactions", ho_input)->required()
      ->check(CLI::ExistingFile);
  holdout->add_option("--k", ho_k, "Folds")->capture_default_str();
  holdout->add_option("--classes", common.classes)->capture_default_str();
  holdout->add_option("--seed", common.seed)->capture_default_str();
  holdout->add_option("--report", report_path);
  holdout->add_option("--format", report_format)
      ->check(CLI::IsMember({"text", "structured"}))->capture_default_str();
  add_hyperparameters(holdout, hp);

  auto* retro = evaluate->add_subcommand("retrospective",
                                         "Train on t0, test on t1");
  std::string re_t0, re_t1, re_subset;
  double re_negative_ratio = 1.0;
  std::size_t re_cap = kDefaultTestCap;
  retro->add_option("--t0", re_t0)->required()->check(CLI::ExistingFile);
  retro->add_option("--t1", re_t1)->required()->check(CLI::ExistingFile);
  retro->add_option("--negative-ratio", re_negative_ratio)
      ->capture_default_str();
  retro->add_option("--subset", re_subset, "Drug id list restricting tests")
      ->check(CLI::ExistingFile);
  retro->add_option("--test-cap", re_cap)->capture_default_str();
  retro->add_option("--classes", common.classes)->capture_default_str();
  retro->add_option("--seed", common.seed)->capture_default_str();
  retro->add_option("--report", report_path);
  retro->add_option("--format", report_format)
      ->check(CLI::IsMember({"text", "structured"}))->capture_default_str();
  add_hyperparameters(retro, hp);

  // gridsearch
  auto* grid_cmd = app.add_subcommand("gridsearch", "Validation grid search");
  std::string gs_input, gs_grid, gs_objective = "accuracy";
  double gs_fraction = 0.2;
  bool gs_full = false;
  grid_cmd->add_option("--interactions", gs_input)->required()
      ->check(CLI::ExistingFile);
  grid_cmd->add_option("--grid", gs_grid, "key = v1, v2, ... per line")
      ->check(CLI::ExistingFile);
  grid_cmd->add_flag("--full-grid", gs_full,
                     "Enumerate the complete 4x4x10x50x11 tuning grid");
  grid_cmd->add_option("--validation-fraction", gs_fraction)
      ->capture_default_str();
  grid_cmd->add_option("--objective", gs_objective)
      ->check(CLI::IsMember({"accuracy", "auroc"}))->capture_default_str();
  add_hyperparameters(grid_cmd, hp);
  add_common(grid_cmd, common, true);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "Score drug pairs");
  std::string pr_model, pr_pairs, pr_out;
  int pr_top_k = 3;
  predict_cmd->add_option("--model", pr_model)->required()
      ->check(CLI::ExistingFile);
  predict_cmd->add_option("--pairs", pr_pairs, "id_a<TAB>id_b per line")
      ->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--top-k", pr_top_k)->capture_default_str();
  predict_cmd->add_option("--out", pr_out);

  // export-embeddings
  auto* export_cmd =
      app.add_subcommand("export-embeddings", "Write drug embeddings as CSV");
  std::string ee_model, ee_out;
  export_cmd->add_option("--model", ee_model)->required()
      ->check(CLI::ExistingFile);
  export_cmd->add_option("--out", ee_out)->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Planted typed block graph");
  SyntheticConfig sc;
  std::string sy_out = ".";
  synth->add_option("--n", sc.n_drugs)->capture_default_str();
  synth->add_option("--blocks", sc.n_blocks)->capture_default_str();
  synth->add_option("--k", sc.n_classes, "Classes (0 = minimum)")
      ->capture_default_str();
  synth->add_option("--p", sc.edge_probability)->capture_default_str();
  synth->add_option("--noise", sc.label_noise)->capture_default_str();
  synth->add_option("--holdout", sc.holdout_fraction)->capture_default_str();
  synth->add_option("--out-dir", sy_out)->capture_default_str();
  add_common(synth, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const CLI::App* leaf = &app;
  while (!leaf->get_subcommands().empty()) leaf = leaf->get_subcommands()[0];
  std::cout << "# resolved configuration (" << leaf->get_name() << ")\n"
            << leaf->config_to_str(true, false) << "# end configuration\n";
  hp.seed = common.seed;

  try {
    const Mode mode = parse_mode(common.mode);

    if (*extract) {
      const auto rules = ex_stoplist.empty() && ex_verbs.empty()
                             ? PhraseRules::defaults()
                             : PhraseRules::load(
                                   ex_stoplist.empty()
                                       ? fs::path(AMFPMC_DATA_DIR) / "stoplist.txt"
                                       : fs::path(ex_stoplist),
                                   ex_verbs.empty()
                                       ? fs::path(AMFPMC_DATA_DIR) / "verbs.txt"
                                       : fs::path(ex_verbs));
      const auto records =
          parse_interactions_file(ex_input, PayloadKind::Sentences);
      std::vector<KeywordPhrase> phrases;
      for (const auto& r : records) {
        try {
          phrases.push_back(extract_phrase(
              {std::get<std::string>(r.payload), r.name_a.value_or(""),
               r.name_b.value_or("")},
              rules));
        } catch (const Error& e) {
          throw Error(e.kind(),
                      "line " + std::to_string(r.line_no) + ": " + e.detail());
        }
      }
      const auto grouping = mode == Mode::Retrospective
                                ? Grouping::top_n(ex_top_n)
                                : Grouping::min_count(ex_min_count);
      const auto vocab = ClassVocabulary::build(phrases, mode, grouping);
      write_vocabulary(vocab, ex_vocab_out);
      std::ofstream out(ex_out);
      if (!out) throw Error(ErrorKind::IoError, "cannot write " + ex_out);
      std::size_t dropped = 0;
      for (std::size_t i = 0; i < records.size(); ++i) {
        ClassId label;
        try {
          label = vocab.encode(phrases[i]);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::UnknownPhrase) throw;
          ++dropped;
          continue;
        }
        out << records[i].drug_a << '\t' << records[i].drug_b << '\t' << label
            << '\n';
      }
      std::cout << "vocabulary: " << vocab.size() << " classes from "
                << phrases.size() << " sentences; " << dropped
                << " below min-count dropped\n";
      return 0;
    }

    if (*train_cmd) {
      const auto graph = load_graph(tr_input, mode, common.classes);
      print_graph_summary("graph", graph);
      std::vector<Interaction> pairs = graph.edges();
      if (mode == Mode::Retrospective) {
        // Negatives come from the same sampler the retrospective split uses.
        const auto split = retrospective_split(graph, graph, tr_negative_ratio,
                                               common.seed, 0);
        pairs = split.train;
      }
      TrainingTrace trace;
      const auto model =
          train(label_pairs(graph, pairs, hp.alpha), hp, graph.n_drugs(),
                graph.n_classes(), &trace);
      for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) {
        std::cout << "epoch " << e + 1 << " loss " << trace.epoch_loss[e]
                  << '\n';
      }
      std::vector<std::string> ids;
      for (const auto& d : graph.roster()) ids.push_back(d.external_id);
      write_model(tr_out, model, ids);
      std::cout << "model written to " << tr_out << '\n';
      return 0;
    }

    if (*holdout) {
      const auto graph = load_graph(ho_input, Mode::Holdout, common.classes);
      print_graph_summary("graph", graph);
      const auto result = holdout_evaluate(graph, hp, ho_k, common.seed);
      for (std::size_t f = 0; f < result.folds.size(); ++f) {
        std::cout << "fold " << f << " accuracy "
                  << result.folds[f].accuracy << " macro_auroc "
                  << result.folds[f].macro.auroc << '\n';
      }
      std::cout << "## pooled out-of-fold predictions\n"
                << format_report_text(result.pooled);
      std::cout << "## mean over folds\n";
      emit_report(result.mean, report_path, report_format);
      return 0;
    }

    if (*retro) {
      const auto t0 = load_graph(re_t0, Mode::Retrospective, common.classes);
      const int k = common.classes != 0 ? common.classes : t0.n_classes();
      const auto t1_records =
          parse_interactions_file(re_t1, PayloadKind::Indices);
      auto t1 = build_graph(t1_records, Mode::Retrospective,
                            std::max(k, build_graph(t1_records,
                                                    Mode::Retrospective)
                                            .n_classes()));
      auto t0_sized = k == t1.n_classes()
                          ? t0
                          : load_graph(re_t0, Mode::Retrospective,
                                       t1.n_classes());
      print_graph_summary("t0", t0_sized);
      print_graph_summary("t1", t1);
      const auto split = retrospective_split(t0_sized, t1, re_negative_ratio,
                                             common.seed, re_cap);
      std::cout << "train pairs " << split.train.size() << ", test pairs "
                << split.test.size() << " of " << split.unlabeled_universe
                << " unlabeled\n";
      std::optional<std::unordered_set<DrugIndex>> subset;
      if (!re_subset.empty()) {
        subset.emplace();
        for (const auto& id : read_id_list(re_subset)) {
          if (auto idx = split.graph_t0.roster().find(id)) {
            subset->insert(*idx);
          }
        }
      }
      const auto result = retrospective_evaluate(split, hp, subset);
      emit_report(result.report, report_path, report_format);
      return 0;
    }

    if (*grid_cmd) {
      const auto graph = load_graph(gs_input, mode, common.classes);
      print_graph_summary("graph", graph);
      GridSpec grid;
      if (gs_full) {
        grid = GridSpec::full_table(hp.embedding_dim);
      } else if (!gs_grid.empty()) {
        grid = read_grid(gs_grid);
        fill_grid_defaults(grid, hp);
      } else {
        grid = GridSpec::single(hp);
      }
      std::cout << "grid points: " << grid.size() << '\n';
      const auto result = grid_search(
          graph, grid, hp, gs_fraction, common.seed,
          gs_objective == "auroc" ? GridObjective::MacroAuroc
                                  : GridObjective::Accuracy);
      for (const auto& p : result.points) {
        std::cout << describe(p.hp) << " score=" << p.score << '\n';
      }
      std::cout << "best: " << describe(result.best) << '\n';
      return 0;
    }

    if (*predict_cmd) {
      const auto file = read_model(fs::path(pr_model));
      if (file.drug_ids.empty()) {
        throw Error(ErrorKind::FormatError, "model file carries no drug ids");
      }
      DrugRoster roster;
      for (const auto& id : file.drug_ids) roster.add(id);
      std::ifstream in(pr_pairs);
      std::ofstream file_out;
      if (!pr_out.empty()) {
        file_out.open(pr_out);
        if (!file_out) throw Error(ErrorKind::IoError, "cannot write " + pr_out);
      }
      std::ostream& out = pr_out.empty() ? std::cout : file_out;
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream fields(line);
        std::string a, b;
        if (!std::getline(fields, a, '\t') || !std::getline(fields, b, '\t')) {
          throw Error(ErrorKind::ParseError,
                      pr_pairs + ": line " + std::to_string(line_no));
        }
        if (!b.empty() && b.back() == '\r') b.pop_back();
        const auto probs = predict(file.params, roster.index_of(a),
                                   roster.index_of(b));
        std::vector<int> order(probs.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int x, int y) { return probs[x] > probs[y]; });
        out << a << '\t' << b;
        for (int r = 0; r < std::min<int>(pr_top_k, probs.size()); ++r) {
          out << '\t' << order[r] << ':' << probs[order[r]];
        }
        out << '\n';
      }
      return 0;
    }

    if (*export_cmd) {
      const auto file = read_model(fs::path(ee_model));
      DrugRoster roster;
      if (file.drug_ids.empty()) {
        roster = DrugRoster::numbered(file.params.n_drugs());
      } else {
        for (const auto& id : file.drug_ids) roster.add(id);
      }
      write_embeddings_csv(export_embeddings(file.params, roster), ee_out);
      std::cout << "embeddings written to " << ee_out << '\n';
      return 0;
    }

    if (*synth) {
      sc.mode = mode;
      sc.seed = common.seed;
      const auto g = generate_synthetic(sc);
      fs::create_directories(sy_out);
      write_interactions(g.t0, fs::path(sy_out) / "t0.tsv");
      write_interactions(g.t1, fs::path(sy_out) / "t1.tsv");
      std::ofstream blocks(fs::path(sy_out) / "blocks.tsv");
      for (std::size_t i = 0; i < g.block_of.size(); ++i) {
        blocks << g.t1.roster()[static_cast<DrugIndex>(i)].external_id << '\t'
               << g.block_of[i] << '\n';
      }
      print_graph_summary("t0", g.t0);
      print_graph_summary("t1", g.t1);
      std::cout << "held out " << g.held_out.size() << ", noisy "
                << g.noisy_edges << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.detail()
              << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
