// Copyright 2026 The wsner Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// wsner: command-line entry point.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "wsner/corpus.h"
#include "wsner/errors.h"
#include "wsner/eval.h"
#include "wsner/lexicon.h"
#include "wsner/mlm_backend.h"
#include "wsner/plugin_tagger.h"
#include "wsner/rules.h"
#include "wsner/selftrain.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wsner {
namespace {

struct CommonOptions {
  std::string config;
  std::optional<uint64_t> seed;
  std::string mlm_endpoint;
  std::string tagger_endpoint;
  std::string out = "wsner-out";
  bool dry_run = false;
};

void AddCommonOptions(CLI::App &app, CommonOptions &common) {
  app.add_option("--config", common.config, "Run config (JSON)")->envname("WSNER_CONFIG");
  app.add_option("--seed", common.seed, "Random seed")->envname("WSNER_SEED");
  app.add_option("--mlm-endpoint", common.mlm_endpoint,
                 "MLM backend: stub:<json>, exec:<cmd> or tcp:<host>:<port>")
      ->envname("WSNER_MLM_ENDPOINT");
  app.add_option("--tagger-endpoint", common.tagger_endpoint,
                 "Tagger: native, exec:<cmd> or tcp:<host>:<port>")
      ->envname("WSNER_TAGGER_ENDPOINT");
  app.add_option("--out", common.out, "Output directory")->envname("WSNER_OUT");
  app.add_flag("--dry-run", common.dry_run, "Validate inputs and config, write nothing")
      ->envname("WSNER_DRY_RUN");
}

// Settings shared by every command that reads a corpus.
struct CorpusSettings {
  ColumnConfig columns;
  // Without document markers each sentence becomes its own document unless
  // this is set.
  bool single_document_without_markers = false;
};

// Everything a config file may hold besides the run section.
struct FileConfig {
  json raw = json::object();
  fs::path base;
  CorpusSettings corpus;
  std::string train, dev, test, lexicon;
  std::string mlm_endpoint, tagger_endpoint;
  PipelineConfig run;
};

std::string Resolve(const fs::path &base, const std::string &path) {
  if (path.empty() || fs::path(path).is_absolute()) return path;
  return (base / path).lexically_normal().string();
}

FileConfig LoadFileConfig(const std::string &path) {
  FileConfig config;
  if (path.empty()) return config;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  try {
    config.raw = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  if (!config.raw.is_object()) throw ConfigError(path + ": expected a JSON object");
  config.base = fs::path(path).parent_path();
  try {
    for (const auto &[key, value] : config.raw.items()) {
      if (key == "corpus") {
        const json &columns = value.value("columns", json::object());
        config.corpus.columns.text_column =
            columns.value("text", config.corpus.columns.text_column);
        if (columns.contains("pos")) {
          config.corpus.columns.pos_column =
              columns["pos"].is_null() ? std::nullopt : std::optional<int>(columns["pos"]);
        }
        if (columns.contains("label")) {
          config.corpus.columns.label_column =
              columns["label"].is_null() ? std::nullopt
                                         : std::optional<int>(columns["label"]);
        }
        config.corpus.columns.doc_marker =
            value.value("doc_marker", config.corpus.columns.doc_marker);
        config.corpus.columns.repair_bio =
            value.value("repair_bio", config.corpus.columns.repair_bio);
        config.corpus.single_document_without_markers =
            value.value("single_document_without_markers", false);
        config.train = Resolve(config.base, value.value("train", std::string()));
        config.dev = Resolve(config.base, value.value("dev", std::string()));
        config.test = Resolve(config.base, value.value("test", std::string()));
      } else if (key == "lexicon") {
        config.lexicon = Resolve(config.base, value.get<std::string>());
      } else if (key == "mlm_endpoint") {
        config.mlm_endpoint = value.get<std::string>();
        if (config.mlm_endpoint.rfind("stub:", 0) == 0) {
          config.mlm_endpoint = "stub:" + Resolve(config.base, config.mlm_endpoint.substr(5));
        }
      } else if (key == "tagger_endpoint") {
        config.tagger_endpoint = value.get<std::string>();
      } else if (key == "run") {
        config.run = PipelineConfig::FromJson(value);
      } else {
        throw ConfigError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception &e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return config;
}

void RequireFile(const std::string &path, const std::string &what) {
  if (path.empty()) throw UsageError(what + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(what + " '" + path + "' does not exist");
}

std::vector<Document> LoadCorpus(const std::string &path, const CorpusSettings &settings,
                                 int first_sentence_id = 0) {
  bool saw_marker = false;
  ReadOptions options;
  options.first_sentence_id = first_sentence_id;
  options.saw_marker = &saw_marker;
  std::vector<Document> docs = ReadCorpusFile(path, settings.columns, options);
  if (!saw_marker && !settings.single_document_without_markers) {
    docs = SplitIntoSentenceDocuments(docs);
  }
  return docs;
}

void PrepareOutput(const std::string &out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw Error("cannot create output directory '" + out + "'");
}

void WriteText(const fs::path &path, const std::string &text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw Error("cannot write '" + path.string() + "'");
}

void WriteRecords(const fs::path &path, const std::vector<json> &records) {
  std::string text;
  for (const json &record : records) text += record.dump() + "\n";
  WriteText(path, text);
}

void WriteManifest(const CommonOptions &common, const std::string &command,
                   const json &inputs, uint64_t seed, const std::string &mlm,
                   const std::string &tagger) {
  json manifest{{"command", command},       {"config", common.config},
                {"inputs", inputs},         {"out", common.out},
                {"seed", seed},             {"mlm_endpoint", mlm},
                {"tagger_endpoint", tagger}};
  WriteText(fs::path(common.out) / "manifest.json", manifest.dump(2) + "\n");
  if (!common.config.empty()) {
    fs::copy_file(common.config, fs::path(common.out) / "config.source.json",
                  fs::copy_options::overwrite_existing);
  }
}

std::vector<std::string> SortedClasses(const Lexicon &lexicon,
                                       std::span<const Document> gold_docs) {
  std::set<std::string> classes;
  for (const std::string &name : lexicon.class_names()) classes.insert(name);
  for (const Document &doc : gold_docs) {
    for (const Sentence &sentence : doc.sentences) {
      for (const Token &token : sentence.tokens) {
        if (!token.label.outside()) classes.insert(token.label.type);
      }
    }
  }
  return {classes.begin(), classes.end()};
}

// ---------------------------------------------------------------------------
// harvest

struct HarvestOptions {
  std::string corpus;
  int top_n = 200;
  bool interactive = false;
  int per_class = 10;
  std::vector<std::string> classes{"PER", "LOC", "ORG", "MISC"};
  std::string seed_lexicon;
};

int RunHarvest(const CommonOptions &common, const HarvestOptions &opts) {
  FileConfig file = LoadFileConfig(common.config);
  const std::string corpus = opts.corpus.empty() ? file.train : opts.corpus;
  RequireFile(corpus, "--corpus");
  if (!opts.seed_lexicon.empty()) RequireFile(opts.seed_lexicon, "--lexicon");
  if (common.dry_run) {
    fmt::print("dry run: would harvest the top {} candidates from {}\n", opts.top_n, corpus);
    return 0;
  }
  std::vector<Document> docs = LoadCorpus(corpus, file.corpus);
  std::vector<HarvestCandidate> candidates = HarvestCandidates(docs, opts.top_n);
  PrepareOutput(common.out);
  std::string ranked;
  for (const HarvestCandidate &c : candidates) {
    ranked += fmt::format("{}\t{}\n", c.surface(), c.frequency);
  }
  WriteText(fs::path(common.out) / "candidates.tsv", ranked);
  fmt::print(stderr, "wrote {} candidates to {}\n", candidates.size(),
             (fs::path(common.out) / "candidates.tsv").string());
  if (!opts.interactive) return 0;

  Lexicon lexicon;
  if (!opts.seed_lexicon.empty()) lexicon = Lexicon::Load(opts.seed_lexicon);
  std::set<std::string> allowed(opts.classes.begin(), opts.classes.end());
  auto full = [&] {
    for (const std::string &type : opts.classes) {
      if (static_cast<int>(lexicon.entries(type).size()) < opts.per_class) return false;
    }
    return true;
  };
  // Returns the class already holding `surface`, if any.
  auto owner = [&](const std::string &surface) -> std::string {
    for (const auto &[type, entries] : lexicon.classes()) {
      for (const LexiconEntry &entry : entries) {
        if (entry.surface() == surface) return type;
      }
    }
    return "";
  };
  auto add = [&](const std::string &type, const std::string &surface, int freq) {
    if (allowed.count(type) == 0) {
      fmt::print("unknown class '{}'\n", type);
      return;
    }
    const std::string existing = owner(surface);
    if (!existing.empty() && existing != type) {
      fmt::print("rejected: '{}' is already listed under {}\n", surface, existing);
      return;
    }
    lexicon.Add(type, surface, freq);
  };

  fmt::print("Answer with a class ({}), s to skip, q to stop, or +CLASS surface to add "
             "an entry by hand.\n",
             fmt::join(opts.classes, "/"));
  std::string line;
  for (const HarvestCandidate &c : candidates) {
    if (full()) break;
    fmt::print("{} ({})? ", c.surface(), c.frequency);
    std::cout.flush();
    bool quit = false;
    while (std::getline(std::cin, line)) {
      if (line == "q") {
        quit = true;
      } else if (!line.empty() && line[0] == '+') {
        const size_t space = line.find(' ');
        if (space != std::string::npos) add(line.substr(1, space - 1), line.substr(space + 1), 0);
        fmt::print("{} ({})? ", c.surface(), c.frequency);
        std::cout.flush();
        continue;
      } else if (line != "s" && !line.empty()) {
        add(line, c.surface(), c.frequency);
      }
      break;
    }
    if (quit || std::cin.eof()) break;
  }
  fmt::print("\n");
  std::vector<LexiconViolation> violations = ValidateUnambiguous(lexicon);
  if (!violations.empty()) {
    throw Error(fmt::format("lexicon is ambiguous: '{}' under {}", violations[0].surface,
                            fmt::join(violations[0].classes, ", ")));
  }
  const fs::path path = fs::path(common.out) / "lexicon.txt";
  lexicon.Save(path.string());
  fmt::print(stderr, "saved {} entries to {}\n", lexicon.size(), path.string());
  return 0;
}

// ---------------------------------------------------------------------------
// annotate

struct AnnotateCmdOptions {
  std::string corpus;
  std::string lexicon;
};

int RunAnnotate(const CommonOptions &common, const AnnotateCmdOptions &opts) {
  FileConfig file = LoadFileConfig(common.config);
  const std::string corpus = opts.corpus.empty() ? file.train : opts.corpus;
  const std::string lexicon_path = opts.lexicon.empty() ? file.lexicon : opts.lexicon;
  RequireFile(corpus, "--corpus");
  RequireFile(lexicon_path, "--lexicon");
  if (common.dry_run) {
    fmt::print("dry run: would annotate {} with {}\n", corpus, lexicon_path);
    return 0;
  }
  const Lexicon lexicon = Lexicon::Load(lexicon_path);
  std::vector<Document> gold = LoadCorpus(corpus, file.corpus);
  std::vector<Document> stripped = gold;
  for (Document &doc : stripped) StripLabels(doc);
  LexiconAnnotation annotation = AnnotateWithLexicon(stripped, lexicon);

  std::vector<Sentence> labeled;
  std::set<int> labeled_ids(annotation.labeled.begin(), annotation.labeled.end());
  for (const Document &doc : annotation.docs) {
    for (const Sentence &sentence : doc.sentences) {
      if (labeled_ids.count(sentence.id) > 0) labeled.push_back(sentence);
    }
  }
  const SupervisionDegree degree = ComputeSupervisionDegree(labeled, gold);
  json summary{{"labeled_sentences", annotation.labeled.size()},
               {"unlabeled_sentences", annotation.unlabeled.size()},
               {"matched_entities", annotation.stats.matched_entities},
               {"matched_tokens", annotation.stats.matched_tokens},
               {"entities_per_class", annotation.stats.entities_per_class}};
  if (file.corpus.columns.label_column) {
    summary["supervision"] = {{"annotated_entities", degree.annotated_entities},
                              {"gold_entities", degree.gold_entities},
                              {"percent", degree.percent},
                              {"labeled_tokens", degree.labeled_tokens}};
  }
  PrepareOutput(common.out);
  ColumnConfig out_columns;
  WriteCorpusFile((fs::path(common.out) / "annotated.conll").string(), annotation.docs,
                  out_columns);
  WriteText(fs::path(common.out) / "annotation.json", summary.dump(2) + "\n");
  fmt::print("{}\n", summary.dump(2));
  WriteManifest(common, "annotate", json{{"corpus", corpus}, {"lexicon", lexicon_path}},
                common.seed.value_or(0), "", "");
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunCmdOptions {
  std::string train, dev, test, lexicon, preset;
};

int RunRun(const CommonOptions &common, const RunCmdOptions &opts) {
  FileConfig file = LoadFileConfig(common.config);
  PipelineConfig config = file.run;
  if (!opts.preset.empty()) {
    if (file.raw.contains("run")) {
      json run = file.raw["run"];
      run["preset"] = opts.preset;
      config = PipelineConfig::FromJson(run);
    } else {
      config = PipelineConfig::Preset(opts.preset);
    }
  }
  if (common.seed) config.seed = *common.seed;
  config.Validate();

  const std::string train = opts.train.empty() ? file.train : opts.train;
  const std::string dev = opts.dev.empty() ? file.dev : opts.dev;
  const std::string test = opts.test.empty() ? file.test : opts.test;
  const std::string lexicon_path = opts.lexicon.empty() ? file.lexicon : opts.lexicon;
  std::string mlm = common.mlm_endpoint.empty() ? file.mlm_endpoint : common.mlm_endpoint;
  const std::string tagger_endpoint =
      common.tagger_endpoint.empty()
          ? (file.tagger_endpoint.empty() ? "native" : file.tagger_endpoint)
          : common.tagger_endpoint;
  RequireFile(train, "--train");
  RequireFile(lexicon_path, "--lexicon");
  if (!dev.empty()) RequireFile(dev, "--dev");
  if (!test.empty()) RequireFile(test, "--test");
  const bool needs_mlm = config.schedule.burn_in + config.schedule.intermediate > 0;
  if (needs_mlm && mlm.empty()) {
    throw UsageError("the schedule uses the MLM heuristic; pass --mlm-endpoint");
  }
  if (mlm.rfind("stub:", 0) == 0) RequireFile(mlm.substr(5), "stub MLM config");

  if (common.dry_run) {
    fmt::print("{}\n", config.ToJson().dump(2));
    fmt::print(stderr, "dry run: config and inputs are valid\n");
    return 0;
  }

  const Lexicon lexicon = Lexicon::Load(lexicon_path);
  std::vector<Document> corpus = LoadCorpus(train, file.corpus);
  std::vector<Document> dev_docs, test_docs;
  if (!dev.empty()) dev_docs = LoadCorpus(dev, file.corpus);
  if (!test.empty()) test_docs = LoadCorpus(test, file.corpus);
  std::unique_ptr<MlmBackend> backend;
  if (!mlm.empty()) backend = OpenMlmBackend(mlm);
  const std::vector<std::string> classes =
      SortedClasses(lexicon, config.keep_gold ? std::span<const Document>(corpus)
                                              : std::span<const Document>());
  std::unique_ptr<Tagger> tagger = OpenTagger(tagger_endpoint, classes);

  PrepareOutput(common.out);
  const fs::path out(common.out);
  std::ofstream metrics_file(out / "metrics.jsonl");
  auto on_metrics = [&](const json &record) {
    metrics_file << record.dump() << '\n';
    metrics_file.flush();
    fmt::print(stderr, "[{}] {} labeled={} unlabeled={}{}\n", record["iteration"].dump(),
               record["stage"].get<std::string>(), record.value("labeled", 0),
               record.value("unlabeled", 0),
               record.contains("dev")
                   ? fmt::format(" dev_f1={:.2f}", record["dev"]["f1"].get<double>())
                   : "");
  };
  PipelineResult result =
      RunPipeline(corpus, lexicon, config, backend.get(), *tagger, dev_docs, on_metrics);

  result.model.Save((out / "model.wsner").string());
  std::vector<json> traces;
  for (const RuleTrace &trace : result.traces) traces.push_back(trace.ToJson());
  WriteRecords(out / "traces.jsonl", traces);
  WriteText(out / "config.json", config.ToJson().dump(2) + "\n");
  std::vector<Document> labeled_docs;
  for (const Document &doc : result.state.docs) {
    Document kept{doc.id, {}};
    for (const Sentence &sentence : doc.sentences) {
      if (result.state.labeled.count(sentence.id) > 0) kept.sentences.push_back(sentence);
    }
    if (!kept.sentences.empty()) labeled_docs.push_back(std::move(kept));
  }
  WriteCorpusFile((out / "labeled.conll").string(), labeled_docs, ColumnConfig{});
  if (!test_docs.empty()) {
    std::vector<Document> predicted = PredictDocuments(*tagger, result.model, test_docs);
    WriteCorpusFile((out / "test_predictions.conll").string(), predicted, ColumnConfig{});
    const ScoreReport report = ScoreEntities(predicted, test_docs);
    WriteText(out / "test_report.txt", report.ToTable());
    WriteRecords(out / "test_report.jsonl", report.ToRecords());
    fmt::print("{}", report.ToTable());
  }
  WriteManifest(common, "run",
                json{{"train", train}, {"dev", dev}, {"test", test}, {"lexicon", lexicon_path}},
                config.seed, mlm, tagger_endpoint);
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictCmdOptions {
  std::string model;
  std::string corpus;
};

int RunPredict(const CommonOptions &common, const PredictCmdOptions &opts) {
  FileConfig file = LoadFileConfig(common.config);
  RequireFile(opts.model, "--model");
  const std::string corpus = opts.corpus.empty() ? file.test : opts.corpus;
  RequireFile(corpus, "--corpus");
  if (common.dry_run) {
    fmt::print("dry run: would label {} with {}\n", corpus, opts.model);
    return 0;
  }
  const TaggerModel model = TaggerModel::Load(opts.model);
  const std::string endpoint =
      common.tagger_endpoint.empty()
          ? (file.tagger_endpoint.empty() ? "native" : file.tagger_endpoint)
          : common.tagger_endpoint;
  std::unique_ptr<Tagger> tagger = OpenTagger(endpoint, model.classes);
  std::vector<Document> docs = LoadCorpus(corpus, file.corpus);
  std::vector<Document> predicted = PredictDocuments(*tagger, model, docs);
  PrepareOutput(common.out);
  WriteCorpusFile((fs::path(common.out) / "predictions.conll").string(), predicted,
                  ColumnConfig{});
  WriteManifest(common, "predict", json{{"model", opts.model}, {"corpus", corpus}},
                common.seed.value_or(0), "", endpoint);
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalCmdOptions {
  std::string pred;
  std::string gold;
  std::string mapping;
  int pred_label_column = -1;
};

int RunEval(const CommonOptions &common, const EvalCmdOptions &opts) {
  FileConfig file = LoadFileConfig(common.config);
  RequireFile(opts.pred, "--pred");
  const std::string gold_path = opts.gold.empty() ? file.test : opts.gold;
  RequireFile(gold_path, "--gold");
  if (!opts.mapping.empty() && opts.mapping != "wnut") RequireFile(opts.mapping, "--mapping");
  if (common.dry_run) {
    fmt::print("dry run: would score {} against {}\n", opts.pred, gold_path);
    return 0;
  }
  CorpusSettings settings = file.corpus;
  settings.columns.label_column = opts.pred_label_column;
  std::vector<Document> pred = LoadCorpus(opts.pred, settings);
  std::vector<Document> gold = LoadCorpus(gold_path, file.corpus);
  if (!opts.mapping.empty()) {
    const LabelMapping mapping =
        opts.mapping == "wnut" ? WnutToConllMapping() : LoadLabelMapping(opts.mapping);
    pred = MapLabels(pred, mapping);
  }
  const ScoreReport report = ScoreEntities(pred, gold);
  fmt::print("{}", report.ToTable());
  PrepareOutput(common.out);
  WriteText(fs::path(common.out) / "report.txt", report.ToTable());
  WriteRecords(fs::path(common.out) / "report.jsonl", report.ToRecords());
  return 0;
}

// ---------------------------------------------------------------------------
// inspect-traces

struct TraceCmdOptions {
  std::string traces;
  std::string rule;
  std::optional<int> sentence;
  bool summary = false;
};

int RunInspectTraces(const CommonOptions &common, const TraceCmdOptions &opts) {
  const std::string path =
      opts.traces.empty() ? (fs::path(common.out) / "traces.jsonl").string() : opts.traces;
  RequireFile(path, "--traces");
  if (common.dry_run) return 0;
  std::ifstream in(path);
  std::string line;
  std::map<std::string, int> counts;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    RuleTrace trace;
    try {
      trace = RuleTrace::FromJson(json::parse(line));
    } catch (const json::exception &e) {
      throw ParseError(fmt::format("{}: {}", path, e.what()), line_number);
    }
    if (!opts.rule.empty() && trace.rule != opts.rule) continue;
    if (opts.sentence && trace.sentence_id != *opts.sentence) continue;
    ++counts[trace.rule];
    if (opts.summary) continue;
    auto labels = [](const std::vector<BioLabel> &seq) {
      std::vector<std::string> out;
      for (const BioLabel &label : seq) out.push_back(label.ToString());
      return fmt::format("{}", fmt::join(out, " "));
    };
    fmt::print("{:<18} s{} [{},{})  {}  ->  {}  ({})\n", trace.rule, trace.sentence_id,
               trace.start, trace.end, labels(trace.before), labels(trace.after),
               trace.reason);
  }
  for (const auto &[rule, count] : counts) fmt::print("{:<18} {}\n", rule, count);
  return 0;
}

}  // namespace
}  // namespace wsner

int main(int argc, char **argv) {
  using namespace wsner;
  CLI::App app{"Lightly supervised NER by self-training with lexicon, MLM and rules"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "wsner 1.0.0");

  CommonOptions common;
  HarvestOptions harvest;
  AnnotateCmdOptions annotate;
  RunCmdOptions run;
  PredictCmdOptions predict;
  EvalCmdOptions eval;
  TraceCmdOptions traces;

  CLI::App *harvest_cmd = app.add_subcommand("harvest", "Rank proper-noun spans for a lexicon");
  AddCommonOptions(*harvest_cmd, common);
  harvest_cmd->add_option("--corpus", harvest.corpus, "Corpus with POS tags");
  harvest_cmd->add_option("--top-n", harvest.top_n, "Candidates to keep")->check(CLI::NonNegativeNumber);
  harvest_cmd->add_flag("--interactive", harvest.interactive, "Pick lexicon entries from stdin");
  harvest_cmd->add_option("--per-class", harvest.per_class, "Entries to pick per class");
  harvest_cmd->add_option("--classes", harvest.classes, "Classes offered in interactive mode")
      ->delimiter(',');
  harvest_cmd->add_option("--lexicon", harvest.seed_lexicon, "Existing lexicon to extend");

  CLI::App *annotate_cmd = app.add_subcommand("annotate", "Label a corpus with a lexicon");
  AddCommonOptions(*annotate_cmd, common);
  annotate_cmd->add_option("--corpus", annotate.corpus, "Corpus to annotate");
  annotate_cmd->add_option("--lexicon", annotate.lexicon, "Lexicon file");

  CLI::App *run_cmd = app.add_subcommand("run", "Run the self-training pipeline");
  AddCommonOptions(*run_cmd, common);
  run_cmd->add_option("--train", run.train, "Training corpus (labels are stripped)");
  run_cmd->add_option("--dev", run.dev, "Dev corpus scored after every iteration");
  run_cmd->add_option("--test", run.test, "Test corpus scored with the final model");
  run_cmd->add_option("--lexicon", run.lexicon, "Seed lexicon");
  run_cmd->add_option("--preset", run.preset, "1pct, 5pct or 100pct");

  CLI::App *predict_cmd = app.add_subcommand("predict", "Label a corpus with a trained model");
  AddCommonOptions(*predict_cmd, common);
  predict_cmd->add_option("--model", predict.model, "Model file written by run");
  predict_cmd->add_option("--corpus", predict.corpus, "Corpus to label");

  CLI::App *eval_cmd = app.add_subcommand("eval", "Entity-level scoring");
  AddCommonOptions(*eval_cmd, common);
  eval_cmd->add_option("--pred", eval.pred, "Predicted corpus");
  eval_cmd->add_option("--gold", eval.gold, "Gold corpus");
  eval_cmd->add_option("--mapping", eval.mapping,
                       "Label mapping file, or 'wnut' for the built-in table");
  eval_cmd->add_option("--pred-label-column", eval.pred_label_column,
                       "Label column of the prediction file");

  CLI::App *trace_cmd = app.add_subcommand("inspect-traces", "Show rule traces");
  AddCommonOptions(*trace_cmd, common);
  trace_cmd->add_option("--traces", traces.traces, "traces.jsonl (default: <out>/traces.jsonl)");
  trace_cmd->add_option("--rule", traces.rule, "Only this rule");
  trace_cmd->add_option("--sentence", traces.sentence, "Only this sentence id");
  trace_cmd->add_flag("--summary", traces.summary, "Counts per rule only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*harvest_cmd) return RunHarvest(common, harvest);
    if (*annotate_cmd) return RunAnnotate(common, annotate);
    if (*run_cmd) return RunRun(common, run);
    if (*predict_cmd) return RunPredict(common, predict);
    if (*eval_cmd) return RunEval(common, eval);
    if (*trace_cmd) return RunInspectTraces(common, traces);
  } catch (const UsageError &e) {
    fmt::print(stderr, "wsner: {}\n", e.what());
    return 2;
  } catch (const std::exception &e) {
    fmt::print(stderr, "wsner: error: {}\n", e.what());
    return 1;
  }
  return 2;
}
