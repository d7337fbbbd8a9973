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


// Drives the wsner binaries as subprocesses.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "synthetic.h"
#include "wsner/corpus.h"

namespace wsner {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const std::string kWsner = std::string(WSNER_BIN_DIR) + "/wsner";
const std::string kStubMlm = std::string(WSNER_BIN_DIR) + "/wsner-stub-mlm";
const std::string kStubTagger = std::string(WSNER_BIN_DIR) + "/wsner-stub-tagger";

struct Result {
  int status = -1;
  std::string out;
};

// Runs `command` through the shell with stderr folded into the captured text.
Result Run(const std::string &command) {
  Result result;
  FILE *pipe = popen((command + " 2>&1").c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buffer[4096];
  while (size_t n = fread(buffer, 1, sizeof(buffer), pipe)) result.out.append(buffer, n);
  const int raw = pclose(pipe);
  result.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return result;
}

std::string Slurp(const fs::path &path) {
  std::ifstream in(path);
  std::stringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string Quote(const fs::path &path) { return "'" + path.string() + "'"; }

// A small synthetic corpus on disk, shared by the cases below.
class Workspace {
 public:
  Workspace() {
    dir_ = fs::temp_directory_path() /
           ("wsner_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    testing::SyntheticOptions options;
    options.train_sentences = 240;
    options.test_sentences = 80;
    options.vocabulary_per_class = 60;
    testing::SyntheticCorpus corpus = testing::GenerateSynthetic(options);
    WriteCorpusFile(train().string(), corpus.train, ColumnConfig{});
    WriteCorpusFile(test().string(), corpus.test, ColumnConfig{});
    corpus.lexicon.Save(lexicon().string());
    std::ofstream(mlm_config()) << corpus.mlm.ToJson().dump();
  }
  ~Workspace() { fs::remove_all(dir_); }

  fs::path dir() const { return dir_; }
  fs::path train() const { return dir_ / "train.conll"; }
  fs::path test() const { return dir_ / "test.conll"; }
  fs::path lexicon() const { return dir_ / "lexicon.txt"; }
  fs::path mlm_config() const { return dir_ / "mlm.json"; }

 private:
  static inline int counter_ = 0;
  fs::path dir_;
};

TEST_CASE("run with a stub MLM writes every artifact") {
  Workspace ws;
  const fs::path out = ws.dir() / "out";
  const Result r = Run(kWsner + " run --train " + Quote(ws.train()) + " --test " +
                       Quote(ws.test()) + " --lexicon " + Quote(ws.lexicon()) +
                       " --mlm-endpoint stub:" + ws.mlm_config().string() + " --out " +
                       Quote(out));
  INFO(r.out);
  REQUIRE(r.status == 0);
  for (const char *name : {"metrics.jsonl", "traces.jsonl", "model.wsner", "config.json",
                           "labeled.conll", "test_predictions.conll", "test_report.txt",
                           "test_report.jsonl", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(out / name), name);
  }
  // The lexicon pass, one record per iteration of the 1/2/1 schedule, the
  // final model.
  std::istringstream metrics(Slurp(out / "metrics.jsonl"));
  int records = 0;
  for (std::string line; std::getline(metrics, line);) {
    if (line.empty()) continue;
    ++records;
    CHECK(json::parse(line).is_object());
  }
  CHECK(records == 6);
  CHECK(r.out.find("overall") != std::string::npos);

  // The saved model predicts the test file; scoring it reproduces the report.
  const fs::path pred_dir = ws.dir() / "pred";
  const Result p = Run(kWsner + " predict --model " + Quote(out / "model.wsner") +
                       " --corpus " + Quote(ws.test()) + " --out " + Quote(pred_dir));
  INFO(p.out);
  REQUIRE(p.status == 0);
}

TEST_CASE("missing inputs and bad flags are usage errors") {
  Workspace ws;
  CHECK(Run(kWsner + " run --train " + Quote(ws.train()) + " --lexicon " +
            Quote(ws.dir() / "nope.txt") + " --mlm-endpoint stub:" +
            ws.mlm_config().string())
            .status == 2);
  CHECK(Run(kWsner + " run --train " + Quote(ws.train()) + " --lexicon " +
            Quote(ws.lexicon()))
            .status == 2);  // schedule needs an MLM endpoint
  CHECK(Run(kWsner + " frobnicate").status == 2);
  CHECK(Run(kWsner + " eval --pred " + Quote(ws.test())).status == 2);
}

TEST_CASE("dry run validates without writing") {
  Workspace ws;
  const fs::path out = ws.dir() / "dry";
  const Result r = Run(kWsner + " run --dry-run --train " + Quote(ws.train()) +
                       " --lexicon " + Quote(ws.lexicon()) + " --mlm-endpoint stub:" +
                       ws.mlm_config().string() + " --preset 5pct --out " + Quote(out));
  INFO(r.out);
  CHECK(r.status == 0);
  CHECK(r.out.find("dry run: config and inputs are valid") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("environment variables supply defaults and flags override them") {
  Workspace ws;
  const fs::path env_out = ws.dir() / "env_out";
  const fs::path flag_out = ws.dir() / "flag_out";
  const std::string base = "WSNER_OUT=" + Quote(env_out) + " WSNER_SEED=77 " + kWsner +
                           " annotate --corpus " + Quote(ws.train()) + " --lexicon " +
                           Quote(ws.lexicon());
  REQUIRE(Run(base).status == 0);
  CHECK(fs::exists(env_out / "annotated.conll"));
  CHECK(json::parse(Slurp(env_out / "manifest.json"))["seed"] == 77);
  REQUIRE(Run(base + " --out " + Quote(flag_out) + " --seed 5").status == 0);
  CHECK(json::parse(Slurp(flag_out / "manifest.json"))["seed"] == 5);

  // A dry run requested through the environment writes nothing.
  const fs::path dry = ws.dir() / "dry_env";
  CHECK(Run("WSNER_DRY_RUN=1 " + kWsner + " annotate --corpus " + Quote(ws.train()) +
            " --lexicon " + Quote(ws.lexicon()) + " --out " + Quote(dry))
            .status == 0);
  CHECK_FALSE(fs::exists(dry));
}

TEST_CASE("eval scores a file against itself perfectly and rejects misaligned input") {
  Workspace ws;
  const Result r = Run(kWsner + " eval --pred " + Quote(ws.test()) + " --gold " +
                       Quote(ws.test()) + " --out " + Quote(ws.dir() / "eval"));
  INFO(r.out);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("100.00") != std::string::npos);

  const Result bad = Run(kWsner + " eval --pred " + Quote(ws.train()) + " --gold " +
                         Quote(ws.test()) + " --out " + Quote(ws.dir() / "eval_bad"));
  CHECK(bad.status == 1);
}

TEST_CASE("interactive harvest reads decisions from stdin") {
  const fs::path dir = fs::temp_directory_path() / ("wsner_cli_harvest_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream corpus(dir / "raw.conll");
    for (int i = 0; i < 3; ++i) corpus << "Paris NNP\nis VBZ\nbig JJ\n\n";
    corpus << "Reuters NNP\nsaid VBD\n\n";
  }
  // Unlabeled text: no label column.
  std::ofstream(dir / "raw.json") << R"({"corpus": {"columns": {"label": null}}})";
  const Result r = Run("printf 'LOC\\nORG\\n' | " + kWsner + " harvest --interactive --config " +
                       Quote(dir / "raw.json") +
                       " --per-class 1 --classes LOC,ORG --corpus " +
                       Quote(dir / "raw.conll") + " --out " + Quote(dir / "out"));
  INFO(r.out);
  REQUIRE(r.status == 0);
  CHECK(fs::exists(dir / "out" / "candidates.tsv"));
  const std::string lexicon = Slurp(dir / "out" / "lexicon.txt");
  CHECK(lexicon.find("[LOC]") != std::string::npos);
  CHECK(lexicon.find("Paris") != std::string::npos);
  CHECK(lexicon.find("Reuters") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("run talks to plugin processes over the line protocol") {
  Workspace ws;
  const fs::path out = ws.dir() / "plugins";
  const std::string mlm = "exec:" + kStubMlm + " --config " + ws.mlm_config().string();
  const std::string tagger = "exec:" + kStubTagger + " --classes LOC,MISC,ORG,PER";
  const Result r = Run(kWsner + " run --train " + Quote(ws.train()) + " --lexicon " +
                       Quote(ws.lexicon()) + " --mlm-endpoint '" + mlm +
                       "' --tagger-endpoint '" + tagger + "' --out " + Quote(out));
  INFO(r.out);
  REQUIRE(r.status == 0);
  CHECK(fs::exists(out / "model.wsner"));
  CHECK(json::parse(Slurp(out / "manifest.json"))["tagger_endpoint"] == tagger);

  // A plugin announcing another protocol version is refused.
  const Result mismatch =
      Run(kWsner + " run --train " + Quote(ws.train()) + " --lexicon " + Quote(ws.lexicon()) +
          " --mlm-endpoint 'exec:" + kStubMlm + " --protocol 2 --config " +
          ws.mlm_config().string() + "' --out " + Quote(ws.dir() / "mismatch"));
  CHECK(mismatch.status == 1);
  CHECK(mismatch.out.find("protocol") != std::string::npos);
}

TEST_CASE("inspect-traces filters by rule") {
  Workspace ws;
  const fs::path out = ws.dir() / "out";
  REQUIRE(Run(kWsner + " run --train " + Quote(ws.train()) + " --lexicon " +
              Quote(ws.lexicon()) + " --mlm-endpoint stub:" + ws.mlm_config().string() +
              " --out " + Quote(out))
              .status == 0);
  const Result summary =
      Run(kWsner + " inspect-traces --summary --traces " + Quote(out / "traces.jsonl"));
  INFO(summary.out);
  CHECK(summary.status == 0);
  const Result filtered = Run(kWsner + " inspect-traces --rule no_such_rule --traces " +
                              Quote(out / "traces.jsonl"));
  CHECK(filtered.status == 0);
  CHECK(filtered.out.find("\"rule\"") == std::string::npos);
}

}  // namespace
}  // namespace wsner
