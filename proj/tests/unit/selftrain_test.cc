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

#include <sstream>

#include "doctest.h"
#include "synthetic.h"
#include "wsner/errors.h"
#include "wsner/perceptron_tagger.h"
#include "wsner/selftrain.h"

namespace wsner {
namespace {

using nlohmann::json;

const std::vector<std::string> kClasses{"LOC", "MISC", "ORG", "PER"};

Sentence Tagged(int id, const std::string &words, const std::string &tags) {
  std::istringstream w(words), t(tags);
  Sentence sentence{id, {}};
  std::string a, b;
  while (w >> a && t >> b) sentence.tokens.push_back(Token{a, b});
  return sentence;
}

testing::SyntheticCorpus SmallCorpus(uint64_t seed = 2026) {
  testing::SyntheticOptions options;
  options.train_sentences = 240;
  options.test_sentences = 60;
  options.vocabulary_per_class = 60;
  options.seed = seed;
  return testing::GenerateSynthetic(options);
}

PipelineConfig FastConfig() {
  PipelineConfig config;
  config.tagger.epochs = 3;
  return config;
}

TEST_CASE("schedules expand stage by stage") {
  StageSchedule schedule;
  CHECK(schedule.total() == 4);
  CHECK(schedule.Expand() == std::vector<StageKind>{StageKind::kBurnIn, StageKind::kIntermediate,
                                                    StageKind::kIntermediate, StageKind::kBurnOut});
  schedule.burn_out = -1;
  CHECK_THROWS_AS(schedule.Validate(), ConfigError);
  CHECK(StageKindName(StageKind::kIntermediate) == "intermediate");
}

TEST_CASE("presets carry the published hyperparameters") {
  const PipelineConfig one = PipelineConfig::Preset("1pct");
  CHECK(one.schedule.burn_in == 1);
  CHECK(one.schedule.intermediate == 2);
  CHECK(one.schedule.burn_out == 1);
  CHECK(one.tagger.noise_q == 0.9);
  CHECK(one.tagger.label_smoothing == 0.1);
  CHECK(one.window.window == 5);
  CHECK(one.rules.threshold == 0.9);
  CHECK(one.tagger.batch_size == 16);
  CHECK(one.tagger.learning_rate == 1e-5);
  const PipelineConfig five = PipelineConfig::Preset("5pct");
  CHECK(five.schedule.total() == 3);
  CHECK(five.schedule.burn_out == 0);
  CHECK(five.tagger.noise_q == 0.7);
  const PipelineConfig full = PipelineConfig::Preset("100pct");
  CHECK(full.schedule.total() == 2);
  CHECK(full.tagger.label_smoothing == 0.2);
  CHECK_THROWS_AS(PipelineConfig::Preset("50pct"), ConfigError);
}

TEST_CASE("run configs round-trip and reject mistakes") {
  PipelineConfig config = PipelineConfig::Preset("5pct");
  config.seed = 99;
  config.max_unlabeled = 10;
  config.window.window = 3;
  CHECK(PipelineConfig::FromJson(config.ToJson()).ToJson() == config.ToJson());

  const PipelineConfig preset = PipelineConfig::FromJson({{"preset", "5pct"}, {"seed", 4}});
  CHECK(preset.schedule.intermediate == 2);
  CHECK(preset.seed == 4);
  CHECK_THROWS_AS(PipelineConfig::FromJson({{"sede", 4}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::FromJson({{"iterations", 7}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::FromJson({{"window", {{"size", 0}}}}), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::FromJson({{"rules", {{"order", {"nope"}}}}}), ConfigError);
}

TEST_CASE("MLM stages need a backend") {
  PerceptronTagger tagger(kClasses);
  CHECK_THROWS_AS(SelfTrainer(PipelineConfig{}, nullptr, tagger), ConfigError);
  PipelineConfig burn_out_only;
  burn_out_only.schedule = {0, 0, 1};
  CHECK_NOTHROW(SelfTrainer(burn_out_only, nullptr, tagger));
}

TEST_CASE("an empty U is a fixed point") {
  Lexicon lexicon;
  lexicon.Add("PER", "Clinton");
  const std::vector<Document> corpus{
      {"d", {Tagged(0, "Clinton said .", "NNP VBD ."), Tagged(1, "Clinton left .", "NNP VBD .")}}};
  StubMlmBackend backend({});
  PerceptronTagger tagger(kClasses);
  SelfTrainer trainer(FastConfig(), &backend, tagger);
  PipelineState state = trainer.Initialize(corpus, lexicon);
  CHECK(state.unlabeled.empty());
  const auto docs = state.docs;
  const auto labeled = state.labeled;
  for (StageKind stage : {StageKind::kBurnIn, StageKind::kIntermediate, StageKind::kBurnOut}) {
    const IterationReport report = trainer.RunIteration(state, stage);
    CHECK(report.harvested.empty());
    CHECK(report.traces.empty());
    CHECK(state.docs == docs);
    CHECK(state.labeled == labeled);
    CHECK(state.model.has_value());
  }
  CHECK(state.iteration == 3);
}

TEST_CASE("burn-in harvests exactly the sentences the MLM labels") {
  Lexicon lexicon;
  lexicon.Add("PER", "Clinton");
  const std::vector<Document> corpus{
      {"d",
       {Tagged(0, "Clinton said .", "NNP VBD ."), Tagged(1, "Rubin said .", "NNP VBD ."),
        Tagged(2, "Lebed left .", "NNP VBD ."), Tagged(3, "then Yeltsin spoke .", "RB NNP VBD ."),
        Tagged(4, "it rained .", "PRP VBD ."), Tagged(5, "the dog barked .", "DT NN VBD .")}}};
  StubMlmConfig mlm;
  mlm.fixed = {{"Clinton", {0.9}}};
  StubMlmBackend backend(mlm);
  PerceptronTagger tagger(kClasses);
  SelfTrainer trainer(FastConfig(), &backend, tagger);
  PipelineState state = trainer.Initialize(corpus, lexicon);
  REQUIRE(state.labeled == std::set<int>{0});
  REQUIRE(state.unlabeled.size() == 5);

  const IterationReport report = trainer.RunIteration(state, StageKind::kBurnIn);
  CHECK(report.harvested == std::vector<int>{1, 2, 3});
  CHECK(state.labeled == std::set<int>{0, 1, 2, 3});
  CHECK(state.unlabeled == std::set<int>{4, 5});
  CHECK(report.metrics["mlm_spans"] == 3);
  const Token &yeltsin = state.sentence(3).tokens[1];
  CHECK(yeltsin.label == BioLabel::Begin("PER"));
  CHECK(yeltsin.source == LabelSource::kMlm);
  CHECK(state.sentence(0).tokens[0].source == LabelSource::kLexicon);
}

TEST_CASE("gold sentences without entities stay labeled") {
  Lexicon lexicon;
  lexicon.Add("PER", "Clinton");
  Sentence gold = Tagged(0, "Rubin said .", "NNP VBD .");
  for (Token &token : gold.tokens) token.source = LabelSource::kGold;
  const std::vector<Document> corpus{{"d", {gold, Tagged(1, "Clinton said .", "NNP VBD .")}}};
  StubMlmBackend backend({});
  PerceptronTagger tagger(kClasses);
  PipelineConfig config = FastConfig();
  config.keep_gold = true;
  SelfTrainer trainer(config, &backend, tagger);
  PipelineState state = trainer.Initialize(corpus, lexicon);
  CHECK(state.labeled == std::set<int>{0, 1});
  trainer.RunIteration(state, StageKind::kBurnOut);
  CHECK(state.sentence(0) == gold);
}

struct Snapshot {
  std::set<int> labeled, unlabeled;
  std::vector<Document> docs;
};

TEST_CASE("the staged pipeline keeps its invariants") {
  const testing::SyntheticCorpus corpus = SmallCorpus();
  StubMlmBackend backend(corpus.mlm);
  PerceptronTagger tagger(corpus.classes);
  SelfTrainer trainer(FastConfig(), &backend, tagger);
  PipelineState state = trainer.Initialize(corpus.train, corpus.lexicon);
  const size_t total = state.labeled.size() + state.unlabeled.size();
  const std::vector<Document> initial = state.docs;

  for (StageKind stage : PipelineConfig{}.schedule.Expand()) {
    const Snapshot before{state.labeled, state.unlabeled, state.docs};
    const IterationReport report = trainer.RunIteration(state, stage);
    CAPTURE(StageKindName(stage));

    for (int id : state.labeled) CHECK(state.unlabeled.count(id) == 0);
    CHECK(state.labeled.size() + state.unlabeled.size() == total);
    for (int id : before.labeled) CHECK(state.labeled.count(id) == 1);
    for (int id : report.harvested) {
      CHECK(before.unlabeled.count(id) == 1);
      if (stage != StageKind::kBurnOut) {
        PipelineState old;
        old.docs = before.docs;
        old.Reindex();
        CHECK(old.sentence(id).labels() != state.sentence(id).labels());
      }
    }
    for (const RuleTrace &trace : report.traces) {
      if (stage == StageKind::kBurnIn) {
        CHECK(trace.rule != "multi_mention");
        CHECK(trace.rule != "affix_strip");
      }
      CHECK(before.unlabeled.count(trace.sentence_id) == 1);
    }
    if (stage == StageKind::kBurnOut) {
      CHECK(report.metrics["mlm_requests"] == 0);
      CHECK(state.unlabeled.empty());
    }
  }
  // Lexicon labels survive every stage.
  for (size_t d = 0; d < initial.size(); ++d) {
    for (size_t s = 0; s < initial[d].sentences.size(); ++s) {
      const Sentence &a = initial[d].sentences[s];
      const Sentence &b = state.docs[d].sentences[s];
      for (int i = 0; i < a.size(); ++i) {
        if (a.tokens[i].source == LabelSource::kLexicon) CHECK(b.tokens[i] == a.tokens[i]);
      }
    }
  }
}

TEST_CASE("zero iterations trains once on the lexicon-annotated data") {
  const testing::SyntheticCorpus corpus = SmallCorpus();
  PerceptronTagger tagger(corpus.classes);
  PipelineConfig config = FastConfig();
  config.schedule = {0, 0, 0};
  const PipelineResult result = RunPipeline(corpus.train, corpus.lexicon, config, nullptr, tagger);
  REQUIRE(result.metrics.size() == 2);
  CHECK(result.metrics[0]["stage"] == "lexicon");
  CHECK(result.metrics[1]["stage"] == "final");
  CHECK(result.traces.empty());

  SelfTrainer trainer(config, nullptr, tagger);
  const PipelineState state = trainer.Initialize(corpus.train, corpus.lexicon);
  CHECK(trainer.Train(state, 0) == result.model);
  CHECK(result.state.labeled == state.labeled);
}

TEST_CASE("runs are deterministic and report dev scores") {
  const testing::SyntheticCorpus corpus = SmallCorpus(7);
  std::vector<std::vector<json>> logs;
  std::vector<std::string> blobs;
  for (int run = 0; run < 2; ++run) {
    StubMlmBackend backend(corpus.mlm);
    PerceptronTagger tagger(corpus.classes);
    std::vector<json> streamed;
    const PipelineResult result =
        RunPipeline(corpus.train, corpus.lexicon, FastConfig(), &backend, tagger, corpus.test,
                    [&](const json &record) { streamed.push_back(record); });
    CHECK(streamed == result.metrics);
    logs.push_back(result.metrics);
    blobs.push_back(result.model.blob);
  }
  CHECK(logs[0] == logs[1]);
  CHECK(blobs[0] == blobs[1]);
  REQUIRE(logs[0].size() == 6);
  CHECK(logs[0][1]["stage"] == "burn_in");
  CHECK(logs[0][1].contains("dev"));
  CHECK(logs[0][5]["dev"]["f1"].get<double>() > 0.0);
}

TEST_CASE("unlabeled data can be subsampled") {
  const testing::SyntheticCorpus corpus = SmallCorpus();
  PerceptronTagger tagger(corpus.classes);
  PipelineConfig config = FastConfig();
  config.max_unlabeled = 10;
  StubMlmBackend backend(corpus.mlm);
  SelfTrainer trainer(config, &backend, tagger);
  CHECK(trainer.Initialize(corpus.train, corpus.lexicon).unlabeled.size() == 10);
}

TEST_CASE("failures name the iteration and keep their type") {
  class FailingBackend : public StubMlmBackend {
   public:
    FailingBackend() : StubMlmBackend({}) {}
    std::vector<FillResult> Fill(const ClozeRequest &) override {
      throw BackendError("connection reset");
    }
  } backend;
  const testing::SyntheticCorpus corpus = SmallCorpus();
  PerceptronTagger tagger(corpus.classes);
  try {
    RunPipeline(corpus.train, corpus.lexicon, FastConfig(), &backend, tagger);
    FAIL("expected a backend error");
  } catch (const BackendError &e) {
    CHECK(std::string(e.what()).find("iteration 1 (burn_in)") != std::string::npos);
    CHECK(std::string(e.what()).find("connection reset") != std::string::npos);
  }
}

}  // namespace
}  // namespace wsner
