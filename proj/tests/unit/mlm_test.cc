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

#include <algorithm>
#include <map>
#include <random>
#include <thread>

#include "channel_pair.h"
#include "doctest.h"
#include "wsner/errors.h"
#include "wsner/lexicon.h"
#include "wsner/mlm_backend.h"
#include "wsner/mlm_heuristic.h"

namespace wsner {
namespace {

using testing::MakeChannelPair;

Sentence Tagged(std::initializer_list<std::pair<const char *, const char *>> tokens) {
  Sentence sentence{0, {}};
  for (const auto &[text, pos] : tokens) sentence.tokens.push_back(Token{text, pos});
  return sentence;
}

ClozeRequest Request(std::vector<std::string> tokens, TokenRange span,
                     std::vector<ClozeCandidate> candidates) {
  return ClozeRequest{std::move(tokens), span, std::move(candidates)};
}

// Probability of a word depends on the word and the masked position only,
// through a table the test can read directly.
class TableBackend : public MlmBackend {
 public:
  std::map<std::pair<std::string, int>, double> table;

  std::vector<FillResult> Fill(const ClozeRequest &request) override {
    std::vector<FillResult> results;
    for (const ClozeCandidate &candidate : request.candidates) {
      FillResult result;
      if (static_cast<int>(candidate.words.size()) == request.mask_count()) {
        result.eligible = true;
        for (size_t i = 0; i < candidate.words.size(); ++i) {
          result.token_probs.push_back(table.at({candidate.words[i], static_cast<int>(i)}));
        }
      }
      results.push_back(result);
    }
    return results;
  }
  std::vector<int> SubwordCounts(std::span<const std::string> words) override {
    return std::vector<int>(words.size(), 1);
  }
};

TEST_CASE("stub echoes fixed probabilities and averages them") {
  StubMlmConfig config;
  config.fixed = {{"Clinton", {0.9}}, {"Wasim Akram", {0.8, 0.4}}};
  StubMlmBackend backend(config);
  auto one = MaskFillProbabilities(
      backend, Request({"Mr", "X", "said"}, {1, 2}, {{"PER", {"Clinton"}}}));
  CHECK(one[0].mean == doctest::Approx(0.9));
  auto two = MaskFillProbabilities(
      backend, Request({"X", "Y", "said"}, {0, 2},
                       {{"PER", {"Wasim", "Akram"}}, {"PER", {"Clinton"}}}));
  CHECK(two[0].eligible);
  CHECK(two[0].mean == doctest::Approx(0.6));
  CHECK_FALSE(two[1].eligible);
}

TEST_CASE("property: stub probabilities are in range, sized by the mask, and reproducible") {
  StubMlmConfig config;
  config.default_prob = 0.5;
  config.jitter = 0.6;
  config.seed = 41;
  StubMlmBackend backend(config);
  StubMlmBackend twin(config);
  config.seed = 42;
  StubMlmBackend other(config);
  std::mt19937_64 rng(5);
  bool differs = false;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + rng() % 8;
    std::vector<std::string> tokens;
    for (int i = 0; i < n; ++i) tokens.push_back("w" + std::to_string(rng() % 50));
    const int start = rng() % n;
    const int end = start + 1 + rng() % (n - start);
    std::vector<ClozeCandidate> candidates;
    for (int c = 0; c < 4; ++c) {
      std::vector<std::string> words(1 + rng() % 3);
      for (std::string &w : words) w = "e" + std::to_string(rng() % 30);
      candidates.push_back({"PER", words});
    }
    const ClozeRequest request = Request(tokens, {start, end}, candidates);
    const auto results = backend.Fill(request);
    REQUIRE(results.size() == candidates.size());
    for (size_t c = 0; c < results.size(); ++c) {
      CHECK(results[c].eligible ==
            (static_cast<int>(candidates[c].words.size()) == end - start));
      if (!results[c].eligible) continue;
      CHECK(static_cast<int>(results[c].token_probs.size()) == end - start);
      for (double p : results[c].token_probs) CHECK((p >= 0.0 && p <= 1.0));
    }
    const auto again = twin.Fill(request);
    for (size_t c = 0; c < results.size(); ++c) {
      CHECK(again[c].token_probs == results[c].token_probs);
    }
    const auto reseeded = other.Fill(request);
    for (size_t c = 0; c < results.size(); ++c) {
      differs = differs || reseeded[c].token_probs != results[c].token_probs;
    }
  }
  CHECK(differs);
}

TEST_CASE("backend output is validated") {
  class BadBackend : public TableBackend {
   public:
    std::vector<FillResult> reply;
    std::vector<FillResult> Fill(const ClozeRequest &) override { return reply; }
  } backend;
  const ClozeRequest request = Request({"a", "b"}, {0, 1}, {{"PER", {"x"}}});
  backend.reply = {};
  CHECK_THROWS_AS(MaskFillProbabilities(backend, request), BackendError);
  backend.reply = {FillResult{true, {1.5}}};
  CHECK_THROWS_AS(MaskFillProbabilities(backend, request), BackendError);
  backend.reply = {FillResult{true, {0.5, 0.5}}};
  CHECK_THROWS_AS(MaskFillProbabilities(backend, request), BackendError);
  CHECK_THROWS_AS(MaskFillProbabilities(backend, Request({"a"}, {0, 2}, {})), Error);
  CHECK_THROWS_AS(MaskFillProbabilities(backend, Request({"a"}, {0, 1}, {{"PER", {}}})),
                  Error);
}

TEST_CASE("span scores take the best exemplar of each class") {
  Lexicon lexicon;
  lexicon.Add("PER", "Clinton");
  lexicon.Add("PER", "Yeltsin");
  lexicon.Add("ORG", "NATO");
  lexicon.Add("LOC", "NEW YORK");
  StubMlmConfig config;
  config.fixed = {{"Clinton", {0.7}}, {"Yeltsin", {0.9}}, {"NATO", {0.5}}};
  StubMlmBackend backend(config);
  const Sentence sentence = Tagged({{"Lebed", "NNP"}, {"said", "VBD"}});
  const auto scores = ScoreSpan(sentence, {0, 1}, lexicon, backend);
  REQUIRE(scores.size() == 2);
  CHECK(scores[0].type == "PER");
  CHECK(scores[0].score == doctest::Approx(0.9));
  CHECK(scores[0].best_exemplar == std::vector<std::string>{"Yeltsin"});
  CHECK(scores[1].type == "ORG");
  CHECK(scores[1].score == doctest::Approx(0.5));
}

TEST_CASE("property: span scores equal exhaustive recomputation and ignore exemplar order") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<std::string> classes{"LOC", "MISC", "ORG", "PER"};
  for (int trial = 0; trial < 300; ++trial) {
    TableBackend backend;
    std::vector<std::pair<std::string, std::vector<std::string>>> entries;
    for (int e = 0; e < 12; ++e) {
      std::vector<std::string> words(1 + rng() % 3);
      for (std::string &w : words) w = "x" + std::to_string(rng() % 20);
      entries.emplace_back(classes[rng() % 4], words);
    }
    for (int w = 0; w < 20; ++w) {
      for (int i = 0; i < 3; ++i) backend.table[{"x" + std::to_string(w), i}] = unit(rng);
    }
    Lexicon lexicon, shuffled;
    for (const auto &[type, words] : entries) lexicon.Add(type, LexiconEntry{words, 0});
    std::shuffle(entries.begin(), entries.end(), rng);
    for (const auto &[type, words] : entries) shuffled.Add(type, LexiconEntry{words, 0});

    const Sentence sentence = Tagged({{"the", "DT"}, {"A", "NNP"}, {"B", "NNP"}, {"C", "NNP"}});
    const int length = 1 + rng() % 3;
    const auto scores = ScoreSpan(sentence, {1, 1 + length}, lexicon, backend);

    std::map<std::string, double> oracle;
    for (const auto &[type, list] : lexicon.classes()) {
      for (const LexiconEntry &entry : list) {
        if (static_cast<int>(entry.words.size()) != length) continue;
        double sum = 0.0;
        for (int i = 0; i < length; ++i) sum += backend.table.at({entry.words[i], i});
        const double mean = sum / length;
        auto [it, inserted] = oracle.emplace(type, mean);
        if (!inserted) it->second = std::max(it->second, mean);
      }
    }
    REQUIRE(scores.size() == oracle.size());
    for (const ClassScore &score : scores) {
      CHECK(std::abs(score.score - oracle.at(score.type)) <= 1e-12);
    }
    for (size_t i = 1; i < scores.size(); ++i) CHECK(scores[i - 1].score >= scores[i].score);
    CHECK(ScoreSpan(sentence, {1, 1 + length}, shuffled, backend) == scores);
  }
}

TEST_CASE("classification needs a margin strictly above the class threshold") {
  const ThresholdTable table = ThresholdTable::Defaults();
  CHECK(table.For("ORG") == 0.28);
  CHECK(table.For("PER") == 0.2);
  CHECK(table.For("LOC") == 0.1);
  CHECK(table.For("MISC") == 0.05);

  std::vector<ClassScore> scores{{"ORG", 0.60, {}}, {"LOC", 0.30, {}}};
  auto decision = ClassifySpan(scores, table);
  REQUIRE(decision);
  CHECK(decision->type == "ORG");
  CHECK(decision->margin == doctest::Approx(0.30));

  scores[0].score = 0.50;
  CHECK_FALSE(ClassifySpan(scores, table));

  const std::vector<ClassScore> single{{"MISC", 0.06, {}}};
  CHECK(ClassifySpan(single, table)->type == "MISC");

  // A lone class scores its margin against zero, so these margins equal the
  // thresholds exactly.
  for (const auto &[type, threshold] : table.values()) {
    const std::vector<ClassScore> at{{type, threshold, {}}};
    CHECK_FALSE(ClassifySpan(at, table));
    const std::vector<ClassScore> above{{type, std::nextafter(threshold, 1.0), {}}};
    CHECK(ClassifySpan(above, table));
  }

  const std::vector<ClassScore> tie{{"PER", 0.7, {}}, {"LOC", 0.7, {}}};
  CHECK_FALSE(ClassifySpan(tie, ThresholdTable({}, 0.0)));
  CHECK_FALSE(ClassifySpan(std::vector<ClassScore>{}, table));
  CHECK_THROWS_AS(ThresholdTable({{"PER", 1.5}}), ConfigError);
}

TEST_CASE("property: shifting both top scores leaves the decision unchanged") {
  std::mt19937_64 rng(3);
  // Scores on a 1/64 grid keep the shifted margins exact.
  const ThresholdTable table({{"ORG", 0.25}, {"PER", 0.125}, {"LOC", 0.0625}}, 0.0);
  const std::vector<std::string> classes{"ORG", "PER", "LOC"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<ClassScore> scores;
    for (const std::string &type : classes) scores.push_back({type, (rng() % 40) / 64.0, {}});
    const double shift = (rng() % 20) / 64.0;
    std::vector<ClassScore> shifted = scores;
    for (ClassScore &score : shifted) score.score += shift;
    const auto a = ClassifySpan(scores, table);
    const auto b = ClassifySpan(shifted, table);
    REQUIRE(a.has_value() == b.has_value());
    if (a) {
      CHECK(a->type == b->type);
      CHECK(a->margin == b->margin);
    }
  }
}

TEST_CASE("annotation writes accepted spans and skips protected ones") {
  Lexicon lexicon;
  lexicon.Add("PER", "Clinton");
  lexicon.Add("LOC", "Japan");
  StubMlmConfig config;
  config.fixed = {{"Clinton", {0.9}}, {"Japan", {0.1}}};
  StubMlmBackend backend(config);
  const ThresholdTable table = ThresholdTable::Defaults();

  Sentence sentence = Tagged({{"Lebed", "NNP"}, {"met", "VBD"}, {"Rubin", "NNP"}});
  auto result = AnnotateSentenceMlm(sentence, lexicon, table, backend);
  CHECK(result.changed);
  CHECK(result.sentence.tokens[0].label == BioLabel::Begin("PER"));
  CHECK(result.sentence.tokens[0].source == LabelSource::kMlm);
  CHECK(result.sentence.tokens[0].confidence == doctest::Approx(0.9));
  CHECK(result.sentence.tokens[2].label == BioLabel::Begin("PER"));

  sentence.tokens[0].label = BioLabel::Begin("LOC");
  sentence.tokens[0].source = LabelSource::kLexicon;
  result = AnnotateSentenceMlm(sentence, lexicon, table, backend);
  CHECK(result.sentence.tokens[0].label == BioLabel::Begin("LOC"));
  CHECK(result.sentence.tokens[0].source == LabelSource::kLexicon);
  CHECK(result.sentence.tokens[2].source == LabelSource::kMlm);

  const Sentence plain = Tagged({{"it", "PRP"}, {"rained", "VBD"}});
  result = AnnotateSentenceMlm(plain, lexicon, table, backend);
  CHECK_FALSE(result.changed);
  CHECK(result.sentence == plain);
}

TEST_CASE("cloze requests carry only same-length exemplars") {
  Lexicon lexicon;
  lexicon.Add("LOC", "NEW YORK");
  lexicon.Add("LOC", "Spain");
  lexicon.Add("PER", "Wasim Akram");
  const Sentence sentence = Tagged({{"Hansa", "NNP"}, {"Rostock", "NNP"}});
  const ClozeRequest request = BuildClozeRequest(sentence, {0, 2}, lexicon);
  REQUIRE(request.candidates.size() == 2);
  CHECK(request.candidates[0].type == "LOC");
  CHECK(request.candidates[1].type == "PER");
}

struct Served {
  explicit Served(MlmBackend &backend, int protocol = kWireProtocolVersion)
      : pair(MakeChannelPair()),
        thread([&backend, protocol, server = pair.server.get()] {
          ServeMlm(backend, *server, protocol);
        }) {}
  ~Served() {
    pair.client.reset();
    thread.join();
  }
  testing::ChannelPair pair;
  std::thread thread;
};

TEST_CASE("the line protocol returns what the backend computes") {
  StubMlmConfig config;
  config.default_prob = 0.4;
  config.jitter = 0.3;
  config.seed = 9;
  config.subwords = {{"Akram", 3}};
  StubMlmBackend stub(config);
  Served served(stub);
  LineMlmBackend remote(std::move(served.pair.client), 3);

  std::vector<ClozeRequest> requests;
  for (int i = 0; i < 10; ++i) {
    requests.push_back(Request({"w" + std::to_string(i), "b", "c"}, {0, 1 + i % 2},
                               {{"PER", {"x"}}, {"ORG", {"y", "z"}}}));
  }
  const auto remote_results = remote.FillBatch(requests);
  REQUIRE(remote_results.size() == requests.size());
  for (size_t i = 0; i < requests.size(); ++i) {
    const auto local = stub.Fill(requests[i]);
    for (size_t c = 0; c < local.size(); ++c) {
      CHECK(remote_results[i][c].eligible == local[c].eligible);
      CHECK(remote_results[i][c].token_probs == local[c].token_probs);
    }
  }
  const std::vector<std::string> words{"Wasim", "Akram"};
  CHECK(remote.SubwordCounts(words) == std::vector<int>{1, 3});
  CHECK_THROWS_AS(remote.Fill(Request({"a"}, {0, 1}, {{"PER", {}}})), BackendError);
  // The channel stays usable after a rejected request.
  CHECK(remote.Fill(requests[0]).size() == 2);
}

TEST_CASE("a protocol version mismatch is refused at handshake") {
  StubMlmBackend stub({});
  Served served(stub, kWireProtocolVersion + 1);
  CHECK_THROWS_AS(LineMlmBackend(std::move(served.pair.client)), BackendError);
}

TEST_CASE("stub configuration survives JSON") {
  StubMlmConfig config;
  config.default_prob = 0.2;
  config.fixed = {{"NATO", {0.3}}};
  config.word_classes = {{"NATO", "ORG"}};
  config.affinity = {{"ORG", {{"ORG", 0.6}}}};
  config.jitter = 0.01;
  config.seed = 4;
  config.subwords = {{"Akram", 2}};
  const StubMlmConfig back = StubMlmConfig::FromJson(config.ToJson());
  CHECK(back.ToJson() == config.ToJson());
}

}  // namespace
}  // namespace wsner
