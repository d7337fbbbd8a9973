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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "scorer_fixture.h"
#include "synthetic.h"
#include "wsner/errors.h"
#include "wsner/eval.h"

namespace wsner {
namespace {

double Round2(double value) { return std::round(value * 100.0) / 100.0; }

Sentence Labeled(int id, const std::vector<std::pair<std::string, std::string>> &rows) {
  Sentence sentence{id, {}};
  for (const auto &[text, label] : rows) {
    Token token{text, "NNP"};
    token.label = BioLabel::Parse(label);
    sentence.tokens.push_back(token);
  }
  return sentence;
}

TEST_CASE("the scorer reproduces the hand-computed fixture") {
  const std::vector<Document> gold{testing::ScorerFixtureDocument(1)};
  const std::vector<Document> pred{testing::ScorerFixtureDocument(2)};
  REQUIRE(gold[0].sentences.size() == 20);
  const ScoreReport report = ScoreEntities(pred, gold);
  for (const auto &[name, expected] : testing::ScorerFixtureExpected()) {
    CAPTURE(name);
    const EntityCounts &counts = name == "overall" ? report.overall : report.per_class.at(name);
    CHECK(counts.gold == expected.gold);
    CHECK(counts.predicted == expected.predicted);
    CHECK(counts.correct == expected.correct);
    CHECK(Round2(counts.precision()) == expected.precision);
    CHECK(Round2(counts.recall()) == expected.recall);
    CHECK(Round2(counts.f1()) == expected.f1);
  }
  CHECK(report.ToRecords().size() == 5);
  CHECK(report.ToRecords().back()["class"] == "overall");
  CHECK(report.ToTable().find("50.98") != std::string::npos);
}

TEST_CASE("chunks follow conlleval: a stray I- opens a chunk") {
  const std::vector<BioLabel> labels{BioLabel::Inside("ORG"), BioLabel::Inside("LOC"),
                                     BioLabel::Inside("LOC"), BioLabel::Begin("LOC"),
                                     BioLabel::Outside(), BioLabel::Inside("PER")};
  const std::vector<EntitySpan> chunks = ConllChunks(labels, 3);
  REQUIRE(chunks.size() == 4);
  CHECK(chunks[0].type == "ORG");
  CHECK((chunks[1].start == 1 && chunks[1].end == 3));
  CHECK((chunks[2].start == 3 && chunks[2].end == 4));
  CHECK((chunks[3].start == 5 && chunks[3].end == 6));
  CHECK(chunks[3].sentence_id == 3);
}

TEST_CASE("a wrong class counts once as spurious and once as missed") {
  const std::vector<Document> gold{{"d", {Labeled(0, {{"Honda", "B-ORG"}})}}};
  const std::vector<Document> pred{{"d", {Labeled(0, {{"Honda", "B-LOC"}})}}};
  const ScoreReport report = ScoreEntities(pred, gold);
  CHECK(report.per_class.at("ORG").gold == 1);
  CHECK(report.per_class.at("ORG").predicted == 0);
  CHECK(report.per_class.at("LOC").predicted == 1);
  CHECK(report.overall.correct == 0);
  CHECK(report.overall.f1() == 0.0);
}

TEST_CASE("property: self-scoring is perfect and document order does not matter") {
  const testing::SyntheticCorpus corpus = [] {
    testing::SyntheticOptions options;
    options.train_sentences = 200;
    options.test_sentences = 0;
    return testing::GenerateSynthetic(options);
  }();
  const ScoreReport self = ScoreEntities(corpus.train, corpus.train);
  CHECK(self.overall.gold > 0);
  CHECK(self.overall.f1() == 100.0);

  std::mt19937_64 rng(8);
  std::vector<Document> pred = corpus.train;
  for (Document &doc : pred) {
    for (Sentence &sentence : doc.sentences) {
      for (Token &token : sentence.tokens) {
        if (rng() % 7 == 0) token.label = BioLabel::Outside();
        if (rng() % 11 == 0) token.label = BioLabel::Begin("MISC");
      }
    }
  }
  const ScoreReport base = ScoreEntities(pred, corpus.train);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<size_t> order(pred.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Document> p, g;
    for (size_t i : order) {
      p.push_back(pred[i]);
      g.push_back(corpus.train[i]);
    }
    const ScoreReport shuffled = ScoreEntities(p, g);
    CHECK(shuffled.overall.correct == base.overall.correct);
    CHECK(shuffled.overall.predicted == base.overall.predicted);
  }
  for (const auto &[type, counts] : base.per_class) {
    CHECK(counts.correct <= std::min(counts.gold, counts.predicted));
    const double p = counts.precision(), r = counts.recall();
    CHECK(counts.f1() == doctest::Approx(p + r > 0 ? 2 * p * r / (p + r) : 0.0));
  }
}

TEST_CASE("misaligned inputs name the first divergent position") {
  const std::vector<Document> gold{{"d", {Labeled(0, {{"a", "O"}, {"b", "O"}})}}};
  std::vector<Document> pred{{"d", {Labeled(0, {{"a", "O"}, {"c", "O"}})}}};
  try {
    ScoreEntities(pred, gold);
    FAIL("expected an error");
  } catch (const Error &e) {
    CHECK(std::string(e.what()).find("sentence 0, token 1") != std::string::npos);
  }
  pred = {{"d", {Labeled(0, {{"a", "O"}})}}};
  CHECK_THROWS_AS(ScoreEntities(pred, gold), Error);
  CHECK_THROWS_AS(ScoreEntities(std::vector<Document>{}, gold), Error);
}

TEST_CASE("supervision degree counts annotated entities against gold") {
  std::vector<Document> gold(1);
  std::vector<Sentence> labeled;
  for (int i = 0; i < 50; ++i) {
    gold[0].sentences.push_back(
        Labeled(i, {{"A", "B-PER"}, {"x", "O"}, {"B", "B-LOC"}, {"C", "I-LOC"}}));
  }
  for (int i = 0; i < 10; ++i) labeled.push_back(Labeled(i, {{"A", "B-PER"}, {"x", "O"}}));
  const SupervisionDegree degree = ComputeSupervisionDegree(labeled, gold);
  CHECK(degree.gold_entities == 100);
  CHECK(degree.annotated_entities == 10);
  CHECK(degree.labeled_tokens == 10);
  CHECK(degree.percent == 10.0);
  CHECK(ComputeSupervisionDegree({}, {}).percent == 0.0);
}

TEST_CASE("WNUT classes map onto CoNLL classes") {
  const std::vector<Document> docs{
      {"d", {Labeled(0, {{"Beatles", "B-group"}, {"sang", "O"}, {"Yesterday", "B-creative-work"}}),
             Labeled(1, {{"iPhone", "B-product"}, {"X", "I-product"}, {"Bob", "B-person"}})}}};
  const std::vector<Document> mapped = MapLabels(docs, WnutToConllMapping());
  CHECK(mapped[0].sentences[0].labels() ==
        std::vector<BioLabel>{BioLabel::Begin("ORG"), BioLabel::Outside(), BioLabel::Begin("MISC")});
  CHECK(mapped[0].sentences[1].labels() ==
        std::vector<BioLabel>{BioLabel::Begin("MISC"), BioLabel::Inside("MISC"),
                              BioLabel::Begin("PER")});
  CHECK(WnutToConllMapping().at("corporation") == "ORG");
  CHECK(WnutToConllMapping().at("location") == "LOC");

  const LabelMapping identity{{"group", "group"}, {"creative-work", "creative-work"},
                              {"product", "product"}, {"person", "person"}};
  CHECK(MapLabels(docs, identity) == docs);
  CHECK_THROWS_AS(MapLabels(docs, LabelMapping{{"group", "ORG"}}), Error);

  const LabelMapping drop{{"group", ""}, {"creative-work", "MISC"}, {"product", ""},
                          {"person", "PER"}};
  CHECK(MapLabels(docs, drop)[0].sentences[1].labels() ==
        std::vector<BioLabel>{BioLabel::Outside(), BioLabel::Outside(), BioLabel::Begin("PER")});
}

TEST_CASE("mappings load from tab-separated files") {
  const auto path = std::filesystem::temp_directory_path() / "wsner_mapping_test.tsv";
  {
    std::ofstream out(path);
    out << "# source\ttarget\ngroup\tORG\nevent\tO\n";
  }
  const LabelMapping mapping = LoadLabelMapping(path.string());
  CHECK(mapping.at("group") == "ORG");
  CHECK(mapping.at("event").empty());
  {
    std::ofstream out(path);
    out << "group\tORG\ngroup\tLOC\n";
  }
  CHECK_THROWS_AS(LoadLabelMapping(path.string()), ParseError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(LoadLabelMapping(path.string()), Error);
}

TEST_CASE("external tag sequences are padded or truncated to the sentence") {
  const std::vector<BioLabel> three{BioLabel::Begin("PER"), BioLabel::Inside("PER"),
                                    BioLabel::Outside()};
  const auto padded = AlignLength(three, 5);
  CHECK(padded.size() == 5);
  CHECK(padded[3] == BioLabel::Outside());
  CHECK(padded[4] == BioLabel::Outside());
  CHECK(std::equal(three.begin(), three.end(), padded.begin()));
  CHECK(AlignLength(padded, 3) == three);
  CHECK(AlignLength(three, 3) == three);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = rng() % 10;
    CHECK(AlignLength(std::vector<BioLabel>(rng() % 10, BioLabel::Begin("X")), n).size() == n);
  }
}

}  // namespace
}  // namespace wsner
