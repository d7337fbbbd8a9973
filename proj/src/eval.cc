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

#include "wsner/eval.h"

#include <fstream>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "wsner/errors.h"

namespace wsner {

using nlohmann::json;

namespace {

double Ratio(int numerator, int denominator) {
  return denominator == 0 ? 0.0 : 100.0 * numerator / denominator;
}

void Count(const std::vector<EntitySpan> &predicted, const std::vector<EntitySpan> &gold,
           ScoreReport &report) {
  std::set<std::tuple<int, int, std::string>> gold_set;
  for (const EntitySpan &span : gold) {
    gold_set.emplace(span.start, span.end, span.type);
    ++report.per_class[span.type].gold;
    ++report.overall.gold;
  }
  for (const EntitySpan &span : predicted) {
    EntityCounts &counts = report.per_class[span.type];
    ++counts.predicted;
    ++report.overall.predicted;
    if (gold_set.count({span.start, span.end, span.type}) > 0) {
      ++counts.correct;
      ++report.overall.correct;
    }
  }
}

}  // namespace

double EntityCounts::precision() const { return Ratio(correct, predicted); }
double EntityCounts::recall() const { return Ratio(correct, gold); }

double EntityCounts::f1() const {
  const double p = precision(), r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

std::string ScoreReport::ToTable() const {
  std::string out = fmt::format("{:<10} {:>8} {:>8} {:>8} {:>6} {:>6} {:>6}\n", "class",
                                "prec", "rec", "f1", "gold", "pred", "corr");
  auto row = [&out](const std::string &name, const EntityCounts &c) {
    out += fmt::format("{:<10} {:>8.2f} {:>8.2f} {:>8.2f} {:>6} {:>6} {:>6}\n", name,
                       c.precision(), c.recall(), c.f1(), c.gold, c.predicted, c.correct);
  };
  for (const auto &[type, counts] : per_class) row(type, counts);
  row("overall", overall);
  return out;
}

std::vector<json> ScoreReport::ToRecords() const {
  std::vector<json> records;
  auto record = [](const std::string &name, const EntityCounts &c) {
    return json{{"class", name},          {"precision", c.precision()},
                {"recall", c.recall()},   {"f1", c.f1()},
                {"gold", c.gold},         {"predicted", c.predicted},
                {"correct", c.correct}};
  };
  for (const auto &[type, counts] : per_class) records.push_back(record(type, counts));
  records.push_back(record("overall", overall));
  return records;
}

std::vector<EntitySpan> ConllChunks(std::span<const BioLabel> labels, int sentence_id) {
  std::vector<EntitySpan> chunks;
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    const BioLabel &label = labels[i];
    if (label.outside()) continue;
    const bool continues = label.tag == BioTag::kInside && !chunks.empty() &&
                           chunks.back().end == i && chunks.back().type == label.type;
    if (continues) {
      chunks.back().end = i + 1;
    } else {
      chunks.push_back(
          EntitySpan{sentence_id, i, i + 1, label.type, LabelSource::kOutsideDefault, {}});
    }
  }
  return chunks;
}

ScoreReport ScoreEntities(std::span<const Document> predicted,
                          std::span<const Document> gold) {
  if (predicted.size() != gold.size()) {
    throw Error(fmt::format("prediction has {} documents, gold has {}", predicted.size(),
                            gold.size()));
  }
  ScoreReport report;
  for (size_t d = 0; d < gold.size(); ++d) {
    const auto &pred_sentences = predicted[d].sentences;
    const auto &gold_sentences = gold[d].sentences;
    if (pred_sentences.size() != gold_sentences.size()) {
      throw Error(fmt::format("document {} ({}): prediction has {} sentences, gold has {}",
                              d, gold[d].id, pred_sentences.size(), gold_sentences.size()));
    }
    for (size_t s = 0; s < gold_sentences.size(); ++s) {
      const Sentence &p = pred_sentences[s];
      const Sentence &g = gold_sentences[s];
      const int n = std::min(p.size(), g.size());
      for (int t = 0; t < n; ++t) {
        if (p.tokens[t].text != g.tokens[t].text) {
          throw Error(fmt::format(
              "document {}, sentence {}, token {}: prediction has '{}', gold has '{}'", d, s,
              t, p.tokens[t].text, g.tokens[t].text));
        }
      }
      if (p.size() != g.size()) {
        throw Error(fmt::format(
            "document {}, sentence {}, token {}: prediction has {} tokens, gold has {}", d, s,
            n, p.size(), g.size()));
      }
      const std::vector<BioLabel> pl = p.labels(), gl = g.labels();
      Count(ConllChunks(pl), ConllChunks(gl), report);
    }
  }
  return report;
}

SupervisionDegree ComputeSupervisionDegree(std::span<const Sentence> labeled,
                                           std::span<const Document> gold) {
  SupervisionDegree degree;
  for (const Sentence &sentence : labeled) {
    const std::vector<BioLabel> labels = sentence.labels();
    for (const EntitySpan &span : ConllChunks(labels)) {
      ++degree.annotated_entities;
      degree.labeled_tokens += span.length();
    }
  }
  for (const Document &doc : gold) {
    for (const Sentence &sentence : doc.sentences) {
      const std::vector<BioLabel> labels = sentence.labels();
      degree.gold_entities += static_cast<int>(ConllChunks(labels).size());
    }
  }
  degree.percent = Ratio(degree.annotated_entities, degree.gold_entities);
  return degree;
}

const LabelMapping &WnutToConllMapping() {
  static const LabelMapping mapping{{"person", "PER"},      {"location", "LOC"},
                                    {"corporation", "ORG"}, {"group", "ORG"},
                                    {"product", "MISC"},    {"creative-work", "MISC"}};
  return mapping;
}

LabelMapping LoadLabelMapping(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open label mapping " + path);
  LabelMapping mapping;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line[0] == '#') continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError(fmt::format("{}: expected source<TAB>target", path), line_number);
    }
    std::string target = line.substr(tab + 1);
    if (target == "O") target.clear();
    if (!mapping.emplace(line.substr(0, tab), target).second) {
      throw ParseError(fmt::format("{}: '{}' mapped twice", path, line.substr(0, tab)),
                       line_number);
    }
  }
  return mapping;
}

std::vector<Document> MapLabels(std::span<const Document> docs, const LabelMapping &mapping) {
  std::vector<Document> result(docs.begin(), docs.end());
  for (Document &doc : result) {
    for (Sentence &sentence : doc.sentences) {
      for (Token &token : sentence.tokens) {
        if (token.label.outside()) continue;
        auto it = mapping.find(token.label.type);
        if (it == mapping.end()) {
          throw Error(fmt::format("no mapping for class '{}' (sentence {})", token.label.type,
                                  sentence.id));
        }
      }
      // Map whole chunks so a class dropped to O takes all its tokens along.
      const std::vector<BioLabel> labels = sentence.labels();
      std::vector<EntitySpan> chunks = ConllChunks(labels, sentence.id);
      for (Token &token : sentence.tokens) token.label = BioLabel::Outside();
      for (const EntitySpan &chunk : chunks) {
        const std::string &target = mapping.at(chunk.type);
        if (target.empty()) continue;
        for (int i = chunk.start; i < chunk.end; ++i) {
          sentence.tokens[i].label =
              i == chunk.start ? BioLabel::Begin(target) : BioLabel::Inside(target);
        }
      }
    }
  }
  return result;
}

std::vector<BioLabel> AlignLength(std::vector<BioLabel> tags, size_t n) {
  tags.resize(n, BioLabel::Outside());
  return tags;
}

}  // namespace wsner
