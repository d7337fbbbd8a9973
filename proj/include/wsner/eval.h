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

#ifndef WSNER_EVAL_H_
#define WSNER_EVAL_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsner/corpus.h"

namespace wsner {

struct EntityCounts {
  int gold = 0;
  int predicted = 0;
  int correct = 0;

  // Percentages in [0, 100].
  double precision() const;
  double recall() const;
  double f1() const;
};

struct ScoreReport {
  std::map<std::string, EntityCounts> per_class;
  EntityCounts overall;

  // Fixed-width table in the style of conlleval's summary.
  std::string ToTable() const;
  // One record per class followed by an "overall" record.
  std::vector<nlohmann::json> ToRecords() const;
};

// Chunks as conlleval extracts them: an I-X that does not continue an X chunk
// opens a new one.
std::vector<EntitySpan> ConllChunks(std::span<const BioLabel> labels, int sentence_id = 0);

// Exact-match entity scoring, micro-averaged over all classes. Throws Error
// naming the first document, sentence and token where the two corpora stop
// lining up.
ScoreReport ScoreEntities(std::span<const Document> predicted,
                          std::span<const Document> gold);

struct SupervisionDegree {
  int annotated_entities = 0;
  int gold_entities = 0;
  int labeled_tokens = 0;
  // annotated_entities / gold_entities * 100, 0 without gold entities.
  double percent = 0.0;
};

// Counts entity spans of the sentences in `labeled` against every gold
// entity in `gold`.
SupervisionDegree ComputeSupervisionDegree(std::span<const Sentence> labeled,
                                           std::span<const Document> gold);

// Source class name to target class; an empty target maps to O.
using LabelMapping = std::map<std::string, std::string>;

// person, location, corporation, group, product and creative-work onto the
// four CoNLL classes.
const LabelMapping &WnutToConllMapping();

// Reads "source<TAB>target" lines; target "O" drops the class.
LabelMapping LoadLabelMapping(const std::string &path);

// Relabels every entity. Throws Error on a class missing from `mapping`.
std::vector<Document> MapLabels(std::span<const Document> docs, const LabelMapping &mapping);

// Pads with O or truncates on the right to exactly n tags.
std::vector<BioLabel> AlignLength(std::vector<BioLabel> tags, size_t n);

}  // namespace wsner

#endif  // WSNER_EVAL_H_
