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

#ifndef WSNER_MLM_HEURISTIC_H_
#define WSNER_MLM_HEURISTIC_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsner/corpus.h"
#include "wsner/lexicon.h"
#include "wsner/mlm_backend.h"
#include "wsner/span_detector.h"

namespace wsner {

// Cloze score of one class for one span: the best mean per-mask probability
// over the class's eligible exemplars.
struct ClassScore {
  std::string type;
  double score = 0.0;
  std::vector<std::string> best_exemplar;

  friend bool operator==(const ClassScore &, const ClassScore &) = default;
};

// Per-class margin a winning class must exceed over the runner-up.
class ThresholdTable {
 public:
  ThresholdTable() = default;
  explicit ThresholdTable(std::map<std::string, double> values,
                          double fallback = 0.0);

  // ORG 0.28, PER 0.2, LOC 0.1, MISC 0.05.
  static ThresholdTable Defaults();

  double For(const std::string &type) const;
  const std::map<std::string, double> &values() const { return values_; }
  double fallback() const { return fallback_; }

 private:
  std::map<std::string, double> values_;
  double fallback_ = 0.0;
};

// Request for `span` with every exemplar whose word count equals the span
// length. Exemplars are listed class by class in lexicon order.
ClozeRequest BuildClozeRequest(const Sentence &sentence, TokenRange span,
                               const Lexicon &mlm_lexicon);

// Max over eligible exemplars per class; classes without any eligible
// exemplar are omitted. Sorted by descending score, then class name.
std::vector<ClassScore> ScoresFromProbabilities(
    const ClozeRequest &request, std::span<const CandidateProbs> probs);

std::vector<ClassScore> ScoreSpan(const Sentence &sentence, TokenRange span,
                                  const Lexicon &mlm_lexicon, MlmBackend &backend);

struct SpanDecision {
  std::string type;
  double score = 0.0;
  double margin = 0.0;
};

// Accepts the top class l1 iff score(l1) - score(l2) > threshold(l1), where
// l2 is the runner-up (score 0 when l1 is alone). Exact ties abstain.
std::optional<SpanDecision> ClassifySpan(std::span<const ClassScore> scores,
                                         const ThresholdTable &thresholds);

// Detects, scores and classifies spans for a batch of sentences. Spans that
// touch a Gold- or Lexicon-sourced token are skipped. Accepted spans carry
// source kMlm and the winning score as confidence.
class MlmAnnotator {
 public:
  MlmAnnotator(const Lexicon &mlm_lexicon, ThresholdTable thresholds,
               MlmBackend &backend, SpanPattern pattern = {});

  std::vector<std::vector<EntitySpan>> Propose(std::span<const Sentence> sentences);

  int requests_issued() const { return requests_issued_; }

 private:
  const Lexicon &lexicon_;
  ThresholdTable thresholds_;
  MlmBackend &backend_;
  SpanPattern pattern_;
  int requests_issued_ = 0;
};

struct MlmAnnotation {
  Sentence sentence;
  bool changed = false;
};

// Writes every accepted span into a copy of the sentence.
MlmAnnotation AnnotateSentenceMlm(const Sentence &sentence,
                                  const Lexicon &mlm_lexicon,
                                  const ThresholdTable &thresholds,
                                  MlmBackend &backend,
                                  const SpanPattern &pattern = {});

}  // namespace wsner

#endif  // WSNER_MLM_HEURISTIC_H_
