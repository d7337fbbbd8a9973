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

#include "wsner/mlm_heuristic.h"

#include <algorithm>

#include "wsner/errors.h"

namespace wsner {

ThresholdTable::ThresholdTable(std::map<std::string, double> values, double fallback)
    : values_(std::move(values)), fallback_(fallback) {
  for (const auto &[type, value] : values_) {
    if (!(value >= 0.0 && value <= 1.0)) {
      throw ConfigError("threshold for " + type + " outside [0, 1]");
    }
  }
  if (!(fallback_ >= 0.0 && fallback_ <= 1.0)) {
    throw ConfigError("fallback threshold outside [0, 1]");
  }
}

ThresholdTable ThresholdTable::Defaults() {
  return ThresholdTable({{"ORG", 0.28}, {"PER", 0.2}, {"LOC", 0.1}, {"MISC", 0.05}});
}

double ThresholdTable::For(const std::string &type) const {
  auto it = values_.find(type);
  return it == values_.end() ? fallback_ : it->second;
}

ClozeRequest BuildClozeRequest(const Sentence &sentence, TokenRange span,
                               const Lexicon &mlm_lexicon) {
  ClozeRequest request;
  request.tokens = sentence.words();
  request.span = span;
  const size_t length = static_cast<size_t>(span.second - span.first);
  for (const auto &[type, entries] : mlm_lexicon.classes()) {
    for (const LexiconEntry &entry : entries) {
      if (entry.words.size() == length) request.candidates.push_back({type, entry.words});
    }
  }
  return request;
}

std::vector<ClassScore> ScoresFromProbabilities(
    const ClozeRequest &request, std::span<const CandidateProbs> probs) {
  std::map<std::string, ClassScore> best;
  for (size_t c = 0; c < request.candidates.size(); ++c) {
    if (!probs[c].eligible) continue;
    const ClozeCandidate &candidate = request.candidates[c];
    auto [it, inserted] =
        best.try_emplace(candidate.type, ClassScore{candidate.type, probs[c].mean,
                                                    candidate.words});
    if (inserted) continue;
    ClassScore &current = it->second;
    // Ties go to the lexicographically smaller exemplar so the result does
    // not depend on exemplar order.
    if (probs[c].mean > current.score ||
        (probs[c].mean == current.score && candidate.words < current.best_exemplar)) {
      current.score = probs[c].mean;
      current.best_exemplar = candidate.words;
    }
  }
  std::vector<ClassScore> scores;
  for (auto &[_, score] : best) scores.push_back(std::move(score));
  std::stable_sort(scores.begin(), scores.end(),
                   [](const ClassScore &a, const ClassScore &b) {
                     return a.score > b.score;
                   });
  return scores;
}

std::vector<ClassScore> ScoreSpan(const Sentence &sentence, TokenRange span,
                                  const Lexicon &mlm_lexicon, MlmBackend &backend) {
  ClozeRequest request = BuildClozeRequest(sentence, span, mlm_lexicon);
  if (request.candidates.empty()) return {};
  std::vector<CandidateProbs> probs = MaskFillProbabilities(backend, request);
  return ScoresFromProbabilities(request, probs);
}

std::optional<SpanDecision> ClassifySpan(std::span<const ClassScore> scores,
                                         const ThresholdTable &thresholds) {
  if (scores.empty()) return std::nullopt;
  const ClassScore *first = &scores[0];
  const ClassScore *second = nullptr;
  for (const ClassScore &score : scores.subspan(1)) {
    if (score.score > first->score) {
      second = first;
      first = &score;
    } else if (second == nullptr || score.score > second->score) {
      second = &score;
    }
  }
  const double runner_up = second == nullptr ? 0.0 : second->score;
  const double margin = first->score - runner_up;
  if (!(margin > thresholds.For(first->type))) return std::nullopt;
  return SpanDecision{first->type, first->score, margin};
}

MlmAnnotator::MlmAnnotator(const Lexicon &mlm_lexicon, ThresholdTable thresholds,
                           MlmBackend &backend, SpanPattern pattern)
    : lexicon_(mlm_lexicon),
      thresholds_(std::move(thresholds)),
      backend_(backend),
      pattern_(std::move(pattern)) {
  pattern_.Validate();
}

std::vector<std::vector<EntitySpan>> MlmAnnotator::Propose(
    std::span<const Sentence> sentences) {
  struct Pending {
    size_t sentence;
    TokenRange range;
  };
  std::vector<ClozeRequest> requests;
  std::vector<Pending> pending;
  for (size_t s = 0; s < sentences.size(); ++s) {
    const Sentence &sentence = sentences[s];
    if (sentence.tokens.empty()) continue;
    for (const TokenRange &range : DetectSpans(sentence.pos_tags(), pattern_)) {
      bool protected_token = false;
      for (int i = range.first; i < range.second; ++i) {
        const LabelSource source = sentence.tokens[i].source;
        if (source == LabelSource::kGold || source == LabelSource::kLexicon) {
          protected_token = true;
        }
      }
      if (protected_token) continue;
      ClozeRequest request = BuildClozeRequest(sentence, range, lexicon_);
      if (request.candidates.empty()) continue;
      requests.push_back(std::move(request));
      pending.push_back({s, range});
    }
  }
  requests_issued_ += static_cast<int>(requests.size());

  std::vector<std::vector<EntitySpan>> proposals(sentences.size());
  if (requests.empty()) return proposals;
  std::vector<std::vector<CandidateProbs>> probs =
      MaskFillProbabilities(backend_, requests);
  for (size_t r = 0; r < requests.size(); ++r) {
    std::vector<ClassScore> scores = ScoresFromProbabilities(requests[r], probs[r]);
    std::optional<SpanDecision> decision = ClassifySpan(scores, thresholds_);
    if (!decision) continue;
    const Pending &p = pending[r];
    proposals[p.sentence].push_back(EntitySpan{sentences[p.sentence].id, p.range.first,
                                               p.range.second, decision->type,
                                               LabelSource::kMlm, decision->score});
  }
  return proposals;
}

MlmAnnotation AnnotateSentenceMlm(const Sentence &sentence,
                                  const Lexicon &mlm_lexicon,
                                  const ThresholdTable &thresholds,
                                  MlmBackend &backend, const SpanPattern &pattern) {
  MlmAnnotator annotator(mlm_lexicon, thresholds, backend, pattern);
  std::vector<std::vector<EntitySpan>> proposals =
      annotator.Propose(std::span<const Sentence>(&sentence, 1));
  MlmAnnotation result{sentence, false};
  for (const EntitySpan &span : proposals.front()) WriteSpan(result.sentence, span);
  result.changed = result.sentence.labels() != sentence.labels();
  return result;
}

}  // namespace wsner
