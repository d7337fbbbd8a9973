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

#ifndef WSNER_SELFTRAIN_H_
#define WSNER_SELFTRAIN_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wsner/corpus.h"
#include "wsner/lexicon.h"
#include "wsner/mlm_backend.h"
#include "wsner/mlm_heuristic.h"
#include "wsner/rules.h"
#include "wsner/span_detector.h"
#include "wsner/tagger.h"
#include "wsner/window_filter.h"

namespace wsner {

enum class StageKind { kBurnIn, kIntermediate, kBurnOut };

std::string_view StageKindName(StageKind kind);

struct StageSchedule {
  int burn_in = 1;
  int intermediate = 2;
  int burn_out = 1;

  int total() const { return burn_in + intermediate + burn_out; }
  // Burn-in iterations first, then intermediate, then burn-out.
  std::vector<StageKind> Expand() const;
  // Throws ConfigError on a negative count.
  void Validate() const;
};

struct PipelineConfig {
  StageSchedule schedule;
  WindowOptions window;
  // Train on whole labeled sentences instead of filtered windows when false.
  bool window_filter = true;
  ThresholdTable thresholds = ThresholdTable::Defaults();
  RuleConfig rules;
  TaggerHyperparams tagger;
  SpanPattern pattern;
  uint64_t seed = 13;
  // Exemplars per class kept for cloze scoring; 0 disables the filter.
  int mlm_top_k = 20;
  // Keep at most this many unlabeled sentences, sampled with `seed`.
  std::optional<int> max_unlabeled;
  // Keep labels present in the input as Gold instead of stripping them.
  bool keep_gold = false;

  // Table 11 settings: "1pct" (1/2/1, q 0.9, smoothing 0.1), "5pct"
  // (1/2/0, q 0.7, smoothing 0.1) and "100pct" (1/1/0, q 0.7, smoothing
  // 0.2). All use W 5, T 0.9, batch 16 and learning rate 1e-5.
  static PipelineConfig Preset(const std::string &name);

  void Validate() const;
  nlohmann::json ToJson() const;
  // Unknown keys are a ConfigError. A "preset" key selects the base config;
  // "iterations", when given, must equal the schedule total.
  static PipelineConfig FromJson(const nlohmann::json &json);
  static PipelineConfig Load(const std::string &path);
};

// Working state of a run. Sentence labels live in `docs`; `labeled` and
// `unlabeled` partition the ids of the sentences taking part.
struct PipelineState {
  std::vector<Document> docs;
  std::set<int> labeled;
  std::set<int> unlabeled;
  // Affix-stripped sentences added as extra training material.
  std::vector<Sentence> augmented;
  std::optional<TaggerModel> model;
  int iteration = 0;

  const Sentence &sentence(int id) const;
  Sentence &sentence(int id);
  std::vector<Sentence> Collect(const std::set<int> &ids) const;
  void Reindex();

 private:
  std::map<int, std::pair<size_t, size_t>> index_;
};

struct IterationReport {
  StageKind stage = StageKind::kBurnIn;
  std::vector<int> harvested;  // D, moved from U to L
  std::vector<RuleTrace> traces;
  nlohmann::json metrics;
};

class SelfTrainer {
 public:
  // `backend` may be null when the schedule has no burn-in or intermediate
  // iterations.
  SelfTrainer(PipelineConfig config, MlmBackend *backend, Tagger &tagger);

  // Strips input labels (unless keep_gold), annotates with `lexicon`, splits
  // L and U, subsamples U, and prepares the cloze lexicon.
  PipelineState Initialize(std::span<const Document> corpus, const Lexicon &lexicon);

  // Trains C_k on L, then labels U according to `stage` and moves the
  // harvested sentences to L.
  IterationReport RunIteration(PipelineState &state, StageKind stage);

  // Trains on the current L (window-filtered) plus augmented sentences.
  TaggerModel Train(const PipelineState &state, int iteration);

  const Lexicon &mlm_lexicon() const { return mlm_lexicon_; }
  const AnnotationStats &lexicon_stats() const { return lexicon_stats_; }

 private:
  std::vector<TrainingSegment> TrainingMaterial(const PipelineState &state) const;

  PipelineConfig config_;
  MlmBackend *backend_;
  Tagger &tagger_;
  Lexicon mlm_lexicon_;
  AnnotationStats lexicon_stats_;
};

struct PipelineResult {
  TaggerModel model;
  PipelineState state;
  std::vector<nlohmann::json> metrics;
  std::vector<RuleTrace> traces;
};

// Lexicon annotation, the stage schedule, then a final model trained on the
// grown L. Metric records are also passed to `on_metrics` as they are made.
// Errors are rethrown with the failing iteration and stage in the message.
PipelineResult RunPipeline(std::span<const Document> corpus, const Lexicon &lexicon,
                           const PipelineConfig &config, MlmBackend *backend,
                           Tagger &tagger, std::span<const Document> dev = {},
                           const std::function<void(const nlohmann::json &)> &on_metrics = {});

// Labels every sentence of `docs` with `model`.
std::vector<Document> PredictDocuments(Tagger &tagger, const TaggerModel &model,
                                       std::span<const Document> docs);

}  // namespace wsner

#endif  // WSNER_SELFTRAIN_H_
