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

#include "wsner/selftrain.h"

#include <algorithm>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "wsner/errors.h"
#include "wsner/eval.h"

namespace wsner {

using nlohmann::json;

namespace {

const std::set<std::string> kGlobalRules{"company_suffix", "loc_org_adjacency",
                                         "sports_score", "ospd"};

// Rethrows the active exception with `where` prefixed, keeping its type.
[[noreturn]] void RethrowWithContext(const std::string &where) {
  try {
    throw;
  } catch (const BackendError &e) {
    throw BackendError(where + ": " + e.what());
  } catch (const ConfigError &e) {
    throw ConfigError(where + ": " + e.what());
  } catch (const std::exception &e) {
    throw Error(where + ": " + e.what());
  }
}

bool HasEntity(const Sentence &sentence) {
  return std::any_of(sentence.tokens.begin(), sentence.tokens.end(),
                     [](const Token &token) { return !token.label.outside(); });
}

json DevScores(Tagger &tagger, const TaggerModel &model, std::span<const Document> dev) {
  const ScoreReport report = ScoreEntities(PredictDocuments(tagger, model, dev), dev);
  return json{{"precision", report.overall.precision()},
              {"recall", report.overall.recall()},
              {"f1", report.overall.f1()}};
}

}  // namespace

std::string_view StageKindName(StageKind kind) {
  switch (kind) {
    case StageKind::kBurnIn: return "burn_in";
    case StageKind::kIntermediate: return "intermediate";
    case StageKind::kBurnOut: return "burn_out";
  }
  return "burn_in";
}

std::vector<StageKind> StageSchedule::Expand() const {
  std::vector<StageKind> kinds(burn_in, StageKind::kBurnIn);
  kinds.insert(kinds.end(), intermediate, StageKind::kIntermediate);
  kinds.insert(kinds.end(), burn_out, StageKind::kBurnOut);
  return kinds;
}

void StageSchedule::Validate() const {
  if (burn_in < 0 || intermediate < 0 || burn_out < 0) {
    throw ConfigError("stage counts must be non-negative");
  }
}

PipelineConfig PipelineConfig::Preset(const std::string &name) {
  PipelineConfig config;
  if (name == "1pct") {
    config.schedule = {1, 2, 1};
    config.tagger.noise_q = 0.9;
    config.tagger.label_smoothing = 0.1;
  } else if (name == "5pct") {
    config.schedule = {1, 2, 0};
    config.tagger.noise_q = 0.7;
    config.tagger.label_smoothing = 0.1;
  } else if (name == "100pct") {
    config.schedule = {1, 1, 0};
    config.tagger.noise_q = 0.7;
    config.tagger.label_smoothing = 0.2;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected 1pct, 5pct or 100pct)");
  }
  return config;
}

void PipelineConfig::Validate() const {
  schedule.Validate();
  if (window.window < 1) throw ConfigError("window size must be at least 1");
  rules.Validate();
  tagger.Validate();
  pattern.Validate();
  if (mlm_top_k < 0) throw ConfigError("mlm_top_k must be non-negative");
  if (max_unlabeled && *max_unlabeled < 0) {
    throw ConfigError("max_unlabeled must be non-negative");
  }
}

json PipelineConfig::ToJson() const {
  json j{{"schedule",
          {{"burn_in", schedule.burn_in},
           {"intermediate", schedule.intermediate},
           {"burn_out", schedule.burn_out}}},
         {"iterations", schedule.total()},
         {"window",
          {{"size", window.window},
           {"nnps_walls", window.nnps_walls},
           {"admit_unlabeled", window.admit_unlabeled}}},
         {"window_filter", window_filter},
         {"thresholds", thresholds.values()},
         {"threshold_fallback", thresholds.fallback()},
         {"rules", rules.ToJson()},
         {"tagger", tagger.ToJson()},
         {"span_pattern",
          {{"proper_noun_tags", pattern.proper_noun_tags},
           {"preposition_tag", pattern.preposition_tag}}},
         {"seed", seed},
         {"mlm_top_k", mlm_top_k},
         {"keep_gold", keep_gold}};
  j["max_unlabeled"] = max_unlabeled ? json(*max_unlabeled) : json(nullptr);
  return j;
}

PipelineConfig PipelineConfig::FromJson(const json &j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  PipelineConfig config;
  std::optional<int> iterations;
  try {
    if (j.contains("preset")) config = Preset(j["preset"].get<std::string>());
    std::map<std::string, double> thresholds = config.thresholds.values();
    double fallback = config.thresholds.fallback();
    for (const auto &[key, value] : j.items()) {
      if (key == "preset") {
        continue;
      } else if (key == "schedule") {
        config.schedule.burn_in = value.value("burn_in", config.schedule.burn_in);
        config.schedule.intermediate =
            value.value("intermediate", config.schedule.intermediate);
        config.schedule.burn_out = value.value("burn_out", config.schedule.burn_out);
      } else if (key == "iterations") {
        iterations = value.get<int>();
      } else if (key == "window") {
        config.window.window = value.value("size", config.window.window);
        config.window.nnps_walls = value.value("nnps_walls", config.window.nnps_walls);
        config.window.admit_unlabeled =
            value.value("admit_unlabeled", config.window.admit_unlabeled);
      } else if (key == "window_filter") {
        config.window_filter = value.get<bool>();
      } else if (key == "thresholds") {
        for (const auto &[type, t] : value.items()) thresholds[type] = t.get<double>();
      } else if (key == "threshold_fallback") {
        fallback = value.get<double>();
      } else if (key == "rules") {
        config.rules = RuleConfig::FromJson(value);
      } else if (key == "tagger") {
        config.tagger = TaggerHyperparams::FromJson(value, config.tagger);
      } else if (key == "span_pattern") {
        config.pattern.proper_noun_tags =
            value.value("proper_noun_tags", config.pattern.proper_noun_tags);
        config.pattern.preposition_tag =
            value.value("preposition_tag", config.pattern.preposition_tag);
      } else if (key == "seed") {
        config.seed = value.get<uint64_t>();
      } else if (key == "mlm_top_k") {
        config.mlm_top_k = value.get<int>();
      } else if (key == "max_unlabeled") {
        if (value.is_null()) {
          config.max_unlabeled.reset();
        } else {
          config.max_unlabeled = value.get<int>();
        }
      } else if (key == "keep_gold") {
        config.keep_gold = value.get<bool>();
      } else {
        throw ConfigError("unknown run config key '" + key + "'");
      }
    }
    config.thresholds = ThresholdTable(thresholds, fallback);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  if (iterations && *iterations != config.schedule.total()) {
    throw ConfigError(fmt::format("iterations = {} but the stage counts sum to {}",
                                  *iterations, config.schedule.total()));
  }
  config.Validate();
  return config;
}

PipelineConfig PipelineConfig::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run config '" + path + "'");
  try {
    return FromJson(json::parse(in));
  } catch (const json::parse_error &e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

const Sentence &PipelineState::sentence(int id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(fmt::format("no sentence with id {}", id));
  return docs[it->second.first].sentences[it->second.second];
}

Sentence &PipelineState::sentence(int id) {
  return const_cast<Sentence &>(std::as_const(*this).sentence(id));
}

std::vector<Sentence> PipelineState::Collect(const std::set<int> &ids) const {
  std::vector<Sentence> sentences;
  sentences.reserve(ids.size());
  for (int id : ids) sentences.push_back(sentence(id));
  return sentences;
}

void PipelineState::Reindex() {
  index_.clear();
  for (size_t d = 0; d < docs.size(); ++d) {
    for (size_t s = 0; s < docs[d].sentences.size(); ++s) {
      if (!index_.emplace(docs[d].sentences[s].id, std::make_pair(d, s)).second) {
        throw Error(fmt::format("duplicate sentence id {}", docs[d].sentences[s].id));
      }
    }
  }
}

SelfTrainer::SelfTrainer(PipelineConfig config, MlmBackend *backend, Tagger &tagger)
    : config_(std::move(config)), backend_(backend), tagger_(tagger) {
  config_.Validate();
  if (backend_ == nullptr && config_.schedule.burn_in + config_.schedule.intermediate > 0) {
    throw ConfigError("burn-in and intermediate iterations need an MLM backend");
  }
}

PipelineState SelfTrainer::Initialize(std::span<const Document> corpus,
                                      const Lexicon &lexicon) {
  std::vector<Document> docs(corpus.begin(), corpus.end());
  if (!config_.keep_gold) {
    for (Document &doc : docs) StripLabels(doc);
  }
  LexiconAnnotation annotation = AnnotateWithLexicon(docs, lexicon);
  lexicon_stats_ = annotation.stats;

  PipelineState state;
  state.docs = std::move(annotation.docs);
  state.Reindex();
  state.labeled.insert(annotation.labeled.begin(), annotation.labeled.end());
  std::vector<int> unlabeled = annotation.unlabeled;
  if (config_.max_unlabeled && static_cast<int>(unlabeled.size()) > *config_.max_unlabeled) {
    std::mt19937_64 rng(config_.seed);
    std::shuffle(unlabeled.begin(), unlabeled.end(), rng);
    unlabeled.resize(*config_.max_unlabeled);
  }
  state.unlabeled.insert(unlabeled.begin(), unlabeled.end());

  if (backend_ != nullptr && config_.mlm_top_k > 0) {
    mlm_lexicon_ = FilterForMlm(lexicon, *backend_, config_.mlm_top_k);
  } else {
    mlm_lexicon_ = lexicon;
  }
  return state;
}

std::vector<TrainingSegment> SelfTrainer::TrainingMaterial(const PipelineState &state) const {
  std::vector<Sentence> sentences = state.Collect(state.labeled);
  sentences.insert(sentences.end(), state.augmented.begin(), state.augmented.end());
  return config_.window_filter ? FilterSentences(sentences, config_.window)
                               : WholeSentenceSegments(sentences);
}

TaggerModel SelfTrainer::Train(const PipelineState &state, int iteration) {
  std::vector<TrainingSegment> segments = TrainingMaterial(state);
  if (segments.empty()) throw Error("no labeled material to train on");
  TaggerHyperparams hparams = config_.tagger;
  hparams.seed = config_.seed + 0x9E3779B97F4A7C15ULL * static_cast<uint64_t>(iteration);
  return tagger_.Train(segments, hparams);
}

IterationReport SelfTrainer::RunIteration(PipelineState &state, StageKind stage) {
  const std::string where = fmt::format("iteration {} ({})", state.iteration + 1,
                                        StageKindName(stage));
  IterationReport report;
  report.stage = stage;
  try {
    json &m = report.metrics;
    m["iteration"] = state.iteration + 1;
    m["stage"] = StageKindName(stage);
    m["labeled_before"] = state.labeled.size();
    m["unlabeled_before"] = state.unlabeled.size();
    m["train_segments"] = TrainingMaterial(state).size();

    state.model = Train(state, state.iteration);
    const TaggerModel &model = *state.model;
    const std::vector<Sentence> unlabeled = state.Collect(state.unlabeled);
    std::vector<TaggerPrediction> predictions;
    if (!unlabeled.empty()) predictions = tagger_.Predict(model, unlabeled);

    std::vector<std::vector<EntitySpan>> proposals(unlabeled.size());
    int mlm_spans = 0, mlm_requests = 0;
    if (stage != StageKind::kBurnOut && !unlabeled.empty()) {
      MlmAnnotator annotator(mlm_lexicon_, config_.thresholds, *backend_, config_.pattern);
      proposals = annotator.Propose(unlabeled);
      mlm_requests = annotator.requests_issued();
      for (const auto &spans : proposals) mlm_spans += static_cast<int>(spans.size());
    }
    m["mlm_requests"] = mlm_requests;
    m["mlm_spans"] = mlm_spans;

    // Combine MLM and tagger labels into candidate sentences.
    std::map<int, Sentence> candidates;
    for (size_t i = 0; i < unlabeled.size(); ++i) {
      Sentence sentence = unlabeled[i];
      switch (stage) {
        case StageKind::kBurnIn:
          if (proposals[i].empty()) continue;
          for (const EntitySpan &span : predictions[i].spans) WriteSpan(sentence, span);
          for (const EntitySpan &span : proposals[i]) WriteSpan(sentence, span);
          break;
        case StageKind::kIntermediate:
          for (const EntitySpan &span : proposals[i]) WriteSpan(sentence, span);
          for (const EntitySpan &span : predictions[i].spans) WriteSpan(sentence, span);
          if (sentence.labels() == unlabeled[i].labels()) continue;
          break;
        case StageKind::kBurnOut:
          sentence = ApplyPrediction(sentence, predictions[i]);
          break;
      }
      candidates.emplace(sentence.id, std::move(sentence));
    }
    m["candidates"] = candidates.size();

    size_t new_augmented = 0;
    if (stage != StageKind::kBurnOut && !candidates.empty()) {
      RuleConfig rules = config_.rules;
      if (stage == StageKind::kBurnIn) {
        std::erase_if(rules.order,
                      [](const std::string &rule) { return kGlobalRules.count(rule) == 0; });
      } else {
        rules.seed_sources.erase(LabelSource::kMlm);
      }
      int next_id = 0;
      for (const Document &doc : state.docs) {
        for (const Sentence &sentence : doc.sentences) next_id = std::max(next_id, sentence.id);
      }
      for (const Sentence &sentence : state.augmented) next_id = std::max(next_id, sentence.id);

      std::set<int> mutable_ids;
      for (const auto &[id, sentence] : candidates) mutable_ids.insert(id);
      SieveContext context;
      context.mutable_sentences = &mutable_ids;
      context.tagger = &tagger_;
      context.model = &model;
      context.next_augmented_id = next_id + 1;
      for (const Document &doc : state.docs) {
        Document view{doc.id, {}};
        for (const Sentence &sentence : doc.sentences) {
          auto it = candidates.find(sentence.id);
          if (it != candidates.end()) {
            view.sentences.push_back(it->second);
          } else if (state.labeled.count(sentence.id) > 0) {
            view.sentences.push_back(sentence);
          }
        }
        if (std::none_of(view.sentences.begin(), view.sentences.end(),
                         [&](const Sentence &s) { return mutable_ids.count(s.id) > 0; })) {
          continue;
        }
        RuleResult result = ApplySieve(view, rules, context);
        for (Sentence &sentence : result.document.sentences) {
          if (mutable_ids.count(sentence.id) > 0) candidates[sentence.id] = std::move(sentence);
        }
        for (RuleTrace &trace : result.traces) report.traces.push_back(std::move(trace));
        new_augmented += result.augmented.size();
        for (Sentence &sentence : result.augmented) {
          state.augmented.push_back(std::move(sentence));
        }
      }
    }

    for (auto &[id, sentence] : candidates) {
      if (stage != StageKind::kBurnOut && !HasEntity(sentence)) continue;
      state.sentence(id) = std::move(sentence);
      state.unlabeled.erase(id);
      state.labeled.insert(id);
      report.harvested.push_back(id);
    }

    std::map<std::string, int> trace_counts;
    for (const RuleTrace &trace : report.traces) ++trace_counts[trace.rule];
    m["harvested"] = report.harvested.size();
    m["labeled"] = state.labeled.size();
    m["unlabeled"] = state.unlabeled.size();
    m["augmented_new"] = new_augmented;
    m["augmented_total"] = state.augmented.size();
    m["traces"] = trace_counts;
  } catch (...) {
    RethrowWithContext(where);
  }
  ++state.iteration;
  return report;
}

PipelineResult RunPipeline(std::span<const Document> corpus, const Lexicon &lexicon,
                           const PipelineConfig &config, MlmBackend *backend,
                           Tagger &tagger, std::span<const Document> dev,
                           const std::function<void(const json &)> &on_metrics) {
  PipelineResult result;
  auto emit = [&](json record) {
    if (on_metrics) on_metrics(record);
    result.metrics.push_back(std::move(record));
  };

  SelfTrainer trainer(config, backend, tagger);
  try {
    result.state = trainer.Initialize(corpus, lexicon);
  } catch (...) {
    RethrowWithContext("lexicon annotation");
  }
  const AnnotationStats &stats = trainer.lexicon_stats();
  emit(json{{"iteration", 0},
            {"stage", "lexicon"},
            {"labeled", result.state.labeled.size()},
            {"unlabeled", result.state.unlabeled.size()},
            {"lexicon_entities", stats.matched_entities},
            {"lexicon_tokens", stats.matched_tokens},
            {"lexicon_entities_per_class", stats.entities_per_class},
            {"mlm_lexicon_size", trainer.mlm_lexicon().size()}});

  for (StageKind stage : config.schedule.Expand()) {
    IterationReport report = trainer.RunIteration(result.state, stage);
    if (!dev.empty()) {
      try {
        report.metrics["dev"] = DevScores(tagger, *result.state.model, dev);
      } catch (...) {
        RethrowWithContext(fmt::format("dev scoring after iteration {}",
                                       result.state.iteration));
      }
    }
    emit(std::move(report.metrics));
    for (RuleTrace &trace : report.traces) result.traces.push_back(std::move(trace));
  }

  json final_record{{"iteration", result.state.iteration + 1},
                    {"stage", "final"},
                    {"labeled", result.state.labeled.size()},
                    {"unlabeled", result.state.unlabeled.size()},
                    {"augmented_total", result.state.augmented.size()}};
  try {
    result.model = trainer.Train(result.state, result.state.iteration);
    result.state.model = result.model;
    if (!dev.empty()) final_record["dev"] = DevScores(tagger, result.model, dev);
  } catch (...) {
    RethrowWithContext("final training");
  }
  emit(std::move(final_record));
  return result;
}

std::vector<Document> PredictDocuments(Tagger &tagger, const TaggerModel &model,
                                       std::span<const Document> docs) {
  std::vector<Document> result(docs.begin(), docs.end());
  for (Document &doc : result) {
    if (doc.sentences.empty()) continue;
    std::vector<TaggerPrediction> predictions = tagger.Predict(model, doc.sentences);
    for (size_t i = 0; i < doc.sentences.size(); ++i) {
      doc.sentences[i] = ApplyPrediction(doc.sentences[i], predictions[i]);
    }
  }
  return result;
}

}  // namespace wsner
