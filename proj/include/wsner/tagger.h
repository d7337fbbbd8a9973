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

#ifndef WSNER_TAGGER_H_
#define WSNER_TAGGER_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsner/corpus.h"
#include "wsner/window_filter.h"

namespace wsner {

// Learning rate, batch size, q and label smoothing are consumed by plugin
// taggers only; the native perceptron is scale-invariant and uses epochs,
// seed and confidence_scale.
struct TaggerHyperparams {
  double learning_rate = 1e-5;
  int batch_size = 16;
  int epochs = 10;
  double noise_q = 0.9;
  double label_smoothing = 0.1;
  uint64_t seed = 13;
  // Score margin that maps to confidence tanh(1/2) in the native tagger.
  double confidence_scale = 1.0;

  // Throws ConfigError when a value is out of range.
  void Validate() const;
  nlohmann::json ToJson() const;
  static TaggerHyperparams FromJson(const nlohmann::json &json);
  static TaggerHyperparams FromJson(const nlohmann::json &json,
                                    const TaggerHyperparams &defaults);
};

struct TaggerPrediction {
  std::vector<BioLabel> labels;
  // One span per entity in `labels`, with source kTagger and a confidence.
  std::vector<EntitySpan> spans;
};

// A trained model. `blob` is opaque to everything but the tagger that made
// it: serialized weights for the native tagger, a model reference for
// plugins.
struct TaggerModel {
  std::string backend;
  std::vector<std::string> classes;
  std::string signature;
  std::string blob;

  void Save(const std::string &path) const;
  static TaggerModel Load(const std::string &path);

  friend bool operator==(const TaggerModel &, const TaggerModel &) = default;
};

struct TaggerCapabilities {
  int protocol_version = 0;
  std::string name;
  std::vector<std::string> classes;
  bool calibrated = false;
};

class Tagger {
 public:
  virtual ~Tagger() = default;

  virtual TaggerCapabilities Handshake() = 0;

  // Throws Error on an empty segment list or labels outside the class set.
  virtual TaggerModel Train(std::span<const TrainingSegment> segments,
                            const TaggerHyperparams &hparams) = 0;

  // Throws Error when the model's class set differs from the tagger's.
  virtual std::vector<TaggerPrediction> Predict(const TaggerModel &model,
                                                std::span<const Sentence> sentences) = 0;

  TaggerPrediction Predict(const TaggerModel &model, const Sentence &sentence);
};

// Checks that every label in `segments` belongs to `classes`.
void CheckSegmentLabels(std::span<const TrainingSegment> segments,
                        std::span<const std::string> classes);

// Writes a prediction into a copy of the sentence with source kTagger.
Sentence ApplyPrediction(const Sentence &sentence, const TaggerPrediction &prediction);

}  // namespace wsner

#endif  // WSNER_TAGGER_H_
