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

#ifndef WSNER_PERCEPTRON_TAGGER_H_
#define WSNER_PERCEPTRON_TAGGER_H_

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "wsner/tagger.h"

namespace wsner {

class PerceptronWeights;

// Averaged structured perceptron with first-order label transitions and
// Viterbi decoding constrained to valid BIO sequences.
//
// Features per token: word identity at offsets -2..+2, lowercased word,
// word shape at -1..+1, POS at -1..+1, prefixes and suffixes up to length
// 3, and a bias; the previous label enters through the transition weights.
//
// Span confidence is 2 * sigmoid(m / confidence_scale) - 1 where m is the
// smallest max-marginal score margin over the span's tokens, i.e. how much
// the best path loses if any token of the span is forced to another label.
class PerceptronTagger : public Tagger {
 public:
  explicit PerceptronTagger(std::vector<std::string> classes);
  ~PerceptronTagger() override;

  TaggerCapabilities Handshake() override;
  TaggerModel Train(std::span<const TrainingSegment> segments,
                    const TaggerHyperparams &hparams) override;
  std::vector<TaggerPrediction> Predict(const TaggerModel &model,
                                        std::span<const Sentence> sentences) override;
  using Tagger::Predict;

  static constexpr const char *kBackendName = "native-perceptron";

 private:
  std::shared_ptr<const PerceptronWeights> Load(const TaggerModel &model);

  std::vector<std::string> classes_;
  std::mutex cache_mutex_;
  std::string cached_blob_;
  std::shared_ptr<const PerceptronWeights> cached_weights_;
};

// Feature strings for token `index` of `tokens`; exposed for tests.
std::vector<std::string> ExtractFeatures(std::span<const Token> tokens, int index);

// Coarse orthographic shape: runs of upper/lower/digit/other collapse to
// one of X, x, d, or the character itself ("Walt-12" -> "Xx-d").
std::string WordShape(const std::string &word);

}  // namespace wsner

#endif  // WSNER_PERCEPTRON_TAGGER_H_
