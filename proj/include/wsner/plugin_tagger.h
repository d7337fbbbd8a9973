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

#ifndef WSNER_PLUGIN_TAGGER_H_
#define WSNER_PLUGIN_TAGGER_H_

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsner/line_channel.h"
#include "wsner/tagger.h"

namespace wsner {

// Tagger implemented by an external process speaking the tagger line
// protocol (docs/protocol.md). TRAIN and PREDICT stream one record per
// segment or sentence after a header record.
class PluginTagger : public Tagger {
 public:
  // Performs the handshake; throws BackendError on a protocol version
  // mismatch or when the plugin's class set differs from `classes`.
  PluginTagger(std::unique_ptr<LineChannel> channel, std::vector<std::string> classes);

  TaggerCapabilities Handshake() override;
  TaggerModel Train(std::span<const TrainingSegment> segments,
                    const TaggerHyperparams &hparams) override;
  std::vector<TaggerPrediction> Predict(const TaggerModel &model,
                                        std::span<const Sentence> sentences) override;
  using Tagger::Predict;

 private:
  nlohmann::json Call(const nlohmann::json &header,
                      const std::vector<nlohmann::json> &records);
  nlohmann::json Read();

  std::unique_ptr<LineChannel> channel_;
  std::vector<std::string> classes_;
  TaggerCapabilities capabilities_;
  int64_t next_id_ = 1;
};

// Checks a handshake reply against the expected protocol version and
// returns the capabilities it announces.
TaggerCapabilities ParseCapabilities(const nlohmann::json &hello);

// Server side of the tagger protocol backed by any Tagger. Trained models
// stay in server memory and are referenced over the wire as "mem:<n>".
void ServeTagger(Tagger &tagger, LineChannel &channel,
                 int protocol_version = kWireProtocolVersion, bool calibrated = true);

nlohmann::json SentenceToWire(const std::vector<Token> &tokens, bool with_labels);
nlohmann::json PredictionToWire(const TaggerPrediction &prediction);
TaggerPrediction PredictionFromWire(const nlohmann::json &json, int sentence_id,
                                    int length);

// "native" (or empty) gives a PerceptronTagger, anything else is opened with
// OpenEndpoint and wrapped in a PluginTagger.
std::unique_ptr<Tagger> OpenTagger(const std::string &endpoint,
                                   std::vector<std::string> classes);

}  // namespace wsner

#endif  // WSNER_PLUGIN_TAGGER_H_
