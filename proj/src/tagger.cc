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

#include "wsner/tagger.h"

#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "wsner/errors.h"

namespace wsner {

using nlohmann::json;

void TaggerHyperparams::Validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (!(noise_q > 0.0 && noise_q <= 1.0)) throw ConfigError("q must be in (0, 1]");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ConfigError("label smoothing must be in [0, 1)");
  }
  if (!(confidence_scale > 0.0)) throw ConfigError("confidence scale must be positive");
}

json TaggerHyperparams::ToJson() const {
  return json{{"learning_rate", learning_rate}, {"batch_size", batch_size},
              {"epochs", epochs},               {"q", noise_q},
              {"label_smoothing", label_smoothing}, {"seed", seed},
              {"confidence_scale", confidence_scale}};
}

TaggerHyperparams TaggerHyperparams::FromJson(const json &j) {
  return FromJson(j, TaggerHyperparams());
}

TaggerHyperparams TaggerHyperparams::FromJson(const json &j,
                                              const TaggerHyperparams &defaults) {
  TaggerHyperparams hp = defaults;
  try {
    hp.learning_rate = j.value("learning_rate", hp.learning_rate);
    hp.batch_size = j.value("batch_size", hp.batch_size);
    hp.epochs = j.value("epochs", hp.epochs);
    hp.noise_q = j.value("q", hp.noise_q);
    hp.label_smoothing = j.value("label_smoothing", hp.label_smoothing);
    hp.seed = j.value("seed", hp.seed);
    hp.confidence_scale = j.value("confidence_scale", hp.confidence_scale);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("invalid tagger hyperparameters: ") + e.what());
  }
  hp.Validate();
  return hp;
}

void TaggerModel::Save(const std::string &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file '" + path + "'");
  json header{{"format", "wsner-model"}, {"version", 1},
              {"backend", backend},      {"classes", classes},
              {"signature", signature},  {"blob_bytes", blob.size()}};
  out << header.dump() << '\n' << blob;
  if (!out) throw Error("write failed for '" + path + "'");
}

TaggerModel TaggerModel::Load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path + "'");
  std::string line;
  std::getline(in, line);
  TaggerModel model;
  size_t bytes = 0;
  try {
    json header = json::parse(line);
    if (header.value("format", std::string()) != "wsner-model") {
      throw Error("'" + path + "' is not a model file");
    }
    model.backend = header.at("backend").get<std::string>();
    model.classes = header.at("classes").get<std::vector<std::string>>();
    model.signature = header.at("signature").get<std::string>();
    bytes = header.at("blob_bytes").get<size_t>();
  } catch (const json::exception &e) {
    throw Error("corrupt model header in '" + path + "': " + e.what());
  }
  model.blob.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (model.blob.size() != bytes) {
    throw Error("truncated model file '" + path + "'");
  }
  return model;
}

TaggerPrediction Tagger::Predict(const TaggerModel &model, const Sentence &sentence) {
  return Predict(model, std::span<const Sentence>(&sentence, 1)).front();
}

void CheckSegmentLabels(std::span<const TrainingSegment> segments,
                        std::span<const std::string> classes) {
  std::set<std::string> known(classes.begin(), classes.end());
  for (const TrainingSegment &segment : segments) {
    for (const Token &token : segment.tokens) {
      if (!token.label.outside() && known.count(token.label.type) == 0) {
        throw Error("segment of sentence " + std::to_string(segment.sentence_id) +
                    " uses class '" + token.label.type + "' outside the class set");
      }
    }
  }
}

Sentence ApplyPrediction(const Sentence &sentence, const TaggerPrediction &prediction) {
  Sentence result = sentence;
  for (Token &token : result.tokens) {
    token.label = BioLabel::Outside();
    token.source = LabelSource::kOutsideDefault;
    token.confidence.reset();
  }
  for (const EntitySpan &span : prediction.spans) WriteSpan(result, span);
  return result;
}

}  // namespace wsner
