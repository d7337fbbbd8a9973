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

#include "wsner/plugin_tagger.h"

#include <map>

#include "wsner/errors.h"
#include "wsner/perceptron_tagger.h"

namespace wsner {

using nlohmann::json;

namespace {

json ParseRecord(const std::string &line) {
  try {
    return json::parse(line);
  } catch (const json::exception &e) {
    throw BackendError(std::string("malformed plugin record: ") + e.what());
  }
}

}  // namespace

json SentenceToWire(const std::vector<Token> &tokens, bool with_labels) {
  json words = json::array();
  json tags = json::array();
  json labels = json::array();
  for (const Token &token : tokens) {
    words.push_back(token.text);
    tags.push_back(token.pos);
    if (with_labels) labels.push_back(token.label.ToString());
  }
  json record{{"tokens", words}, {"pos", tags}};
  if (with_labels) record["labels"] = labels;
  return record;
}

json PredictionToWire(const TaggerPrediction &prediction) {
  json labels = json::array();
  for (const BioLabel &label : prediction.labels) labels.push_back(label.ToString());
  json spans = json::array();
  for (const EntitySpan &span : prediction.spans) {
    spans.push_back(json{{"start", span.start},
                         {"end", span.end},
                         {"type", span.type},
                         {"confidence", span.confidence.value_or(0.0)}});
  }
  return json{{"labels", labels}, {"spans", spans}};
}

TaggerPrediction PredictionFromWire(const json &record, int sentence_id, int length) {
  TaggerPrediction prediction;
  try {
    for (const json &label : record.at("labels")) {
      prediction.labels.push_back(BioLabel::Parse(label.get<std::string>()));
    }
  } catch (const std::exception &e) {
    throw BackendError(std::string("bad prediction labels: ") + e.what());
  }
  if (static_cast<int>(prediction.labels.size()) != length) {
    throw BackendError("plugin returned " + std::to_string(prediction.labels.size()) +
                       " labels for a sentence of " + std::to_string(length) + " tokens");
  }
  if (!IsBioValid(prediction.labels)) {
    throw BackendError("plugin returned an invalid BIO sequence");
  }
  std::map<std::tuple<int, int, std::string>, double> confidences;
  if (record.contains("spans")) {
    for (const json &span : record["spans"]) {
      confidences[{span.at("start").get<int>(), span.at("end").get<int>(),
                   span.at("type").get<std::string>()}] = span.at("confidence").get<double>();
    }
  }
  prediction.spans = SpansFromBio(prediction.labels, sentence_id);
  for (EntitySpan &span : prediction.spans) {
    auto it = confidences.find({span.start, span.end, span.type});
    if (it == confidences.end()) {
      throw BackendError("plugin prediction lacks a confidence for span [" +
                         std::to_string(span.start) + ", " + std::to_string(span.end) + ")");
    }
    if (!(it->second >= 0.0 && it->second <= 1.0)) {
      throw BackendError("plugin confidence outside [0, 1]");
    }
    span.source = LabelSource::kTagger;
    span.confidence = it->second;
  }
  return prediction;
}

TaggerCapabilities ParseCapabilities(const json &hello) {
  if (!hello.is_object() || !hello.value("ok", false)) {
    throw BackendError("tagger plugin rejected the handshake: " +
                       (hello.is_object() ? hello.value("error", std::string("?")) : "?"));
  }
  TaggerCapabilities caps;
  caps.protocol_version = hello.value("protocol", -1);
  if (caps.protocol_version != kWireProtocolVersion) {
    throw BackendError("tagger plugin speaks protocol " +
                       std::to_string(caps.protocol_version) + ", expected " +
                       std::to_string(kWireProtocolVersion));
  }
  if (hello.value("service", std::string()) != "tagger") {
    throw BackendError("endpoint is not a tagger plugin");
  }
  caps.name = hello.value("name", std::string("plugin"));
  caps.classes = hello.value("classes", std::vector<std::string>{});
  caps.calibrated = hello.value("calibrated", false);
  return caps;
}

PluginTagger::PluginTagger(std::unique_ptr<LineChannel> channel,
                           std::vector<std::string> classes)
    : channel_(std::move(channel)), classes_(std::move(classes)) {
  std::sort(classes_.begin(), classes_.end());
  channel_->WriteLine(json{{"op", "hello"}, {"protocol", kWireProtocolVersion}}.dump());
  capabilities_ = ParseCapabilities(Read());
  std::vector<std::string> announced = capabilities_.classes;
  std::sort(announced.begin(), announced.end());
  if (!announced.empty() && announced != classes_) {
    throw BackendError("tagger plugin class set does not match the pipeline's");
  }
  capabilities_.classes = classes_;
}

json PluginTagger::Read() {
  std::optional<std::string> line = channel_->ReadLine();
  if (!line) throw BackendError("tagger plugin closed the connection");
  return ParseRecord(*line);
}

json PluginTagger::Call(const json &header, const std::vector<json> &records) {
  channel_->WriteLine(header.dump());
  for (const json &record : records) channel_->WriteLine(record.dump());
  json response = Read();
  if (!response.value("ok", false)) {
    throw BackendError("tagger plugin error: " + response.value("error", std::string("?")));
  }
  if (response.value("id", int64_t{-1}) != header.at("id").get<int64_t>()) {
    throw BackendError("tagger plugin answered out of order");
  }
  return response;
}

TaggerCapabilities PluginTagger::Handshake() { return capabilities_; }

TaggerModel PluginTagger::Train(std::span<const TrainingSegment> segments,
                                const TaggerHyperparams &hparams) {
  hparams.Validate();
  if (segments.empty()) throw Error("cannot train on an empty segment list");
  CheckSegmentLabels(segments, classes_);
  std::vector<json> records;
  records.reserve(segments.size());
  for (const TrainingSegment &segment : segments) {
    records.push_back(SentenceToWire(segment.tokens, true));
  }
  const int64_t id = next_id_++;
  json response = Call(json{{"op", "train"},
                            {"id", id},
                            {"count", records.size()},
                            {"classes", classes_},
                            {"hparams", hparams.ToJson()}},
                       records);
  TaggerModel model;
  model.backend = "plugin:" + capabilities_.name;
  model.classes = classes_;
  model.signature = response.value("signature", std::string());
  model.blob = response.at("model").get<std::string>();
  return model;
}

std::vector<TaggerPrediction> PluginTagger::Predict(const TaggerModel &model,
                                                    std::span<const Sentence> sentences) {
  if (model.classes != classes_) {
    throw Error("model class set does not match the tagger's class set");
  }
  std::vector<json> records;
  records.reserve(sentences.size());
  for (const Sentence &sentence : sentences) {
    records.push_back(SentenceToWire(sentence.tokens, false));
  }
  const int64_t id = next_id_++;
  json response = Call(
      json{{"op", "predict"}, {"id", id}, {"model", model.blob}, {"count", records.size()}},
      records);
  if (response.value("count", size_t{0}) != sentences.size()) {
    throw BackendError("tagger plugin returned the wrong number of predictions");
  }
  std::vector<TaggerPrediction> predictions;
  predictions.reserve(sentences.size());
  for (const Sentence &sentence : sentences) {
    predictions.push_back(PredictionFromWire(Read(), sentence.id, sentence.size()));
  }
  return predictions;
}

void ServeTagger(Tagger &tagger, LineChannel &channel, int protocol_version,
                 bool calibrated) {
  std::map<std::string, TaggerModel> models;
  auto read_records = [&](size_t count) {
    std::vector<json> records;
    for (size_t i = 0; i < count; ++i) {
      std::optional<std::string> line = channel.ReadLine();
      if (!line) throw BackendError("client closed mid-request");
      records.push_back(json::parse(*line));
    }
    return records;
  };
  auto tokens_from = [](const json &record, bool with_labels) {
    std::vector<Token> tokens;
    const auto words = record.at("tokens").get<std::vector<std::string>>();
    const auto tags = record.value("pos", std::vector<std::string>(words.size()));
    for (size_t i = 0; i < words.size(); ++i) {
      Token token;
      token.text = words[i];
      token.pos = i < tags.size() ? tags[i] : "";
      if (with_labels) token.label = BioLabel::Parse(record.at("labels")[i].get<std::string>());
      tokens.push_back(std::move(token));
    }
    return tokens;
  };

  while (std::optional<std::string> line = channel.ReadLine()) {
    if (line->empty()) continue;
    json request;
    try {
      request = json::parse(*line);
    } catch (const json::exception &e) {
      channel.WriteLine(json{{"ok", false}, {"error", e.what()}}.dump());
      continue;
    }
    const std::string op = request.value("op", std::string());
    const int64_t id = request.value("id", int64_t{0});
    const size_t count = request.value("count", size_t{0});
    std::vector<json> records;
    try {
      records = read_records(count);
      if (op == "hello") {
        TaggerCapabilities caps = tagger.Handshake();
        channel.WriteLine(json{{"ok", true},
                               {"protocol", protocol_version},
                               {"service", "tagger"},
                               {"name", caps.name},
                               {"classes", caps.classes},
                               {"calibrated", calibrated}}
                              .dump());
      } else if (op == "train") {
        std::vector<TrainingSegment> segments;
        for (const json &record : records) {
          TrainingSegment segment;
          segment.sentence_id = static_cast<int>(segments.size());
          segment.tokens = tokens_from(record, true);
          segment.end = static_cast<int>(segment.tokens.size());
          segments.push_back(std::move(segment));
        }
        TaggerHyperparams hp = TaggerHyperparams::FromJson(request.value("hparams", json::object()));
        TaggerModel model = tagger.Train(segments, hp);
        const std::string ref = "mem:" + std::to_string(models.size());
        json reply{{"ok", true}, {"id", id}, {"model", ref}, {"signature", model.signature}};
        models[ref] = std::move(model);
        channel.WriteLine(reply.dump());
      } else if (op == "predict") {
        auto it = models.find(request.value("model", std::string()));
        if (it == models.end()) throw Error("unknown model reference");
        std::vector<Sentence> sentences;
        for (const json &record : records) {
          sentences.push_back(Sentence{static_cast<int>(sentences.size()), tokens_from(record, false)});
        }
        std::vector<TaggerPrediction> predictions = tagger.Predict(it->second, sentences);
        channel.WriteLine(json{{"ok", true}, {"id", id}, {"count", predictions.size()}}.dump());
        for (const TaggerPrediction &prediction : predictions) {
          channel.WriteLine(PredictionToWire(prediction).dump());
        }
      } else {
        throw Error("unknown op '" + op + "'");
      }
    } catch (const std::exception &e) {
      channel.WriteLine(json{{"ok", false}, {"id", id}, {"error", e.what()}}.dump());
    }
  }
}

std::unique_ptr<Tagger> OpenTagger(const std::string &endpoint,
                                   std::vector<std::string> classes) {
  if (endpoint.empty() || endpoint == "native") {
    return std::make_unique<PerceptronTagger>(std::move(classes));
  }
  return std::make_unique<PluginTagger>(OpenEndpoint(endpoint), std::move(classes));
}

}  // namespace wsner
