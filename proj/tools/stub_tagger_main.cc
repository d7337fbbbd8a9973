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

// wsner-stub-tagger: a tagger plugin that memorizes the entity surfaces it is
// trained on. Used to exercise the tagger protocol end to end.

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "wsner/errors.h"
#include "wsner/line_channel.h"
#include "wsner/plugin_tagger.h"

namespace wsner {
namespace {

using nlohmann::json;

// Surface -> class votes. Prediction labels the longest known surface at
// each position with its majority class; confidence is the majority share.
class DictionaryTagger : public Tagger {
 public:
  explicit DictionaryTagger(std::vector<std::string> classes) : classes_(std::move(classes)) {}

  TaggerCapabilities Handshake() override {
    return TaggerCapabilities{kWireProtocolVersion, "stub-dictionary", classes_, true};
  }

  TaggerModel Train(std::span<const TrainingSegment> segments,
                    const TaggerHyperparams &hparams) override {
    hparams.Validate();
    if (segments.empty()) throw Error("cannot train on an empty segment list");
    std::map<std::string, std::map<std::string, int>> votes;
    for (const TrainingSegment &segment : segments) {
      Sentence sentence{0, segment.tokens};
      for (const EntitySpan &span : SpansFromBio(sentence)) {
        ++votes[SurfaceOf(sentence, span.start, span.end)][span.type];
      }
    }
    json blob = votes;
    TaggerModel model;
    model.backend = "stub-dictionary";
    model.classes = classes_;
    model.blob = blob.dump();
    model.signature = fmt::format("{:016x}", std::hash<std::string>{}(model.blob));
    return model;
  }

  std::vector<TaggerPrediction> Predict(const TaggerModel &model,
                                        std::span<const Sentence> sentences) override {
    const auto votes =
        json::parse(model.blob).get<std::map<std::string, std::map<std::string, int>>>();
    size_t longest = 1;
    for (const auto &[surface, unused] : votes) {
      longest = std::max<size_t>(longest, std::count(surface.begin(), surface.end(), ' ') + 1);
    }
    std::vector<TaggerPrediction> predictions;
    for (const Sentence &sentence : sentences) {
      TaggerPrediction prediction;
      prediction.labels.assign(sentence.size(), BioLabel::Outside());
      for (int i = 0; i < sentence.size();) {
        int matched = 0;
        for (int n = std::min<int>(longest, sentence.size() - i); n >= 1 && !matched; --n) {
          auto it = votes.find(SurfaceOf(sentence, i, i + n));
          if (it == votes.end()) continue;
          int total = 0, best = 0;
          std::string type;
          for (const auto &[t, count] : it->second) {
            total += count;
            if (count > best) best = count, type = t;
          }
          for (int k = i; k < i + n; ++k) {
            prediction.labels[k] = k == i ? BioLabel::Begin(type) : BioLabel::Inside(type);
          }
          prediction.spans.push_back(EntitySpan{sentence.id, i, i + n, type,
                                                LabelSource::kTagger,
                                                static_cast<double>(best) / total});
          matched = n;
        }
        i += matched > 0 ? matched : 1;
      }
      predictions.push_back(std::move(prediction));
    }
    return predictions;
  }

 private:
  std::vector<std::string> classes_;
};

}  // namespace
}  // namespace wsner

int main(int argc, char **argv) {
  CLI::App app{"Dictionary tagger plugin for protocol tests"};
  std::vector<std::string> classes;
  int protocol = wsner::kWireProtocolVersion;
  app.add_option("--classes", classes, "Class set to announce")->delimiter(',');
  app.add_option("--protocol", protocol, "Protocol version to announce");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  std::sort(classes.begin(), classes.end());
  try {
    wsner::DictionaryTagger tagger(classes);
    wsner::FdChannel channel(0, 1, false);
    wsner::ServeTagger(tagger, channel, protocol, true);
  } catch (const std::exception &e) {
    fmt::print(stderr, "wsner-stub-tagger: {}\n", e.what());
    return 1;
  }
  return 0;
}
