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

#include "wsner/perceptron_tagger.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "wsner/errors.h"

namespace wsner {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr const char *kBlobMagic = "wsner-perceptron 1";

std::string Lower(const std::string &text) {
  std::string out = text;
  for (char &c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// O, then B-c and I-c for each class in order.
std::vector<BioLabel> LabelInventory(const std::vector<std::string> &classes) {
  std::vector<BioLabel> labels{BioLabel::Outside()};
  for (const std::string &type : classes) {
    labels.push_back(BioLabel::Begin(type));
    labels.push_back(BioLabel::Inside(type));
  }
  return labels;
}

bool Allowed(const BioLabel *previous, const BioLabel &current) {
  if (current.tag != BioTag::kInside) return true;
  return previous != nullptr && !previous->outside() && previous->type == current.type;
}

}  // namespace

std::string WordShape(const std::string &word) {
  std::string shape;
  for (char c : word) {
    char cls;
    if (c >= 'A' && c <= 'Z') {
      cls = 'X';
    } else if (c >= 'a' && c <= 'z') {
      cls = 'x';
    } else if (c >= '0' && c <= '9') {
      cls = 'd';
    } else if (static_cast<unsigned char>(c) >= 0x80) {
      cls = 'u';
    } else {
      cls = c;
    }
    if (shape.empty() || shape.back() != cls) shape.push_back(cls);
  }
  return shape;
}

std::vector<std::string> ExtractFeatures(std::span<const Token> tokens, int index) {
  const int n = static_cast<int>(tokens.size());
  auto word = [&](int i) -> std::string {
    if (i < 0) return "<s>";
    if (i >= n) return "</s>";
    return tokens[i].text;
  };
  auto pos = [&](int i) -> std::string {
    if (i < 0) return "<s>";
    if (i >= n) return "</s>";
    return tokens[i].pos;
  };
  auto shape = [&](int i) -> std::string {
    if (i < 0 || i >= n) return "<b>";
    return WordShape(tokens[i].text);
  };

  const std::string &w = tokens[index].text;
  std::vector<std::string> features;
  features.reserve(24);
  features.push_back("b");
  features.push_back("w=" + w);
  features.push_back("lw=" + Lower(w));
  features.push_back("w-1=" + word(index - 1));
  features.push_back("w-2=" + word(index - 2));
  features.push_back("w+1=" + word(index + 1));
  features.push_back("w+2=" + word(index + 2));
  features.push_back("sh=" + shape(index));
  features.push_back("sh-1=" + shape(index - 1));
  features.push_back("sh+1=" + shape(index + 1));
  features.push_back("p=" + pos(index));
  features.push_back("p-1=" + pos(index - 1));
  features.push_back("p+1=" + pos(index + 1));
  features.push_back("sh|p=" + shape(index) + "|" + pos(index));
  for (size_t k = 1; k <= 3 && k <= w.size(); ++k) {
    features.push_back("pre" + std::to_string(k) + "=" + w.substr(0, k));
    features.push_back("suf" + std::to_string(k) + "=" + w.substr(w.size() - k));
  }
  return features;
}

// Averaged weights plus the structures needed for decoding.
class PerceptronWeights {
 public:
  explicit PerceptronWeights(std::vector<std::string> classes)
      : classes_(std::move(classes)), labels_(LabelInventory(classes_)) {
    const int l = num_labels();
    allowed_.assign((l + 1) * l, true);
    for (int p = 0; p <= l; ++p) {
      for (int y = 0; y < l; ++y) {
        const BioLabel *previous = p == l ? nullptr : &labels_[p];
        allowed_[p * l + y] = Allowed(previous, labels_[y]);
      }
    }
    transitions_.assign((l + 1) * l, 0.0);
  }

  int num_labels() const { return static_cast<int>(labels_.size()); }
  const std::vector<BioLabel> &labels() const { return labels_; }
  const std::vector<std::string> &classes() const { return classes_; }

  int LabelIndex(const BioLabel &label) const {
    for (int i = 0; i < num_labels(); ++i) {
      if (labels_[i] == label) return i;
    }
    throw Error("label " + label.ToString() + " is not in the tagger's label set");
  }

  int FeatureId(const std::string &feature) const {
    auto it = feature_ids_.find(feature);
    return it == feature_ids_.end() ? -1 : it->second;
  }

  int AddFeature(const std::string &feature) {
    auto [it, inserted] = feature_ids_.try_emplace(feature, static_cast<int>(names_.size()));
    if (inserted) {
      names_.push_back(feature);
      emissions_.resize(names_.size() * num_labels(), 0.0);
    }
    return it->second;
  }

  std::vector<std::vector<int>> FeatureIds(std::span<const Token> tokens) const {
    std::vector<std::vector<int>> ids(tokens.size());
    for (int t = 0; t < static_cast<int>(tokens.size()); ++t) {
      for (const std::string &f : ExtractFeatures(tokens, t)) {
        int id = FeatureId(f);
        if (id >= 0) ids[t].push_back(id);
      }
    }
    return ids;
  }

  double &emission(int feature, int label) { return emissions_[feature * num_labels() + label]; }
  double emission(int feature, int label) const {
    return emissions_[feature * num_labels() + label];
  }
  // `previous` == num_labels() is the start state.
  double &transition(int previous, int label) {
    return transitions_[previous * num_labels() + label];
  }
  double transition(int previous, int label) const {
    return allowed_[previous * num_labels() + label]
               ? transitions_[previous * num_labels() + label]
               : kNegInf;
  }

  std::vector<double> &raw_emissions() { return emissions_; }
  std::vector<double> &raw_transitions() { return transitions_; }

  // Per-token label scores.
  std::vector<std::vector<double>> Scores(const std::vector<std::vector<int>> &ids) const {
    const int l = num_labels();
    std::vector<std::vector<double>> scores(ids.size(), std::vector<double>(l, 0.0));
    for (size_t t = 0; t < ids.size(); ++t) {
      for (int f : ids[t]) {
        const double *row = &emissions_[f * l];
        for (int y = 0; y < l; ++y) scores[t][y] += row[y];
      }
    }
    return scores;
  }

  struct Decoding {
    std::vector<int> path;
    std::vector<double> token_margin;
  };

  Decoding Decode(const std::vector<std::vector<double>> &emit, bool margins) const {
    const int n = static_cast<int>(emit.size());
    const int l = num_labels();
    Decoding result;
    if (n == 0) return result;
    std::vector<std::vector<double>> alpha(n, std::vector<double>(l, kNegInf));
    std::vector<std::vector<int>> back(n, std::vector<int>(l, 0));
    for (int y = 0; y < l; ++y) alpha[0][y] = transition(l, y) + emit[0][y];
    for (int t = 1; t < n; ++t) {
      for (int y = 0; y < l; ++y) {
        double best = kNegInf;
        int arg = 0;
        for (int p = 0; p < l; ++p) {
          const double s = alpha[t - 1][p] + transition(p, y);
          if (s > best) {
            best = s;
            arg = p;
          }
        }
        alpha[t][y] = best + emit[t][y];
        back[t][y] = arg;
      }
    }
    int last = 0;
    for (int y = 1; y < l; ++y) {
      if (alpha[n - 1][y] > alpha[n - 1][last]) last = y;
    }
    const double best_score = alpha[n - 1][last];
    result.path.assign(n, 0);
    result.path[n - 1] = last;
    for (int t = n - 1; t > 0; --t) result.path[t - 1] = back[t][result.path[t]];
    if (!margins) return result;

    std::vector<std::vector<double>> beta(n, std::vector<double>(l, 0.0));
    for (int t = n - 2; t >= 0; --t) {
      for (int y = 0; y < l; ++y) {
        double best = kNegInf;
        for (int q = 0; q < l; ++q) {
          best = std::max(best, transition(y, q) + emit[t + 1][q] + beta[t + 1][q]);
        }
        beta[t][y] = best;
      }
    }
    result.token_margin.assign(n, 0.0);
    for (int t = 0; t < n; ++t) {
      double rival = kNegInf;
      for (int y = 0; y < l; ++y) {
        if (y != result.path[t]) rival = std::max(rival, alpha[t][y] + beta[t][y]);
      }
      result.token_margin[t] = best_score - rival;
    }
    return result;
  }

  double confidence_scale() const { return confidence_scale_; }
  void set_confidence_scale(double scale) { confidence_scale_ = scale; }

  std::string Serialize() const {
    std::vector<int> order(names_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return names_[a] < names_[b]; });
    const int l = num_labels();
    std::string out = std::string(kBlobMagic) + "\n";
    out += "classes";
    for (const std::string &c : classes_) out += " " + c;
    out += fmt::format("\nconfidence_scale {:.17g}", confidence_scale_);
    out += "\ntransitions";
    for (double v : transitions_) out += fmt::format(" {:.9g}", v);
    out += "\n";
    for (int f : order) {
      bool nonzero = false;
      for (int y = 0; y < l; ++y) nonzero |= emission(f, y) != 0.0;
      if (!nonzero) continue;
      out += names_[f];
      out += '\t';
      for (int y = 0; y < l; ++y) {
        if (y > 0) out += ' ';
        out += fmt::format("{:.9g}", emission(f, y));
      }
      out += '\n';
    }
    return out;
  }

  static std::shared_ptr<PerceptronWeights> Deserialize(const std::string &blob) {
    std::istringstream in(blob);
    std::string line;
    if (!std::getline(in, line) || line != kBlobMagic) {
      throw Error("not a perceptron model blob");
    }
    std::getline(in, line);
    std::istringstream classes_in(line);
    std::string word;
    classes_in >> word;
    if (word != "classes") throw Error("corrupt perceptron blob: missing classes");
    std::vector<std::string> classes;
    while (classes_in >> word) classes.push_back(word);
    auto weights = std::make_shared<PerceptronWeights>(classes);
    const int l = weights->num_labels();

    std::getline(in, line);
    std::istringstream scale_in(line);
    scale_in >> word;
    if (word != "confidence_scale" || !(scale_in >> weights->confidence_scale_)) {
      throw Error("corrupt perceptron blob: missing confidence scale");
    }

    std::getline(in, line);
    std::istringstream trans_in(line);
    trans_in >> word;
    if (word != "transitions") throw Error("corrupt perceptron blob: missing transitions");
    for (double &v : weights->transitions_) {
      if (!(trans_in >> v)) throw Error("corrupt perceptron blob: short transitions");
    }
    while (std::getline(in, line)) {
      const auto tab = line.rfind('\t');
      if (tab == std::string::npos) throw Error("corrupt perceptron blob: bad feature line");
      const int id = weights->AddFeature(line.substr(0, tab));
      std::istringstream values(line.substr(tab + 1));
      for (int y = 0; y < l; ++y) {
        if (!(values >> weights->emission(id, y))) {
          throw Error("corrupt perceptron blob: short feature row");
        }
      }
    }
    return weights;
  }

 private:
  std::vector<std::string> classes_;
  std::vector<BioLabel> labels_;
  std::vector<bool> allowed_;
  std::unordered_map<std::string, int> feature_ids_;
  std::vector<std::string> names_;
  std::vector<double> emissions_;
  std::vector<double> transitions_;
  double confidence_scale_ = 1.0;
};

PerceptronTagger::PerceptronTagger(std::vector<std::string> classes)
    : classes_(std::move(classes)) {
  std::sort(classes_.begin(), classes_.end());
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
  if (classes_.empty()) throw ConfigError("tagger needs at least one entity class");
}

PerceptronTagger::~PerceptronTagger() = default;

TaggerCapabilities PerceptronTagger::Handshake() {
  return TaggerCapabilities{1, kBackendName, classes_, false};
}

TaggerModel PerceptronTagger::Train(std::span<const TrainingSegment> segments,
                                    const TaggerHyperparams &hparams) {
  hparams.Validate();
  if (segments.empty()) throw Error("cannot train on an empty segment list");
  CheckSegmentLabels(segments, classes_);

  PerceptronWeights weights(classes_);
  const int l = weights.num_labels();
  const int start = l;

  struct Example {
    std::vector<std::vector<int>> ids;
    std::vector<int> gold;
  };
  std::vector<Example> examples;
  examples.reserve(segments.size());
  for (const TrainingSegment &segment : segments) {
    if (segment.tokens.empty()) continue;
    Example example;
    example.ids.resize(segment.tokens.size());
    for (int t = 0; t < static_cast<int>(segment.tokens.size()); ++t) {
      for (const std::string &f : ExtractFeatures(segment.tokens, t)) {
        example.ids[t].push_back(weights.AddFeature(f));
      }
      example.gold.push_back(weights.LabelIndex(segment.tokens[t].label));
    }
    examples.push_back(std::move(example));
  }
  if (examples.empty()) throw Error("cannot train on segments without tokens");

  // Lazy averaging: `accum` holds sum of counter * update, so the average is
  // w - accum / counter.
  std::vector<double> emission_accum(weights.raw_emissions().size(), 0.0);
  std::vector<double> transition_accum(weights.raw_transitions().size(), 0.0);
  double counter = 1.0;

  auto update_emission = [&](int f, int y, double delta) {
    weights.emission(f, y) += delta;
    emission_accum[f * l + y] += counter * delta;
  };
  auto update_transition = [&](int p, int y, double delta) {
    weights.transition(p, y) += delta;
    transition_accum[p * l + y] += counter * delta;
  };

  std::mt19937_64 rng(hparams.seed);
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < hparams.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t index : order) {
      const Example &example = examples[index];
      std::vector<int> guess =
          weights.Decode(weights.Scores(example.ids), /*margins=*/false).path;
      if (guess != example.gold) {
        const int n = static_cast<int>(guess.size());
        for (int t = 0; t < n; ++t) {
          const int gold_prev = t == 0 ? start : example.gold[t - 1];
          const int guess_prev = t == 0 ? start : guess[t - 1];
          if (gold_prev != guess_prev || example.gold[t] != guess[t]) {
            update_transition(gold_prev, example.gold[t], 1.0);
            update_transition(guess_prev, guess[t], -1.0);
          }
          if (example.gold[t] != guess[t]) {
            for (int f : example.ids[t]) {
              update_emission(f, example.gold[t], 1.0);
              update_emission(f, guess[t], -1.0);
            }
          }
        }
      }
      counter += 1.0;
    }
  }
  std::vector<double> &emissions = weights.raw_emissions();
  for (size_t i = 0; i < emissions.size(); ++i) {
    emissions[i] -= emission_accum[i] / counter;
  }
  std::vector<double> &transitions = weights.raw_transitions();
  for (size_t i = 0; i < transitions.size(); ++i) {
    transitions[i] -= transition_accum[i] / counter;
  }

  weights.set_confidence_scale(hparams.confidence_scale);

  TaggerModel model;
  model.backend = kBackendName;
  model.classes = classes_;
  model.blob = weights.Serialize();
  model.signature = fmt::format("perceptron-v1;epochs={};seed={};examples={}",
                                hparams.epochs, hparams.seed, examples.size());
  return model;
}

std::shared_ptr<const PerceptronWeights> PerceptronTagger::Load(const TaggerModel &model) {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  if (cached_weights_ && cached_blob_ == model.blob) return cached_weights_;
  cached_weights_ = PerceptronWeights::Deserialize(model.blob);
  cached_blob_ = model.blob;
  return cached_weights_;
}

std::vector<TaggerPrediction> PerceptronTagger::Predict(
    const TaggerModel &model, std::span<const Sentence> sentences) {
  if (model.backend != kBackendName) {
    throw Error("model was trained by '" + model.backend + "', not " + kBackendName);
  }
  if (model.classes != classes_) {
    throw Error("model class set does not match the tagger's class set");
  }
  std::shared_ptr<const PerceptronWeights> weights = Load(model);
  const double scale = weights->confidence_scale();

  std::vector<TaggerPrediction> predictions;
  predictions.reserve(sentences.size());
  for (const Sentence &sentence : sentences) {
    TaggerPrediction prediction;
    if (sentence.tokens.empty()) {
      predictions.push_back(std::move(prediction));
      continue;
    }
    auto decoding = weights->Decode(weights->Scores(weights->FeatureIds(sentence.tokens)),
                                    /*margins=*/true);
    for (int y : decoding.path) prediction.labels.push_back(weights->labels()[y]);
    prediction.spans = SpansFromBio(prediction.labels, sentence.id);
    for (EntitySpan &span : prediction.spans) {
      double margin = std::numeric_limits<double>::infinity();
      for (int t = span.start; t < span.end; ++t) {
        margin = std::min(margin, decoding.token_margin[t]);
      }
      span.source = LabelSource::kTagger;
      span.confidence = std::isinf(margin) ? 1.0 : std::tanh(0.5 * margin / scale);
    }
    predictions.push_back(std::move(prediction));
  }
  return predictions;
}

}  // namespace wsner
