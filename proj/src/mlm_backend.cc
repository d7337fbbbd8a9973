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

#include "wsner/mlm_backend.h"

#include <algorithm>
#include <fstream>

#include "wsner/errors.h"

namespace wsner {
namespace {

using nlohmann::json;

// FNV-1a; stable across platforms so stub outputs are reproducible.
class Fnv1a {
 public:
  explicit Fnv1a(uint64_t seed) { Mix(&seed, sizeof(seed)); }
  void Mix(const void *data, size_t size) {
    const auto *bytes = static_cast<const unsigned char *>(data);
    for (size_t i = 0; i < size; ++i) {
      hash_ ^= bytes[i];
      hash_ *= 1099511628211ULL;
    }
  }
  void Mix(const std::string &text) {
    Mix(text.data(), text.size());
    Mix("\x1f", 1);
  }
  uint64_t value() const { return hash_; }

 private:
  uint64_t hash_ = 1469598103934665603ULL;
};

json Parse(const std::string &line) {
  try {
    return json::parse(line);
  } catch (const json::exception &e) {
    throw BackendError(std::string("malformed backend record: ") + e.what());
  }
}

void CheckOk(const json &response) {
  if (!response.is_object() || !response.value("ok", false)) {
    std::string message = "backend error";
    if (response.is_object() && response.contains("error")) {
      message += ": " + response["error"].get<std::string>();
    }
    throw BackendError(message);
  }
}

std::vector<FillResult> ResultsFromJson(const json &response) {
  std::vector<FillResult> results;
  if (!response.contains("results") || !response["results"].is_array()) {
    throw BackendError("fill response lacks a results array");
  }
  for (const json &item : response["results"]) {
    FillResult result;
    result.eligible = item.value("eligible", false);
    if (result.eligible) {
      result.token_probs = item.at("probs").get<std::vector<double>>();
    }
    results.push_back(std::move(result));
  }
  return results;
}

}  // namespace

void ClozeRequest::Validate() const {
  if (span.first < 0 || span.second > static_cast<int>(tokens.size()) ||
      span.first >= span.second) {
    throw Error("cloze span out of range");
  }
  for (const ClozeCandidate &candidate : candidates) {
    if (candidate.words.empty()) throw Error("empty cloze candidate");
  }
}

std::vector<std::vector<FillResult>> MlmBackend::FillBatch(
    std::span<const ClozeRequest> requests) {
  std::vector<std::vector<FillResult>> results;
  results.reserve(requests.size());
  for (const ClozeRequest &request : requests) results.push_back(Fill(request));
  return results;
}

namespace {

std::vector<CandidateProbs> CheckFill(const ClozeRequest &request,
                                      std::vector<FillResult> raw) {
  if (raw.size() != request.candidates.size()) {
    throw BackendError("backend returned " + std::to_string(raw.size()) +
                       " results for " +
                       std::to_string(request.candidates.size()) + " candidates");
  }
  std::vector<CandidateProbs> out(raw.size());
  const int masks = request.mask_count();
  for (size_t c = 0; c < raw.size(); ++c) {
    const auto words = static_cast<int>(request.candidates[c].words.size());
    if (!raw[c].eligible || words != masks) continue;
    const std::vector<double> &probs = raw[c].token_probs;
    if (static_cast<int>(probs.size()) != masks) {
      throw BackendError("backend returned " + std::to_string(probs.size()) +
                         " probabilities for " + std::to_string(masks) + " masks");
    }
    double sum = 0.0;
    for (double p : probs) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw BackendError("backend probability outside [0, 1]");
      }
      sum += p;
    }
    out[c].eligible = true;
    out[c].token_probs = probs;
    out[c].mean = sum / masks;
  }
  return out;
}

}  // namespace

std::vector<CandidateProbs> MaskFillProbabilities(MlmBackend &backend,
                                                  const ClozeRequest &request) {
  request.Validate();
  return CheckFill(request, backend.Fill(request));
}

std::vector<std::vector<CandidateProbs>> MaskFillProbabilities(
    MlmBackend &backend, std::span<const ClozeRequest> requests) {
  for (const ClozeRequest &request : requests) request.Validate();
  std::vector<std::vector<FillResult>> raw = backend.FillBatch(requests);
  if (raw.size() != requests.size()) {
    throw BackendError("backend batch size mismatch");
  }
  std::vector<std::vector<CandidateProbs>> out;
  out.reserve(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    out.push_back(CheckFill(requests[i], std::move(raw[i])));
  }
  return out;
}

StubMlmConfig StubMlmConfig::FromJson(const json &j) {
  StubMlmConfig config;
  try {
    config.default_prob = j.value("default_prob", config.default_prob);
    if (j.contains("fixed")) {
      config.fixed = j["fixed"].get<std::map<std::string, std::vector<double>>>();
    }
    if (j.contains("word_classes")) {
      config.word_classes = j["word_classes"].get<std::map<std::string, std::string>>();
    }
    if (j.contains("affinity")) {
      config.affinity =
          j["affinity"].get<std::map<std::string, std::map<std::string, double>>>();
    }
    config.jitter = j.value("jitter", 0.0);
    config.seed = j.value("seed", uint64_t{0});
    if (j.contains("subwords")) {
      config.subwords = j["subwords"].get<std::map<std::string, int>>();
    }
    config.default_subwords = j.value("default_subwords", 1);
  } catch (const json::exception &e) {
    throw ConfigError(std::string("invalid stub backend config: ") + e.what());
  }
  return config;
}

StubMlmConfig StubMlmConfig::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stub backend config '" + path + "'");
  try {
    return FromJson(json::parse(in));
  } catch (const json::parse_error &e) {
    throw ConfigError(path + ": " + e.what());
  }
}

json StubMlmConfig::ToJson() const {
  return json{{"default_prob", default_prob}, {"fixed", fixed},
              {"word_classes", word_classes}, {"affinity", affinity},
              {"jitter", jitter},             {"seed", seed},
              {"subwords", subwords},         {"default_subwords", default_subwords}};
}

StubMlmBackend::StubMlmBackend(StubMlmConfig config) : config_(std::move(config)) {}

double StubMlmBackend::Probability(const ClozeRequest &request, int position,
                                   const std::string &word) const {
  const std::string &masked = request.tokens[request.span.first + position];
  auto class_of = [&](const std::string &w) {
    auto it = config_.word_classes.find(w);
    return it == config_.word_classes.end() ? std::string("O") : it->second;
  };
  double p = config_.default_prob;
  auto row = config_.affinity.find(class_of(masked));
  if (row != config_.affinity.end()) {
    auto cell = row->second.find(class_of(word));
    if (cell != row->second.end()) p = cell->second;
  }
  if (config_.jitter > 0.0) {
    Fnv1a hash(config_.seed);
    for (const std::string &token : request.tokens) hash.Mix(token);
    hash.Mix(&position, sizeof(position));
    hash.Mix(word);
    const double unit = static_cast<double>(hash.value() >> 11) * 0x1.0p-53;
    p += (2.0 * unit - 1.0) * config_.jitter;
  }
  return std::clamp(p, 0.0, 1.0);
}

std::vector<FillResult> StubMlmBackend::Fill(const ClozeRequest &request) {
  std::vector<FillResult> results;
  const int masks = request.mask_count();
  for (const ClozeCandidate &candidate : request.candidates) {
    FillResult result;
    if (static_cast<int>(candidate.words.size()) != masks) {
      results.push_back(std::move(result));
      continue;
    }
    std::string surface;
    for (const std::string &w : candidate.words) {
      if (!surface.empty()) surface += ' ';
      surface += w;
    }
    auto fixed = config_.fixed.find(surface);
    if (fixed != config_.fixed.end()) {
      if (static_cast<int>(fixed->second.size()) == masks) {
        result.eligible = true;
        result.token_probs = fixed->second;
      }
    } else {
      result.eligible = true;
      for (int i = 0; i < masks; ++i) {
        result.token_probs.push_back(Probability(request, i, candidate.words[i]));
      }
    }
    results.push_back(std::move(result));
  }
  return results;
}

std::vector<int> StubMlmBackend::SubwordCounts(std::span<const std::string> words) {
  std::vector<int> counts;
  counts.reserve(words.size());
  for (const std::string &word : words) {
    auto it = config_.subwords.find(word);
    counts.push_back(it == config_.subwords.end() ? config_.default_subwords
                                                  : it->second);
  }
  return counts;
}

json ClozeRequestToJson(const ClozeRequest &request) {
  json candidates = json::array();
  for (const ClozeCandidate &candidate : request.candidates) {
    candidates.push_back(candidate.words);
  }
  return json{{"tokens", request.tokens},
              {"span", {request.span.first, request.span.second}},
              {"candidates", candidates}};
}

ClozeRequest ClozeRequestFromJson(const json &j) {
  ClozeRequest request;
  try {
    request.tokens = j.at("tokens").get<std::vector<std::string>>();
    const auto span = j.at("span").get<std::vector<int>>();
    if (span.size() != 2) throw Error("span must have two offsets");
    request.span = {span[0], span[1]};
    for (const json &words : j.at("candidates")) {
      request.candidates.push_back({"", words.get<std::vector<std::string>>()});
    }
  } catch (const json::exception &e) {
    throw Error(std::string("malformed cloze request: ") + e.what());
  }
  return request;
}

LineMlmBackend::LineMlmBackend(std::unique_ptr<LineChannel> channel,
                               int max_in_flight)
    : channel_(std::move(channel)), max_in_flight_(std::max(1, max_in_flight)) {
  channel_->WriteLine(json{{"op", "hello"}, {"protocol", kWireProtocolVersion}}.dump());
  std::optional<std::string> line = channel_->ReadLine();
  if (!line) throw BackendError("masked-LM backend closed during handshake");
  json hello = Parse(*line);
  CheckOk(hello);
  const int version = hello.value("protocol", -1);
  if (version != kWireProtocolVersion) {
    throw BackendError("masked-LM backend speaks protocol " +
                       std::to_string(version) + ", expected " +
                       std::to_string(kWireProtocolVersion));
  }
  if (hello.value("service", std::string()) != "mlm") {
    throw BackendError("endpoint is not a masked-LM backend");
  }
}

json LineMlmBackend::ReadResponse(int64_t id) {
  std::optional<std::string> line = channel_->ReadLine();
  if (!line) throw BackendError("masked-LM backend closed the connection");
  json response = Parse(*line);
  CheckOk(response);
  if (response.value("id", int64_t{-1}) != id) {
    throw BackendError("out-of-order backend response (expected id " +
                       std::to_string(id) + ")");
  }
  return response;
}

std::vector<FillResult> LineMlmBackend::Fill(const ClozeRequest &request) {
  return FillBatch(std::span<const ClozeRequest>(&request, 1)).front();
}

std::vector<std::vector<FillResult>> LineMlmBackend::FillBatch(
    std::span<const ClozeRequest> requests) {
  std::vector<std::vector<FillResult>> results;
  results.reserve(requests.size());
  const int64_t first_id = next_id_;
  size_t sent = 0;
  while (results.size() < requests.size()) {
    while (sent < requests.size() &&
           sent - results.size() < static_cast<size_t>(max_in_flight_)) {
      json message = ClozeRequestToJson(requests[sent]);
      message["op"] = "fill";
      message["id"] = first_id + static_cast<int64_t>(sent);
      channel_->WriteLine(message.dump());
      ++sent;
    }
    results.push_back(
        ResultsFromJson(ReadResponse(first_id + static_cast<int64_t>(results.size()))));
  }
  next_id_ = first_id + static_cast<int64_t>(requests.size());
  return results;
}

std::vector<int> LineMlmBackend::SubwordCounts(std::span<const std::string> words) {
  const int64_t id = next_id_++;
  channel_->WriteLine(
      json{{"op", "subwords"}, {"id", id}, {"words", std::vector<std::string>(words.begin(), words.end())}}
          .dump());
  json response = ReadResponse(id);
  auto counts = response.at("counts").get<std::vector<int>>();
  if (counts.size() != words.size()) {
    throw BackendError("subword response size mismatch");
  }
  return counts;
}

std::unique_ptr<MlmBackend> OpenMlmBackend(const std::string &endpoint,
                                           int max_in_flight) {
  if (endpoint.rfind("stub:", 0) == 0) {
    return std::make_unique<StubMlmBackend>(StubMlmConfig::Load(endpoint.substr(5)));
  }
  return std::make_unique<LineMlmBackend>(OpenEndpoint(endpoint), max_in_flight);
}

void ServeMlm(MlmBackend &backend, LineChannel &channel, int protocol_version) {
  while (std::optional<std::string> line = channel.ReadLine()) {
    if (line->empty()) continue;
    json response;
    json request;
    try {
      request = json::parse(*line);
      response["id"] = request.value("id", int64_t{0});
      const std::string op = request.value("op", std::string());
      if (op == "hello") {
        response = json{{"ok", true}, {"protocol", protocol_version}, {"service", "mlm"}};
      } else if (op == "fill") {
        ClozeRequest cloze = ClozeRequestFromJson(request);
        cloze.Validate();
        json results = json::array();
        for (const FillResult &result : backend.Fill(cloze)) {
          json item{{"eligible", result.eligible}};
          if (result.eligible) item["probs"] = result.token_probs;
          results.push_back(item);
        }
        response["ok"] = true;
        response["results"] = results;
      } else if (op == "subwords") {
        const auto words = request.at("words").get<std::vector<std::string>>();
        response["ok"] = true;
        response["counts"] = backend.SubwordCounts(words);
      } else {
        throw Error("unknown op '" + op + "'");
      }
    } catch (const std::exception &e) {
      response["ok"] = false;
      response["error"] = e.what();
    }
    channel.WriteLine(response.dump());
  }
}

}  // namespace wsner
