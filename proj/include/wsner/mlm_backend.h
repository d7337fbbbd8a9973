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

#ifndef WSNER_MLM_BACKEND_H_
#define WSNER_MLM_BACKEND_H_

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wsner/line_channel.h"
#include "wsner/span_detector.h"

namespace wsner {

struct ClozeCandidate {
  std::string type;
  std::vector<std::string> words;
};

// One masked span of a sentence and the exemplars to fill it with. The
// backend masks tokens [span.first, span.second) with one mask per word.
struct ClozeRequest {
  std::vector<std::string> tokens;
  TokenRange span;
  std::vector<ClozeCandidate> candidates;

  int mask_count() const { return span.second - span.first; }

  // Throws Error if the span is out of range or a candidate is empty.
  void Validate() const;
};

// Raw backend answer for one candidate. `token_probs` has one entry per mask
// when eligible.
struct FillResult {
  bool eligible = false;
  std::vector<double> token_probs;
};

// Validated answer: `mean` is the arithmetic mean of token_probs.
struct CandidateProbs {
  bool eligible = false;
  double mean = 0.0;
  std::vector<double> token_probs;
};

class MlmBackend {
 public:
  virtual ~MlmBackend() = default;

  virtual std::vector<FillResult> Fill(const ClozeRequest &request) = 0;

  // Default implementation calls Fill once per request.
  virtual std::vector<std::vector<FillResult>> FillBatch(
      std::span<const ClozeRequest> requests);

  // Number of subword pieces the backend's tokenizer produces per word.
  virtual std::vector<int> SubwordCounts(std::span<const std::string> words) = 0;
};

// Calls the backend and checks the answer: one result per candidate, one
// probability in [0, 1] per mask for eligible candidates. Candidates whose
// word count differs from the mask count are ineligible whatever the backend
// says. Throws BackendError on malformed answers.
std::vector<CandidateProbs> MaskFillProbabilities(MlmBackend &backend,
                                                  const ClozeRequest &request);
std::vector<std::vector<CandidateProbs>> MaskFillProbabilities(
    MlmBackend &backend, std::span<const ClozeRequest> requests);

// Deterministic in-process backend for tests and offline runs.
//
// Probabilities come from, in order of precedence:
//   fixed     candidate surface -> per-mask probabilities
//   affinity  P(candidate word class | true class of the masked word), with
//             word classes looked up in `word_classes` ("O" when unknown),
//             plus a hashed jitter in [-jitter, jitter]
//   default_prob
struct StubMlmConfig {
  double default_prob = 0.01;
  std::map<std::string, std::vector<double>> fixed;
  std::map<std::string, std::string> word_classes;
  std::map<std::string, std::map<std::string, double>> affinity;
  double jitter = 0.0;
  uint64_t seed = 0;
  std::map<std::string, int> subwords;
  int default_subwords = 1;

  static StubMlmConfig FromJson(const nlohmann::json &json);
  static StubMlmConfig Load(const std::string &path);
  nlohmann::json ToJson() const;
};

class StubMlmBackend : public MlmBackend {
 public:
  explicit StubMlmBackend(StubMlmConfig config);

  std::vector<FillResult> Fill(const ClozeRequest &request) override;
  std::vector<int> SubwordCounts(std::span<const std::string> words) override;

  const StubMlmConfig &config() const { return config_; }

 private:
  double Probability(const ClozeRequest &request, int position,
                     const std::string &word) const;

  StubMlmConfig config_;
};

// Client for a backend process speaking the line protocol. Keeps up to
// `max_in_flight` requests outstanding in FillBatch.
class LineMlmBackend : public MlmBackend {
 public:
  // Performs the hello handshake; throws BackendError on version mismatch.
  explicit LineMlmBackend(std::unique_ptr<LineChannel> channel,
                          int max_in_flight = 8);

  std::vector<FillResult> Fill(const ClozeRequest &request) override;
  std::vector<std::vector<FillResult>> FillBatch(
      std::span<const ClozeRequest> requests) override;
  std::vector<int> SubwordCounts(std::span<const std::string> words) override;

 private:
  nlohmann::json ReadResponse(int64_t id);

  std::unique_ptr<LineChannel> channel_;
  int max_in_flight_;
  int64_t next_id_ = 1;
};

// "stub:<config.json>" builds a StubMlmBackend, anything else goes through
// OpenEndpoint.
std::unique_ptr<MlmBackend> OpenMlmBackend(const std::string &endpoint,
                                           int max_in_flight = 8);

// Server side of the protocol: answers requests from `channel` with
// `backend` until end of input.
void ServeMlm(MlmBackend &backend, LineChannel &channel,
              int protocol_version = kWireProtocolVersion);

nlohmann::json ClozeRequestToJson(const ClozeRequest &request);
ClozeRequest ClozeRequestFromJson(const nlohmann::json &json);

}  // namespace wsner

#endif  // WSNER_MLM_BACKEND_H_
