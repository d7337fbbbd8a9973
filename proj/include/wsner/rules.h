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

#ifndef WSNER_RULES_H_
#define WSNER_RULES_H_

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "wsner/corpus.h"
#include "wsner/tagger.h"

namespace wsner {

// company_suffix, loc_org_adjacency, sports_score, multi_mention,
// affix_strip, ospd.
const std::vector<std::string> &DefaultRuleOrder();

struct RuleConfig {
  std::set<std::string> company_suffixes{"Inc.", "Inc", "Corp.", "Corp", "Ltd.", "Ltd",
                                         "Co.",  "Plc", "LLC",   "AG",   "NV"};
  std::set<std::string> honorifics{"Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "Sir"};
  std::string score_pattern = R"(\d+-\d+)";
  double threshold = 0.9;
  std::vector<std::string> order = DefaultRuleOrder();
  // Spans from these sources may seed the confidence rules.
  // Rule edits inherit the confidence of the span they rewrite.
  std::set<LabelSource> seed_sources{LabelSource::kMlm, LabelSource::kTagger,
                                     LabelSource::kRule};
  // Classes the multi-mention rule propagates.
  std::set<std::string> multi_mention_types{"ORG", "LOC", "PER"};
  // Multi-mention also labels unlabeled exact occurrences of a seed surface.
  bool propagate_to_unlabeled = true;

  // Throws ConfigError on an empty set, a threshold outside (0, 1], a bad
  // score pattern, or an unknown or repeated rule name in `order`.
  void Validate() const;
  nlohmann::json ToJson() const;
  static RuleConfig FromJson(const nlohmann::json &json);
};

// One contiguous label edit. `before` and `after` cover [start, end) and
// differ in at least one position.
struct RuleTrace {
  std::string rule;
  int sentence_id = 0;
  int start = 0;
  int end = 0;
  std::vector<BioLabel> before;
  std::vector<BioLabel> after;
  std::string reason;

  nlohmann::json ToJson() const;
  static RuleTrace FromJson(const nlohmann::json &json);
  friend bool operator==(const RuleTrace &, const RuleTrace &) = default;
};

// What a rule application may touch and what it may consult.
struct SieveContext {
  // Sentences that may be edited. Null means every sentence.
  const std::set<int> *mutable_sentences = nullptr;
  // Needed by affix_strip only.
  Tagger *tagger = nullptr;
  const TaggerModel *model = nullptr;
  // Id handed to the next augmented sentence; advanced on use.
  int next_augmented_id = 1 << 30;
};

struct RuleResult {
  Document document;
  // Affix-stripped sentences the tagger got wrong or was unsure about.
  std::vector<Sentence> augmented;
  std::vector<RuleTrace> traces;
};

// Gold and Lexicon labels are never changed by a rule.
bool IsProtected(const Token &token);

// Applies one named rule. Throws ConfigError for an unknown name and Error
// when affix_strip runs without a tagger and model.
RuleResult ApplyRule(std::string_view rule, const Document &doc,
                     const RuleConfig &config, SieveContext &context);

// Applies config.order left to right, each rule seeing the previous output.
RuleResult ApplySieve(const Document &doc, const RuleConfig &config,
                      SieveContext &context);

// Re-applies traces in order. Throws Error when a trace's `before` does not
// match the current labels.
void ReplayTraces(Document &doc, std::span<const RuleTrace> traces);

}  // namespace wsner

#endif  // WSNER_RULES_H_
