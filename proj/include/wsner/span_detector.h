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

#ifndef WSNER_SPAN_DETECTOR_H_
#define WSNER_SPAN_DETECTOR_H_

#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wsner {

// POS pattern (P)+ (IN (P)+)? where P is any proper-noun tag.
struct SpanPattern {
  std::set<std::string> proper_noun_tags = {"NNP", "NNPS"};
  std::string preposition_tag = "IN";

  // Throws ConfigError if the tag sets are empty or overlap.
  void Validate() const;
};

// Half-open [start, end) token range.
using TokenRange = std::pair<int, int>;

// All leftmost-longest, non-overlapping matches of the pattern, scanned left
// to right. The optional preposition tail is taken whenever it is present.
std::vector<TokenRange> DetectSpans(std::span<const std::string> pos_tags,
                                    const SpanPattern &pattern = {});

}  // namespace wsner

#endif  // WSNER_SPAN_DETECTOR_H_
