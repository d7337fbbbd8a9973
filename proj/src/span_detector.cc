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

#include "wsner/span_detector.h"

#include "wsner/errors.h"

namespace wsner {

void SpanPattern::Validate() const {
  if (proper_noun_tags.empty() || preposition_tag.empty()) {
    throw ConfigError("span pattern tag sets must be non-empty");
  }
  if (proper_noun_tags.count(preposition_tag) > 0) {
    throw ConfigError("preposition tag '" + preposition_tag +
                      "' is also a proper-noun tag");
  }
}

std::vector<TokenRange> DetectSpans(std::span<const std::string> pos_tags,
                                    const SpanPattern &pattern) {
  const int n = static_cast<int>(pos_tags.size());
  auto proper = [&](int i) {
    return i < n && pattern.proper_noun_tags.count(pos_tags[i]) > 0;
  };

  std::vector<TokenRange> spans;
  int i = 0;
  while (i < n) {
    if (!proper(i)) {
      ++i;
      continue;
    }
    int end = i;
    while (proper(end)) ++end;
    // The run is maximal and P and IN are disjoint, so the longest match from
    // i can only grow through a single IN (P)+ tail.
    if (end < n && pos_tags[end] == pattern.preposition_tag && proper(end + 1)) {
      end += 1;
      while (proper(end)) ++end;
    }
    spans.emplace_back(i, end);
    i = end;
  }
  return spans;
}

}  // namespace wsner
