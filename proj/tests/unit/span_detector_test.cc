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

#include <random>
#include <regex>

#include "doctest.h"
#include "oracles.h"
#include "wsner/errors.h"

namespace wsner {
namespace {

std::vector<TokenRange> Detect(std::vector<std::string> tags) {
  return DetectSpans(tags);
}

TEST_CASE("proper-noun runs with one optional preposition tail") {
  using R = std::vector<TokenRange>;
  CHECK(Detect({"NNP", "NNP", "VBD"}) == R{{0, 2}});
  CHECK(Detect({"DT", "NNP", "IN", "NNP", "NNP", "."}) == R{{1, 5}});
  CHECK(Detect({"NNP", "IN", "NNP", "IN", "NNP"}) == R{{0, 3}, {4, 5}});
  CHECK(Detect({"NNP", "IN", "DT", "NNP"}) == R{{0, 1}, {3, 4}});
  CHECK(Detect({"NNPS", "NNP"}) == R{{0, 2}});
  CHECK(Detect({"IN", "NNP"}) == R{{1, 2}});
  CHECK(Detect({"DT", "NN"}).empty());
  CHECK(Detect({}).empty());
}

TEST_CASE("custom tag sets") {
  SpanPattern pattern;
  pattern.proper_noun_tags = {"PROPN"};
  pattern.preposition_tag = "ADP";
  std::vector<std::string> tags{"PROPN", "ADP", "PROPN", "NNP"};
  CHECK(DetectSpans(tags, pattern) == std::vector<TokenRange>{{0, 3}});
  pattern.preposition_tag = "PROPN";
  CHECK_THROWS_AS(pattern.Validate(), ConfigError);
}

// Oracle: encode tags as characters and take, from each position, the
// longest substring matching the pattern as a regular expression.
std::vector<TokenRange> RegexOracle(const std::vector<std::string> &tags) {
  std::string code;
  for (const std::string &tag : tags) {
    code += tag == "NNP" || tag == "NNPS" ? 'P' : tag == "IN" ? 'I' : 'x';
  }
  static const std::regex pattern("P+(IP+)?");
  std::vector<TokenRange> spans;
  const int n = static_cast<int>(code.size());
  for (int i = 0; i < n;) {
    int best = -1;
    for (int j = n; j > i && best < 0; --j) {
      if (std::regex_match(code.begin() + i, code.begin() + j, pattern)) best = j;
    }
    if (best < 0) {
      ++i;
    } else {
      spans.emplace_back(i, best);
      i = best;
    }
  }
  return spans;
}

TEST_CASE("property: equals the regex oracle on random tag sequences") {
  std::mt19937_64 rng(3);
  const std::vector<std::string> alphabet{"NNP", "NNPS", "IN", "DT", "VBD", "NN"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::string> tags(rng() % 30);
    for (auto &tag : tags) tag = alphabet[rng() % alphabet.size()];
    const std::vector<TokenRange> got = DetectSpans(tags);
    CHECK(got == RegexOracle(tags));
    CHECK(got == testing::SpanOracle(tags));
  }
}

}  // namespace
}  // namespace wsner
