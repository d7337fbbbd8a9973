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

#include "wsner/window_filter.h"

#include <algorithm>

#include "wsner/errors.h"

namespace wsner {
namespace {

TrainingSegment MakeSegment(const Sentence &sentence, int start, int end) {
  TrainingSegment segment;
  segment.sentence_id = sentence.id;
  segment.start = start;
  segment.end = end;
  segment.tokens.assign(sentence.tokens.begin() + start, sentence.tokens.begin() + end);
  return segment;
}

}  // namespace

bool IsWall(const Token &token, const WindowOptions &options) {
  if (!token.label.outside()) return false;
  return token.pos == "NNP" || (options.nnps_walls && token.pos == "NNPS");
}

std::vector<TrainingSegment> FilterSentence(const Sentence &sentence,
                                            const WindowOptions &options) {
  if (options.window < 1) {
    throw Error("window size must be at least 1, got " + std::to_string(options.window));
  }
  const int n = sentence.size();
  auto wall = [&](int i) { return IsWall(sentence.tokens[i], options); };

  std::vector<EntitySpan> entities = SpansFromBio(sentence);
  std::vector<TrainingSegment> segments;
  if (entities.empty()) {
    if (!options.admit_unlabeled) return segments;
    int i = 0;
    while (i < n) {
      if (wall(i)) {
        ++i;
        continue;
      }
      int j = i;
      while (j < n && !wall(j)) ++j;
      segments.push_back(MakeSegment(sentence, i, j));
      i = j;
    }
    return segments;
  }

  // Each window starts W tokens to either side of its entity (clipped at the
  // first wall) and then keeps expanding one token at a time.
  std::vector<std::pair<int, int>> windows;
  for (const EntitySpan &entity : entities) {
    int left = entity.start;
    for (int step = 0; step < options.window && left > 0 && !wall(left - 1); ++step) {
      --left;
    }
    while (left > 0 && !wall(left - 1)) --left;
    int right = entity.end;
    for (int step = 0; step < options.window && right < n && !wall(right); ++step) {
      ++right;
    }
    while (right < n && !wall(right)) ++right;
    windows.emplace_back(left, right);
  }

  // Windows are built in entity order, so sorted by their left edge; any two
  // that touch or overlap become one segment.
  std::vector<std::pair<int, int>> merged;
  for (const auto &window : windows) {
    if (!merged.empty() && window.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, window.second);
    } else {
      merged.push_back(window);
    }
  }
  for (const auto &[start, end] : merged) {
    segments.push_back(MakeSegment(sentence, start, end));
  }
  return segments;
}

std::vector<TrainingSegment> FilterSentences(std::span<const Sentence> sentences,
                                             const WindowOptions &options) {
  std::vector<TrainingSegment> segments;
  for (const Sentence &sentence : sentences) {
    std::vector<TrainingSegment> part = FilterSentence(sentence, options);
    segments.insert(segments.end(), std::make_move_iterator(part.begin()),
                    std::make_move_iterator(part.end()));
  }
  return segments;
}

std::vector<TrainingSegment> WholeSentenceSegments(std::span<const Sentence> sentences) {
  std::vector<TrainingSegment> segments;
  for (const Sentence &sentence : sentences) {
    if (!sentence.tokens.empty()) {
      segments.push_back(MakeSegment(sentence, 0, sentence.size()));
    }
  }
  return segments;
}

}  // namespace wsner
