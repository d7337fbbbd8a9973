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

#ifndef WSNER_WINDOW_FILTER_H_
#define WSNER_WINDOW_FILTER_H_

#include <span>
#include <string>
#include <vector>

#include "wsner/corpus.h"

namespace wsner {

// A contiguous slice [start, end) of a sentence used as one training
// example.
struct TrainingSegment {
  int sentence_id = 0;
  int start = 0;
  int end = 0;
  std::vector<Token> tokens;

  friend bool operator==(const TrainingSegment &, const TrainingSegment &) = default;
};

struct WindowOptions {
  // Initial half-width of the window grown around each labeled entity.
  int window = 5;
  // O-labeled NNPS tokens are walls too, not only NNP.
  bool nnps_walls = true;
  // Emit the wall-free pieces of sentences that have no labeled entity.
  bool admit_unlabeled = false;
};

// True for an O-labeled proper noun, which is treated as a likely unlabeled
// entity.
bool IsWall(const Token &token, const WindowOptions &options);

// Grows a window of `options.window` tokens around each labeled entity, then
// keeps expanding each side until a wall, the sentence edge, or a
// neighbouring window. Overlapping windows merge. Throws Error if window < 1.
std::vector<TrainingSegment> FilterSentence(const Sentence &sentence,
                                            const WindowOptions &options = {});

// FilterSentence over every sentence of `sentences`, in order.
std::vector<TrainingSegment> FilterSentences(std::span<const Sentence> sentences,
                                             const WindowOptions &options = {});

// Whole sentences as segments, for training without window filtering.
std::vector<TrainingSegment> WholeSentenceSegments(std::span<const Sentence> sentences);

}  // namespace wsner

#endif  // WSNER_WINDOW_FILTER_H_
