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

#ifndef WSNER_LEXICON_H_
#define WSNER_LEXICON_H_

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wsner/corpus.h"
#include "wsner/span_detector.h"

namespace wsner {

class MlmBackend;

struct LexiconEntry {
  std::vector<std::string> words;
  int frequency = 0;

  std::string surface() const;
  friend bool operator==(const LexiconEntry &, const LexiconEntry &) = default;
};

// Per-class exemplar lists. Classes are kept in name order; entries keep
// insertion order.
//
// File format (UTF-8):
//   [PER]
//   Wasim Akram<TAB>12
//   Clinton
// A `[CLASS]` line opens a section, every other non-blank line is one surface
// form with optional tab-separated frequency. Lines starting with '#' are
// comments.
class Lexicon {
 public:
  // Appends an entry; an identical surface already in the class is ignored.
  void Add(const std::string &type, LexiconEntry entry);
  void Add(const std::string &type, const std::string &surface, int frequency = 0);

  const std::map<std::string, std::vector<LexiconEntry>> &classes() const {
    return classes_;
  }
  std::vector<std::string> class_names() const;
  const std::vector<LexiconEntry> &entries(const std::string &type) const;
  size_t size() const;
  bool empty() const { return size() == 0; }

  static Lexicon Parse(std::istream &in);
  static Lexicon Load(const std::string &path);
  void Write(std::ostream &out) const;
  void Save(const std::string &path) const;

  friend bool operator==(const Lexicon &, const Lexicon &) = default;

 private:
  std::map<std::string, std::vector<LexiconEntry>> classes_;
};

// A surface form listed under more than one class.
struct LexiconViolation {
  std::string surface;
  std::vector<std::string> classes;

  friend bool operator==(const LexiconViolation &, const LexiconViolation &) = default;
};

// Every surface present in two or more classes, sorted by surface. Empty
// means the lexicon is unambiguous.
std::vector<LexiconViolation> ValidateUnambiguous(const Lexicon &lexicon,
                                                  bool case_insensitive = false);

struct HarvestCandidate {
  std::vector<std::string> words;
  int frequency = 0;

  std::string surface() const;
  friend bool operator==(const HarvestCandidate &, const HarvestCandidate &) = default;
};

// Distinct surfaces of POS-pattern spans ranked by descending frequency, ties
// broken by surface. top_n <= 0 keeps everything. Throws Error if a token has
// no POS tag.
std::vector<HarvestCandidate> HarvestCandidates(std::span<const Document> docs,
                                                int top_n,
                                                const SpanPattern &pattern = {});

struct AnnotateOptions {
  bool case_insensitive = false;
};

struct AnnotationStats {
  int matched_entities = 0;
  int matched_tokens = 0;
  std::map<std::string, int> entities_per_class;
};

struct LexiconAnnotation {
  std::vector<Document> docs;
  std::vector<int> labeled;    // sentence ids in L
  std::vector<int> unlabeled;  // sentence ids in U
  AnnotationStats stats;
};

// Longest-match-first, left-to-right exact matching of lexicon surfaces.
// Matches that touch a Gold-sourced or already labeled token are skipped.
// Sentences with at least one match, or with any Gold label, go to L.
// Throws Error if the lexicon is ambiguous.
LexiconAnnotation AnnotateWithLexicon(std::span<const Document> docs,
                                      const Lexicon &lexicon,
                                      const AnnotateOptions &options = {});

// Keeps entries whose every word is a single subword for the backend, then
// the top_k most frequent per class (ties by surface). Backend failures are
// rethrown as BackendError with the backend's message.
Lexicon FilterForMlm(const Lexicon &lexicon, MlmBackend &backend, int top_k = 20);

}  // namespace wsner

#endif  // WSNER_LEXICON_H_
