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

#ifndef WSNER_CORPUS_H_
#define WSNER_CORPUS_H_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wsner {

enum class BioTag { kOutside, kBegin, kInside };

// Where a token label came from. Confidence is carried only for kMlm and
// kTagger.
enum class LabelSource { kGold, kLexicon, kMlm, kTagger, kRule, kOutsideDefault };

std::string_view LabelSourceName(LabelSource source);
LabelSource ParseLabelSource(std::string_view name);

struct BioLabel {
  BioTag tag = BioTag::kOutside;
  std::string type;  // empty iff tag == kOutside

  static BioLabel Outside() { return {}; }
  static BioLabel Begin(std::string type) { return {BioTag::kBegin, std::move(type)}; }
  static BioLabel Inside(std::string type) { return {BioTag::kInside, std::move(type)}; }

  // Parses "O", "B-X" or "I-X". Throws ParseError on anything else.
  static BioLabel Parse(std::string_view text);

  bool outside() const { return tag == BioTag::kOutside; }
  std::string ToString() const;

  friend bool operator==(const BioLabel &, const BioLabel &) = default;
};

struct Token {
  std::string text;
  std::string pos;
  // Columns between POS and label (e.g. chunk tags), preserved verbatim.
  std::vector<std::string> extra;
  BioLabel label;
  LabelSource source = LabelSource::kOutsideDefault;
  std::optional<double> confidence;

  friend bool operator==(const Token &, const Token &) = default;
};

struct Sentence {
  int id = 0;
  std::vector<Token> tokens;

  int size() const { return static_cast<int>(tokens.size()); }
  std::vector<BioLabel> labels() const;
  std::vector<std::string> words() const;
  std::vector<std::string> pos_tags() const;

  friend bool operator==(const Sentence &, const Sentence &) = default;
};

struct Document {
  std::string id;
  std::vector<Sentence> sentences;

  friend bool operator==(const Document &, const Document &) = default;
};

// Half-open token range [start, end) carrying one entity class.
struct EntitySpan {
  int sentence_id = 0;
  int start = 0;
  int end = 0;
  std::string type;
  LabelSource source = LabelSource::kOutsideDefault;
  std::optional<double> confidence;

  int length() const { return end - start; }
  bool Overlaps(const EntitySpan &other) const {
    return start < other.end && other.start < end;
  }

  friend bool operator==(const EntitySpan &, const EntitySpan &) = default;
};

// Column layout of the token-per-line format. Negative indexes count from
// the end of the line (-1 is the last column).
struct ColumnConfig {
  int text_column = 0;
  std::optional<int> pos_column = 1;
  std::optional<int> label_column = -1;
  std::string doc_marker = "-DOCSTART-";
  // When false an I-X that does not continue X is a ParseError instead of
  // being rewritten to B-X.
  bool repair_bio = true;
};

struct ReadOptions {
  int first_sentence_id = 0;
  // Set to whether the stream contained at least one document marker.
  bool *saw_marker = nullptr;
};

// Reads a whitespace-separated token-per-line stream. Blank lines separate
// sentences; lines whose first column equals the doc marker separate
// documents. A stream without markers is one document. Sentence ids are
// assigned in ascending order; document ids are "D<n>" in stream order.
std::vector<Document> ReadCorpus(std::istream &in, const ColumnConfig &config,
                                 const ReadOptions &options = {});
std::vector<Document> ReadCorpusFile(const std::string &path,
                                     const ColumnConfig &config,
                                     const ReadOptions &options = {});

// Writes documents in the layout read by ReadCorpus: text, POS, extra
// columns, label. When there is more than one document each starts with a
// marker line.
void WriteCorpus(std::ostream &out, std::span<const Document> docs,
                 const ColumnConfig &config);
void WriteCorpusFile(const std::string &path, std::span<const Document> docs,
                     const ColumnConfig &config);

bool IsBioValid(std::span<const BioLabel> labels);

// Rewrites every I-X that does not continue an X entity to B-X. Returns the
// number of rewritten labels.
int RepairBio(std::vector<BioLabel> &labels);

// Maximal B-X (I-X)* runs. Source and confidence are taken from the first
// token of each run when a sentence is given.
std::vector<EntitySpan> SpansFromBio(std::span<const BioLabel> labels,
                                     int sentence_id = 0);
std::vector<EntitySpan> SpansFromBio(const Sentence &sentence);

// Inverse of SpansFromBio. Throws Error on overlapping or out-of-range spans.
std::vector<BioLabel> BioFromSpans(std::span<const EntitySpan> spans,
                                   int length);

// Writes a span's labels into the sentence with the given provenance.
// Existing entities that overlap the range are cleared first so the result
// stays BIO-valid.
void WriteSpan(Sentence &sentence, const EntitySpan &span);

// Sets tokens in [start, end) to O/kOutsideDefault, and clears the remainder
// of any entity cut by the range.
void ClearRange(Sentence &sentence, int start, int end);

// Resets every label to O with source kOutsideDefault.
void StripLabels(Document &doc);

// One document per sentence; ids are "<doc id>/<sentence id>".
std::vector<Document> SplitIntoSentenceDocuments(std::span<const Document> docs);

// Space-joined token texts of [start, end).
std::string SurfaceOf(const Sentence &sentence, int start, int end);

int CountTokens(std::span<const Document> docs);
int CountSentences(std::span<const Document> docs);

}  // namespace wsner

#endif  // WSNER_CORPUS_H_
