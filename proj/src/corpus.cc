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

#include "wsner/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "wsner/errors.h"

namespace wsner {
namespace {

std::vector<std::string> SplitFields(const std::string &line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string field;
  while (in >> field) fields.push_back(std::move(field));
  return fields;
}

// Resolves a possibly negative column index against a field count.
int ResolveColumn(int column, int count) {
  return column < 0 ? count + column : column;
}

bool Continues(const BioLabel &previous, const BioLabel &current) {
  return !previous.outside() && previous.type == current.type;
}

}  // namespace

std::string_view LabelSourceName(LabelSource source) {
  switch (source) {
    case LabelSource::kGold: return "gold";
    case LabelSource::kLexicon: return "lexicon";
    case LabelSource::kMlm: return "mlm";
    case LabelSource::kTagger: return "tagger";
    case LabelSource::kRule: return "rule";
    case LabelSource::kOutsideDefault: return "outside";
  }
  return "outside";
}

LabelSource ParseLabelSource(std::string_view name) {
  for (auto source : {LabelSource::kGold, LabelSource::kLexicon, LabelSource::kMlm,
                      LabelSource::kTagger, LabelSource::kRule,
                      LabelSource::kOutsideDefault}) {
    if (LabelSourceName(source) == name) return source;
  }
  throw ParseError("unknown label source '" + std::string(name) + "'", 0);
}

BioLabel BioLabel::Parse(std::string_view text) {
  if (text == "O") return Outside();
  if (text.size() > 2 && text[1] == '-') {
    if (text[0] == 'B') return Begin(std::string(text.substr(2)));
    if (text[0] == 'I') return Inside(std::string(text.substr(2)));
  }
  throw ParseError("invalid BIO label '" + std::string(text) + "'", 0);
}

std::string BioLabel::ToString() const {
  switch (tag) {
    case BioTag::kOutside: return "O";
    case BioTag::kBegin: return "B-" + type;
    case BioTag::kInside: return "I-" + type;
  }
  return "O";
}

std::vector<BioLabel> Sentence::labels() const {
  std::vector<BioLabel> result;
  result.reserve(tokens.size());
  for (const Token &token : tokens) result.push_back(token.label);
  return result;
}

std::vector<std::string> Sentence::words() const {
  std::vector<std::string> result;
  result.reserve(tokens.size());
  for (const Token &token : tokens) result.push_back(token.text);
  return result;
}

std::vector<std::string> Sentence::pos_tags() const {
  std::vector<std::string> result;
  result.reserve(tokens.size());
  for (const Token &token : tokens) result.push_back(token.pos);
  return result;
}

std::vector<Document> ReadCorpus(std::istream &in, const ColumnConfig &config,
                                 const ReadOptions &options) {
  std::vector<Document> docs;
  bool saw_marker = false;
  int next_sentence_id = options.first_sentence_id;
  int expected_columns = -1;

  Sentence current;
  std::vector<int> token_lines;

  auto flush_sentence = [&]() {
    if (current.tokens.empty()) return;
    std::vector<BioLabel> labels = current.labels();
    for (size_t i = 0; i < labels.size(); ++i) {
      if (labels[i].tag != BioTag::kInside) continue;
      if (i > 0 && Continues(labels[i - 1], labels[i])) continue;
      if (!config.repair_bio) {
        throw ParseError("invalid BIO transition to " + labels[i].ToString(),
                         token_lines[i]);
      }
      labels[i].tag = BioTag::kBegin;
      current.tokens[i].label.tag = BioTag::kBegin;
    }
    if (docs.empty()) docs.push_back(Document{"D0", {}});
    current.id = next_sentence_id++;
    docs.back().sentences.push_back(std::move(current));
    current = Sentence{};
    token_lines.clear();
  };

  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::vector<std::string> fields = SplitFields(line);
    if (fields.empty()) {
      flush_sentence();
      continue;
    }
    if (fields[0] == config.doc_marker) {
      flush_sentence();
      saw_marker = true;
      docs.push_back(Document{"D" + std::to_string(docs.size()), {}});
      continue;
    }
    const int count = static_cast<int>(fields.size());
    if (expected_columns < 0) expected_columns = count;
    if (count != expected_columns) {
      throw ParseError("expected " + std::to_string(expected_columns) +
                           " columns, found " + std::to_string(count),
                       line_number);
    }
    const int text_col = ResolveColumn(config.text_column, count);
    const int pos_col = config.pos_column ? ResolveColumn(*config.pos_column, count) : -1;
    const int label_col =
        config.label_column ? ResolveColumn(*config.label_column, count) : -1;
    auto out_of_range = [count](int col) { return col < 0 || col >= count; };
    if (out_of_range(text_col) || (config.pos_column && out_of_range(pos_col)) ||
        (config.label_column && out_of_range(label_col))) {
      throw ParseError("column index out of range for " + std::to_string(count) +
                           " columns",
                       line_number);
    }

    Token token;
    token.text = fields[text_col];
    if (pos_col >= 0) token.pos = fields[pos_col];
    if (label_col >= 0) {
      try {
        token.label = BioLabel::Parse(fields[label_col]);
      } catch (const ParseError &e) {
        throw ParseError(e.what(), line_number);
      }
      token.source = LabelSource::kGold;
    }
    for (int col = 0; col < count; ++col) {
      if (col != text_col && col != pos_col && col != label_col) {
        token.extra.push_back(fields[col]);
      }
    }
    current.tokens.push_back(std::move(token));
    token_lines.push_back(line_number);
  }
  flush_sentence();
  if (options.saw_marker != nullptr) *options.saw_marker = saw_marker;
  return docs;
}

std::vector<Document> ReadCorpusFile(const std::string &path,
                                     const ColumnConfig &config,
                                     const ReadOptions &options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file '" + path + "'");
  try {
    return ReadCorpus(in, config, options);
  } catch (const ParseError &e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

void WriteCorpus(std::ostream &out, std::span<const Document> docs,
                 const ColumnConfig &config) {
  const bool markers = docs.size() > 1;
  for (const Document &doc : docs) {
    if (markers) {
      out << config.doc_marker;
      size_t filler = 0;
      if (config.pos_column) ++filler;
      if (!doc.sentences.empty() && !doc.sentences[0].tokens.empty()) {
        filler += doc.sentences[0].tokens[0].extra.size();
      }
      for (size_t i = 0; i < filler; ++i) out << " -X-";
      if (config.label_column) out << " O";
      out << "\n\n";
    }
    for (const Sentence &sentence : doc.sentences) {
      for (const Token &token : sentence.tokens) {
        out << token.text;
        if (config.pos_column) out << ' ' << token.pos;
        for (const std::string &field : token.extra) out << ' ' << field;
        if (config.label_column) out << ' ' << token.label.ToString();
        out << '\n';
      }
      out << '\n';
    }
  }
}

void WriteCorpusFile(const std::string &path, std::span<const Document> docs,
                     const ColumnConfig &config) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write corpus file '" + path + "'");
  WriteCorpus(out, docs, config);
  if (!out) throw Error("write failed for '" + path + "'");
}

bool IsBioValid(std::span<const BioLabel> labels) {
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].tag == BioTag::kInside &&
        (i == 0 || !Continues(labels[i - 1], labels[i]))) {
      return false;
    }
    if (!labels[i].outside() && labels[i].type.empty()) return false;
  }
  return true;
}

int RepairBio(std::vector<BioLabel> &labels) {
  int repaired = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].tag == BioTag::kInside &&
        (i == 0 || !Continues(labels[i - 1], labels[i]))) {
      labels[i].tag = BioTag::kBegin;
      ++repaired;
    }
  }
  return repaired;
}

std::vector<EntitySpan> SpansFromBio(std::span<const BioLabel> labels,
                                     int sentence_id) {
  std::vector<EntitySpan> spans;
  const int n = static_cast<int>(labels.size());
  int i = 0;
  while (i < n) {
    if (labels[i].outside()) {
      ++i;
      continue;
    }
    EntitySpan span;
    span.sentence_id = sentence_id;
    span.start = i;
    span.type = labels[i].type;
    ++i;
    while (i < n && labels[i].tag == BioTag::kInside &&
           labels[i].type == span.type) {
      ++i;
    }
    span.end = i;
    spans.push_back(std::move(span));
  }
  return spans;
}

std::vector<EntitySpan> SpansFromBio(const Sentence &sentence) {
  std::vector<EntitySpan> spans = SpansFromBio(sentence.labels(), sentence.id);
  for (EntitySpan &span : spans) {
    span.source = sentence.tokens[span.start].source;
    span.confidence = sentence.tokens[span.start].confidence;
  }
  return spans;
}

std::vector<BioLabel> BioFromSpans(std::span<const EntitySpan> spans,
                                   int length) {
  std::vector<BioLabel> labels(length);
  std::vector<bool> used(length, false);
  for (const EntitySpan &span : spans) {
    if (span.start < 0 || span.end > length || span.start >= span.end) {
      throw Error("span [" + std::to_string(span.start) + ", " +
                  std::to_string(span.end) + ") out of range for length " +
                  std::to_string(length));
    }
    for (int i = span.start; i < span.end; ++i) {
      if (used[i]) {
        throw Error("overlapping spans at token " + std::to_string(i));
      }
      used[i] = true;
      labels[i] = i == span.start ? BioLabel::Begin(span.type)
                                  : BioLabel::Inside(span.type);
    }
  }
  return labels;
}

void ClearRange(Sentence &sentence, int start, int end) {
  const int n = sentence.size();
  start = std::max(start, 0);
  end = std::min(end, n);
  if (start >= end) return;
  // Extend left over the entity the range starts inside of.
  while (start > 0 && sentence.tokens[start].label.tag == BioTag::kInside) {
    --start;
  }
  // Extend right over the continuation of an entity cut at the end.
  while (end < n && sentence.tokens[end].label.tag == BioTag::kInside) ++end;
  for (int i = start; i < end; ++i) {
    Token &token = sentence.tokens[i];
    token.label = BioLabel::Outside();
    token.source = LabelSource::kOutsideDefault;
    token.confidence.reset();
  }
}

void WriteSpan(Sentence &sentence, const EntitySpan &span) {
  if (span.start < 0 || span.end > sentence.size() || span.start >= span.end) {
    throw Error("span out of range for sentence " + std::to_string(sentence.id));
  }
  ClearRange(sentence, span.start, span.end);
  for (int i = span.start; i < span.end; ++i) {
    Token &token = sentence.tokens[i];
    token.label = i == span.start ? BioLabel::Begin(span.type)
                                  : BioLabel::Inside(span.type);
    token.source = span.source;
    token.confidence = span.confidence;
  }
}

void StripLabels(Document &doc) {
  for (Sentence &sentence : doc.sentences) {
    for (Token &token : sentence.tokens) {
      token.label = BioLabel::Outside();
      token.source = LabelSource::kOutsideDefault;
      token.confidence.reset();
    }
  }
}

std::vector<Document> SplitIntoSentenceDocuments(std::span<const Document> docs) {
  std::vector<Document> result;
  for (const Document &doc : docs) {
    for (const Sentence &sentence : doc.sentences) {
      result.push_back(
          Document{doc.id + "/" + std::to_string(sentence.id), {sentence}});
    }
  }
  return result;
}

std::string SurfaceOf(const Sentence &sentence, int start, int end) {
  std::string surface;
  for (int i = start; i < end; ++i) {
    if (i > start) surface += ' ';
    surface += sentence.tokens[i].text;
  }
  return surface;
}

int CountTokens(std::span<const Document> docs) {
  int count = 0;
  for (const Document &doc : docs) {
    for (const Sentence &sentence : doc.sentences) count += sentence.size();
  }
  return count;
}

int CountSentences(std::span<const Document> docs) {
  int count = 0;
  for (const Document &doc : docs) count += static_cast<int>(doc.sentences.size());
  return count;
}

}  // namespace wsner
