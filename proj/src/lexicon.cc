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

#include "wsner/lexicon.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "wsner/errors.h"
#include "wsner/mlm_backend.h"

namespace wsner {
namespace {

std::vector<std::string> SplitWords(const std::string &text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string word;
  while (in >> word) words.push_back(std::move(word));
  return words;
}

std::string JoinWords(const std::vector<std::string> &words) {
  std::string out;
  for (const std::string &w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string Lower(std::string text) {
  for (char &c : text) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return text;
}

std::string Trim(const std::string &text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

std::string LexiconEntry::surface() const { return JoinWords(words); }
std::string HarvestCandidate::surface() const { return JoinWords(words); }

void Lexicon::Add(const std::string &type, LexiconEntry entry) {
  if (type.empty()) throw Error("lexicon class name is empty");
  if (entry.words.empty()) throw Error("empty lexicon entry for class " + type);
  std::vector<LexiconEntry> &list = classes_[type];
  for (const LexiconEntry &existing : list) {
    if (existing.words == entry.words) return;
  }
  list.push_back(std::move(entry));
}

void Lexicon::Add(const std::string &type, const std::string &surface,
                  int frequency) {
  Add(type, LexiconEntry{SplitWords(surface), frequency});
}

std::vector<std::string> Lexicon::class_names() const {
  std::vector<std::string> names;
  for (const auto &[name, _] : classes_) names.push_back(name);
  return names;
}

const std::vector<LexiconEntry> &Lexicon::entries(const std::string &type) const {
  static const std::vector<LexiconEntry> kEmpty;
  auto it = classes_.find(type);
  return it == classes_.end() ? kEmpty : it->second;
}

size_t Lexicon::size() const {
  size_t total = 0;
  for (const auto &[_, list] : classes_) total += list.size();
  return total;
}

Lexicon Lexicon::Parse(std::istream &in) {
  Lexicon lexicon;
  std::string current;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    if (trimmed.front() == '[' && trimmed.back() == ']') {
      current = Trim(trimmed.substr(1, trimmed.size() - 2));
      if (current.empty()) throw ParseError("empty class header", line_number);
      lexicon.classes_[current];
      continue;
    }
    if (current.empty()) {
      throw ParseError("entry before any [CLASS] header", line_number);
    }
    int frequency = 0;
    std::string surface = line;
    const auto tab = line.find('\t');
    if (tab != std::string::npos) {
      surface = line.substr(0, tab);
      const std::string count = Trim(line.substr(tab + 1));
      if (!count.empty()) {
        try {
          size_t used = 0;
          frequency = std::stoi(count, &used);
          if (used != count.size() || frequency < 0) throw std::invalid_argument(count);
        } catch (const std::exception &) {
          throw ParseError("invalid frequency '" + count + "'", line_number);
        }
      }
    }
    std::vector<std::string> words = SplitWords(surface);
    if (words.empty()) throw ParseError("empty surface form", line_number);
    lexicon.Add(current, LexiconEntry{std::move(words), frequency});
  }
  return lexicon;
}

Lexicon Lexicon::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon file '" + path + "'");
  try {
    return Parse(in);
  } catch (const ParseError &e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
}

void Lexicon::Write(std::ostream &out) const {
  bool first = true;
  for (const auto &[type, list] : classes_) {
    if (!first) out << '\n';
    first = false;
    out << '[' << type << "]\n";
    for (const LexiconEntry &entry : list) {
      out << entry.surface();
      if (entry.frequency > 0) out << '\t' << entry.frequency;
      out << '\n';
    }
  }
}

void Lexicon::Save(const std::string &path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write lexicon file '" + path + "'");
  Write(out);
}

std::vector<LexiconViolation> ValidateUnambiguous(const Lexicon &lexicon,
                                                  bool case_insensitive) {
  std::map<std::string, std::set<std::string>> owners;
  for (const auto &[type, list] : lexicon.classes()) {
    for (const LexiconEntry &entry : list) {
      std::string key = entry.surface();
      if (case_insensitive) key = Lower(key);
      owners[key].insert(type);
    }
  }
  std::vector<LexiconViolation> violations;
  for (const auto &[surface, types] : owners) {
    if (types.size() >= 2) {
      violations.push_back({surface, std::vector<std::string>(types.begin(), types.end())});
    }
  }
  return violations;
}

std::vector<HarvestCandidate> HarvestCandidates(std::span<const Document> docs,
                                                int top_n,
                                                const SpanPattern &pattern) {
  pattern.Validate();
  std::map<std::vector<std::string>, int> counts;
  for (const Document &doc : docs) {
    for (const Sentence &sentence : doc.sentences) {
      std::vector<std::string> tags = sentence.pos_tags();
      for (size_t i = 0; i < tags.size(); ++i) {
        if (tags[i].empty()) {
          throw Error("sentence " + std::to_string(sentence.id) +
                      " has no POS tag at token " + std::to_string(i));
        }
      }
      for (const auto &[start, end] : DetectSpans(tags, pattern)) {
        std::vector<std::string> words;
        for (int i = start; i < end; ++i) words.push_back(sentence.tokens[i].text);
        ++counts[words];
      }
    }
  }
  std::vector<HarvestCandidate> ranked;
  ranked.reserve(counts.size());
  for (auto &[words, frequency] : counts) ranked.push_back({words, frequency});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const HarvestCandidate &a, const HarvestCandidate &b) {
                     if (a.frequency != b.frequency) return a.frequency > b.frequency;
                     return a.surface() < b.surface();
                   });
  if (top_n > 0 && static_cast<int>(ranked.size()) > top_n) ranked.resize(top_n);
  return ranked;
}

LexiconAnnotation AnnotateWithLexicon(std::span<const Document> docs,
                                      const Lexicon &lexicon,
                                      const AnnotateOptions &options) {
  std::vector<LexiconViolation> violations =
      ValidateUnambiguous(lexicon, options.case_insensitive);
  if (!violations.empty()) {
    throw Error("lexicon is ambiguous: '" + violations.front().surface +
                "' is listed under several classes");
  }
  auto normalize = [&](const std::string &w) {
    return options.case_insensitive ? Lower(w) : w;
  };

  struct Pattern {
    std::vector<std::string> words;
    std::string type;
  };
  // First word -> patterns, longest first.
  std::unordered_map<std::string, std::vector<Pattern>> index;
  for (const auto &[type, list] : lexicon.classes()) {
    for (const LexiconEntry &entry : list) {
      Pattern pattern{{}, type};
      for (const std::string &w : entry.words) pattern.words.push_back(normalize(w));
      index[pattern.words.front()].push_back(std::move(pattern));
    }
  }
  for (auto &[_, patterns] : index) {
    std::sort(patterns.begin(), patterns.end(),
              [](const Pattern &a, const Pattern &b) {
                if (a.words.size() != b.words.size()) {
                  return a.words.size() > b.words.size();
                }
                return a.words < b.words;
              });
  }

  LexiconAnnotation result;
  result.docs.assign(docs.begin(), docs.end());
  for (Document &doc : result.docs) {
    for (Sentence &sentence : doc.sentences) {
      // Gold annotation counts as labeled even when it has no entities.
      bool has_gold = false;
      for (const Token &token : sentence.tokens) {
        if (token.source == LabelSource::kGold) has_gold = true;
      }
      auto free_token = [&](int i) {
        const Token &token = sentence.tokens[i];
        return token.label.outside() && token.source != LabelSource::kGold;
      };
      bool matched = false;
      const int n = sentence.size();
      int i = 0;
      while (i < n) {
        auto it = index.find(normalize(sentence.tokens[i].text));
        int advance = 1;
        if (it != index.end()) {
          for (const Pattern &pattern : it->second) {
            const int len = static_cast<int>(pattern.words.size());
            if (i + len > n) continue;
            bool ok = true;
            for (int k = 0; k < len && ok; ++k) {
              ok = normalize(sentence.tokens[i + k].text) == pattern.words[k] &&
                   free_token(i + k);
            }
            if (!ok) continue;
            WriteSpan(sentence, EntitySpan{sentence.id, i, i + len, pattern.type,
                                           LabelSource::kLexicon, std::nullopt});
            ++result.stats.matched_entities;
            result.stats.matched_tokens += len;
            ++result.stats.entities_per_class[pattern.type];
            matched = true;
            advance = len;
            break;
          }
        }
        i += advance;
      }
      if (matched || has_gold) {
        result.labeled.push_back(sentence.id);
      } else {
        result.unlabeled.push_back(sentence.id);
      }
    }
  }
  return result;
}

Lexicon FilterForMlm(const Lexicon &lexicon, MlmBackend &backend, int top_k) {
  std::vector<std::string> words;
  std::set<std::string> seen;
  for (const auto &[_, list] : lexicon.classes()) {
    for (const LexiconEntry &entry : list) {
      for (const std::string &w : entry.words) {
        if (seen.insert(w).second) words.push_back(w);
      }
    }
  }
  std::vector<int> counts;
  try {
    counts = backend.SubwordCounts(words);
  } catch (const BackendError &e) {
    throw BackendError(std::string("subword query failed: ") + e.what());
  }
  if (counts.size() != words.size()) {
    throw BackendError("subword query returned wrong number of counts");
  }
  std::unordered_map<std::string, int> pieces;
  for (size_t i = 0; i < words.size(); ++i) pieces[words[i]] = counts[i];

  Lexicon filtered;
  for (const auto &[type, list] : lexicon.classes()) {
    std::vector<LexiconEntry> kept;
    for (const LexiconEntry &entry : list) {
      const bool single = std::all_of(entry.words.begin(), entry.words.end(),
                                      [&](const std::string &w) { return pieces[w] == 1; });
      if (single) kept.push_back(entry);
    }
    std::stable_sort(kept.begin(), kept.end(),
                     [](const LexiconEntry &a, const LexiconEntry &b) {
                       if (a.frequency != b.frequency) return a.frequency > b.frequency;
                       return a.surface() < b.surface();
                     });
    if (top_k > 0 && static_cast<int>(kept.size()) > top_k) kept.resize(top_k);
    for (LexiconEntry &entry : kept) filtered.Add(type, std::move(entry));
  }
  return filtered;
}

}  // namespace wsner
