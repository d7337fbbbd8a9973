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

#include "wsner/rules.h"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <regex>
#include <tuple>

#include <fmt/format.h>

#include "wsner/errors.h"

namespace wsner {

using nlohmann::json;

namespace {

using Words = std::vector<std::string>;

bool IsPunctuation(const std::string &text) {
  return !text.empty() && std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::ispunct(c) != 0;
  });
}

bool IsInteger(const std::string &text) {
  return !text.empty() && std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isdigit(c) != 0;
  });
}

Words WordsOf(const Sentence &sentence, int start, int end) {
  Words words;
  for (int i = start; i < end; ++i) words.push_back(sentence.tokens[i].text);
  return words;
}

std::string Join(const Words &words) {
  return fmt::format("{}", fmt::join(words, " "));
}

struct Seed {
  Words words;
  std::string type;
  double confidence = 0.0;
};

// Applies label edits to one document while enforcing the sieve's
// invariants: only mutable sentences change, protected tokens never change,
// and every effective edit yields exactly one trace.
class Editor {
 public:
  Editor(Document &doc, const RuleConfig &config, SieveContext &context,
         std::vector<RuleTrace> &traces, std::string rule)
      : doc_(doc), config_(config), context_(context), traces_(traces),
        rule_(std::move(rule)) {}

  bool Mutable(const Sentence &sentence) const {
    return context_.mutable_sentences == nullptr ||
           context_.mutable_sentences->count(sentence.id) > 0;
  }

  // Labels [start, end) of sentence `si` as one `type` entity carrying
  // `confidence`. Returns false and leaves the sentence alone when nothing
  // changes or a protected token would change.
  bool Write(size_t si, int start, int end, const std::string &type,
             std::optional<double> confidence, const std::string &reason) {
    Sentence &sentence = doc_.sentences[si];
    if (!Mutable(sentence)) return false;
    Sentence edited = sentence;
    WriteSpan(edited, EntitySpan{sentence.id, start, end, type, LabelSource::kRule, confidence});
    int lo = -1, hi = -1;
    for (int i = 0; i < sentence.size(); ++i) {
      const Token &old_token = sentence.tokens[i];
      Token &new_token = edited.tokens[i];
      if (old_token.label == new_token.label) {
        new_token.source = old_token.source;
        new_token.confidence = old_token.confidence;
        continue;
      }
      if (IsProtected(old_token)) return false;
      if (lo < 0) lo = i;
      hi = i + 1;
    }
    if (lo < 0) return false;
    RuleTrace trace;
    trace.rule = rule_;
    trace.sentence_id = sentence.id;
    trace.start = lo;
    trace.end = hi;
    trace.reason = reason;
    for (int i = lo; i < hi; ++i) {
      trace.before.push_back(sentence.tokens[i].label);
      trace.after.push_back(edited.tokens[i].label);
    }
    traces_.push_back(std::move(trace));
    sentence = std::move(edited);
    return true;
  }

  // High-confidence spans that may seed the confidence rules.
  std::vector<Seed> CollectSeeds() const {
    std::vector<Seed> seeds;
    for (const Sentence &sentence : doc_.sentences) {
      for (const EntitySpan &span : SpansFromBio(sentence)) {
        if (config_.multi_mention_types.count(span.type) == 0) continue;
        if (config_.seed_sources.count(span.source) == 0) continue;
        if (!span.confidence || *span.confidence <= config_.threshold) continue;
        seeds.push_back(Seed{WordsOf(sentence, span.start, span.end), span.type,
                             *span.confidence});
      }
    }
    return seeds;
  }

  // Gives every other mention of `seed.words` the seed's class: existing
  // spans with exactly that surface, and all-O occurrences when enabled.
  void Propagate(const Seed &seed) {
    const int n = static_cast<int>(seed.words.size());
    const std::string reason =
        fmt::format("'{}' seen as {} with confidence {:.4g}", Join(seed.words), seed.type,
                    seed.confidence);
    for (size_t si = 0; si < doc_.sentences.size(); ++si) {
      if (!Mutable(doc_.sentences[si])) continue;
      for (int p = 0; p + n <= doc_.sentences[si].size();) {
        const Sentence &sentence = doc_.sentences[si];
        if (WordsOf(sentence, p, p + n) != seed.words) {
          ++p;
          continue;
        }
        if (ExactSpanTypeDiffers(sentence, p, p + n, seed.type) ||
            (config_.propagate_to_unlabeled && AllOutside(sentence, p, p + n))) {
          Write(si, p, p + n, seed.type, seed.confidence, reason);
        }
        p += n;
      }
    }
  }

  Document &doc() { return doc_; }

 private:
  static bool AllOutside(const Sentence &sentence, int start, int end) {
    for (int i = start; i < end; ++i) {
      if (!sentence.tokens[i].label.outside()) return false;
    }
    return true;
  }

  static bool ExactSpanTypeDiffers(const Sentence &sentence, int start, int end,
                                   const std::string &type) {
    const BioLabel &first = sentence.tokens[start].label;
    if (first.tag != BioTag::kBegin || first.type == type) return false;
    for (int i = start + 1; i < end; ++i) {
      if (sentence.tokens[i].label != BioLabel::Inside(first.type)) return false;
    }
    return end == sentence.size() ||
           sentence.tokens[end].label != BioLabel::Inside(first.type);
  }

  Document &doc_;
  const RuleConfig &config_;
  SieveContext &context_;
  std::vector<RuleTrace> &traces_;
  std::string rule_;
};

// Resolves seeds per surface: the highest confidence wins, and equally
// confident seeds that disagree cancel out. Returned most confident first.
std::vector<Seed> ResolveSeeds(const std::vector<Seed> &seeds) {
  std::map<Words, std::vector<const Seed *>> by_surface;
  for (const Seed &seed : seeds) by_surface[seed.words].push_back(&seed);
  std::vector<Seed> winners;
  for (const auto &[words, group] : by_surface) {
    const Seed *best = group.front();
    bool tied = false;
    for (const Seed *seed : group) {
      if (seed->confidence > best->confidence) {
        best = seed;
        tied = false;
      } else if (seed->confidence == best->confidence && seed->type != best->type) {
        tied = true;
      }
    }
    if (!tied) winners.push_back(*best);
  }
  std::stable_sort(winners.begin(), winners.end(), [](const Seed &a, const Seed &b) {
    return a.confidence > b.confidence;
  });
  return winners;
}

void CompanySuffix(Editor &editor, const RuleConfig &config) {
  Document &doc = editor.doc();
  for (size_t si = 0; si < doc.sentences.size(); ++si) {
    for (const EntitySpan &span : SpansFromBio(doc.sentences[si])) {
      const Sentence &sentence = doc.sentences[si];
      if (span.type != "PER") continue;
      const std::string &last = sentence.tokens[span.end - 1].text;
      if (config.company_suffixes.count(last) > 0) {
        editor.Write(si, span.start, span.end, "ORG", span.confidence,
                     fmt::format("PER span ends in company suffix '{}'", last));
      } else if (span.end < sentence.size() &&
                 sentence.tokens[span.end].label.outside() &&
                 config.company_suffixes.count(sentence.tokens[span.end].text) > 0) {
        editor.Write(si, span.start, span.end + 1, "ORG", span.confidence,
                     fmt::format("PER span followed by company suffix '{}'",
                                 sentence.tokens[span.end].text));
      }
    }
  }
}

void LocOrgAdjacency(Editor &editor) {
  Document &doc = editor.doc();
  for (size_t si = 0; si < doc.sentences.size(); ++si) {
    const std::vector<EntitySpan> spans = SpansFromBio(doc.sentences[si]);
    for (size_t i = 0; i < spans.size();) {
      size_t j = i;
      bool has_loc = spans[i].type == "LOC", has_org = spans[i].type == "ORG";
      while (j + 1 < spans.size() && spans[j].end == spans[j + 1].start) {
        const std::string &a = spans[j].type, &b = spans[j + 1].type;
        if (!((a == "LOC" && b == "ORG") || (a == "ORG" && b == "LOC"))) break;
        ++j;
        has_loc |= spans[j].type == "LOC";
        has_org |= spans[j].type == "ORG";
      }
      if (j > i && has_loc && has_org) {
        // The merged span is only as trustworthy as its weakest part.
        std::optional<double> confidence = spans[i].confidence;
        for (size_t k = i + 1; k <= j && confidence; ++k) {
          confidence = spans[k].confidence
                           ? std::optional(std::min(*confidence, *spans[k].confidence))
                           : std::nullopt;
        }
        editor.Write(si, spans[i].start, spans[j].end, "ORG", confidence,
                     "adjacent LOC and ORG spans merged");
      }
      i = j + 1;
    }
  }
}

void SportsScore(Editor &editor, const std::regex &score) {
  Document &doc = editor.doc();
  for (size_t si = 0; si < doc.sentences.size(); ++si) {
    for (const EntitySpan &span : SpansFromBio(doc.sentences[si])) {
      if (span.type != "LOC") continue;
      const Sentence &sentence = doc.sentences[si];
      bool first = true, score_token = false;
      int integers = 0;
      for (int j = span.end; j < sentence.size() && sentence.tokens[j].label.outside(); ++j) {
        const std::string &text = sentence.tokens[j].text;
        if (IsPunctuation(text)) continue;
        if (first && std::regex_match(text, score)) score_token = true;
        first = false;
        if (IsInteger(text)) ++integers;
      }
      if (score_token || integers >= 2) {
        editor.Write(si, span.start, span.end, "ORG", span.confidence,
                     score_token ? "LOC span followed by a score"
                                 : "LOC span followed by two or more integers");
      }
    }
  }
}

void Ospd(Editor &editor) {
  Document &doc = editor.doc();
  struct Mention {
    size_t si;
    EntitySpan span;
  };
  std::map<Words, std::vector<Mention>> groups;
  for (size_t si = 0; si < doc.sentences.size(); ++si) {
    for (const EntitySpan &span : SpansFromBio(doc.sentences[si])) {
      groups[WordsOf(doc.sentences[si], span.start, span.end)].push_back({si, span});
    }
  }
  for (const auto &[words, mentions] : groups) {
    if (mentions.size() < 2) continue;
    std::map<std::string, int> votes;
    for (const Mention &m : mentions) ++votes[m.span.type];
    auto top = std::max_element(votes.begin(), votes.end(), [](const auto &a, const auto &b) {
      return a.second < b.second;
    });
    const std::string winner = top->first;
    const int best = top->second;
    if (2 * best <= static_cast<int>(mentions.size())) continue;
    for (const Mention &m : mentions) {
      if (m.span.type == winner) continue;
      editor.Write(m.si, m.span.start, m.span.end, winner, std::nullopt,
                   fmt::format("'{}' is {} in {} of {} mentions", Join(words), winner, best,
                               mentions.size()));
    }
  }
}

void MultiMention(Editor &editor) {
  for (const Seed &seed : ResolveSeeds(editor.CollectSeeds())) editor.Propagate(seed);
}

void AffixStrip(Editor &editor, const RuleConfig &config, SieveContext &context,
                std::vector<Sentence> &augmented) {
  if (context.tagger == nullptr || context.model == nullptr) {
    throw Error("affix_strip needs a trained tagger");
  }
  Document &doc = editor.doc();
  for (size_t si = 0; si < doc.sentences.size(); ++si) {
    if (!editor.Mutable(doc.sentences[si])) continue;
    for (const EntitySpan &span : SpansFromBio(doc.sentences[si])) {
      if (span.length() < 2 || config.seed_sources.count(span.source) == 0) continue;
      if (!span.confidence || *span.confidence <= config.threshold) continue;
      const Sentence &sentence = doc.sentences[si];
      int affix;
      if (config.company_suffixes.count(sentence.tokens[span.end - 1].text) > 0) {
        affix = span.end - 1;
      } else if (config.honorifics.count(sentence.tokens[span.start].text) > 0) {
        affix = span.start;
      } else {
        continue;
      }
      const int rest_start = affix == span.start ? span.start + 1 : span.start;
      const int rest_end = affix == span.start ? span.end : span.end - 1;

      // (a) The remainder is another name for the same entity.
      const Seed remainder{WordsOf(sentence, rest_start, rest_end), span.type,
                           *span.confidence};
      std::vector<Seed> seeds;
      for (Seed &seed : editor.CollectSeeds()) {
        if (seed.words == remainder.words) seeds.push_back(std::move(seed));
      }
      seeds.push_back(remainder);
      for (const Seed &seed : ResolveSeeds(seeds)) editor.Propagate(seed);

      // (b) Would the tagger still find the entity without the affix?
      Sentence stripped = doc.sentences[si];
      stripped.tokens.erase(stripped.tokens.begin() + affix);
      const int lo = rest_start - (affix < rest_start ? 1 : 0);
      const int hi = rest_end - (affix < rest_start ? 1 : 0);
      WriteSpan(stripped, EntitySpan{stripped.id, lo, hi, span.type, span.source,
                                     span.confidence});
      const TaggerPrediction prediction = context.tagger->Predict(*context.model, stripped);
      bool confident = false;
      for (const EntitySpan &predicted : prediction.spans) {
        if (predicted.start == lo && predicted.end == hi && predicted.type == span.type) {
          confident = predicted.confidence && *predicted.confidence > config.threshold;
        }
      }
      if (!confident) {
        stripped.id = context.next_augmented_id++;
        augmented.push_back(std::move(stripped));
      }
    }
  }
}

const std::set<std::string> &RuleNames() {
  static const std::set<std::string> names(DefaultRuleOrder().begin(),
                                           DefaultRuleOrder().end());
  return names;
}

}  // namespace

const std::vector<std::string> &DefaultRuleOrder() {
  static const std::vector<std::string> order{"company_suffix", "loc_org_adjacency",
                                              "sports_score",   "multi_mention",
                                              "affix_strip",    "ospd"};
  return order;
}

bool IsProtected(const Token &token) {
  return token.source == LabelSource::kGold || token.source == LabelSource::kLexicon;
}

void RuleConfig::Validate() const {
  if (company_suffixes.empty()) throw ConfigError("company suffix list is empty");
  if (honorifics.empty()) throw ConfigError("honorific list is empty");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError(fmt::format("confidence threshold {} outside (0, 1]", threshold));
  }
  try {
    std::regex check(score_pattern);
  } catch (const std::regex_error &e) {
    throw ConfigError(fmt::format("bad score pattern '{}': {}", score_pattern, e.what()));
  }
  std::set<std::string> seen;
  for (const std::string &name : order) {
    if (RuleNames().count(name) == 0) throw ConfigError("unknown rule '" + name + "'");
    if (!seen.insert(name).second) throw ConfigError("rule '" + name + "' listed twice");
  }
}

json RuleConfig::ToJson() const {
  std::vector<std::string> sources;
  for (LabelSource source : seed_sources) sources.emplace_back(LabelSourceName(source));
  return json{{"company_suffixes", company_suffixes},
              {"honorifics", honorifics},
              {"score_pattern", score_pattern},
              {"threshold", threshold},
              {"order", order},
              {"seed_sources", sources},
              {"multi_mention_types", multi_mention_types},
              {"propagate_to_unlabeled", propagate_to_unlabeled}};
}

RuleConfig RuleConfig::FromJson(const json &j) {
  RuleConfig config;
  if (!j.is_object()) throw ConfigError("rule config must be an object");
  try {
    for (const auto &[key, value] : j.items()) {
      if (key == "company_suffixes") {
        config.company_suffixes = value.get<std::set<std::string>>();
      } else if (key == "honorifics") {
        config.honorifics = value.get<std::set<std::string>>();
      } else if (key == "score_pattern") {
        config.score_pattern = value.get<std::string>();
      } else if (key == "threshold") {
        config.threshold = value.get<double>();
      } else if (key == "order") {
        config.order = value.get<std::vector<std::string>>();
      } else if (key == "seed_sources") {
        config.seed_sources.clear();
        for (const json &name : value) {
          config.seed_sources.insert(ParseLabelSource(name.get<std::string>()));
        }
      } else if (key == "multi_mention_types") {
        config.multi_mention_types = value.get<std::set<std::string>>();
      } else if (key == "propagate_to_unlabeled") {
        config.propagate_to_unlabeled = value.get<bool>();
      } else {
        throw ConfigError("unknown rule config key '" + key + "'");
      }
    }
  } catch (const json::exception &e) {
    throw ConfigError(std::string("bad rule config: ") + e.what());
  } catch (const ParseError &e) {
    throw ConfigError(std::string("bad rule config: ") + e.what());
  }
  config.Validate();
  return config;
}

json RuleTrace::ToJson() const {
  auto strings = [](const std::vector<BioLabel> &labels) {
    std::vector<std::string> out;
    for (const BioLabel &label : labels) out.push_back(label.ToString());
    return out;
  };
  return json{{"rule", rule},       {"sentence_id", sentence_id},
              {"start", start},     {"end", end},
              {"before", strings(before)}, {"after", strings(after)},
              {"reason", reason}};
}

RuleTrace RuleTrace::FromJson(const json &j) {
  RuleTrace trace;
  try {
    trace.rule = j.at("rule").get<std::string>();
    trace.sentence_id = j.at("sentence_id").get<int>();
    trace.start = j.at("start").get<int>();
    trace.end = j.at("end").get<int>();
    for (const json &label : j.at("before")) {
      trace.before.push_back(BioLabel::Parse(label.get<std::string>()));
    }
    for (const json &label : j.at("after")) {
      trace.after.push_back(BioLabel::Parse(label.get<std::string>()));
    }
    trace.reason = j.value("reason", std::string());
  } catch (const json::exception &e) {
    throw ParseError(std::string("bad trace record: ") + e.what(), 0);
  }
  return trace;
}

RuleResult ApplyRule(std::string_view rule, const Document &doc, const RuleConfig &config,
                     SieveContext &context) {
  RuleResult result{doc, {}, {}};
  Editor editor(result.document, config, context, result.traces, std::string(rule));
  if (rule == "company_suffix") {
    CompanySuffix(editor, config);
  } else if (rule == "loc_org_adjacency") {
    LocOrgAdjacency(editor);
  } else if (rule == "sports_score") {
    SportsScore(editor, std::regex(config.score_pattern));
  } else if (rule == "multi_mention") {
    MultiMention(editor);
  } else if (rule == "affix_strip") {
    AffixStrip(editor, config, context, result.augmented);
  } else if (rule == "ospd") {
    Ospd(editor);
  } else {
    throw ConfigError("unknown rule '" + std::string(rule) + "'");
  }
  return result;
}

RuleResult ApplySieve(const Document &doc, const RuleConfig &config,
                      SieveContext &context) {
  config.Validate();
  RuleResult result{doc, {}, {}};
  for (const std::string &rule : config.order) {
    RuleResult step = ApplyRule(rule, result.document, config, context);
    result.document = std::move(step.document);
    for (Sentence &sentence : step.augmented) result.augmented.push_back(std::move(sentence));
    for (RuleTrace &trace : step.traces) result.traces.push_back(std::move(trace));
  }
  return result;
}

void ReplayTraces(Document &doc, std::span<const RuleTrace> traces) {
  std::map<int, Sentence *> by_id;
  for (Sentence &sentence : doc.sentences) by_id[sentence.id] = &sentence;
  for (const RuleTrace &trace : traces) {
    auto it = by_id.find(trace.sentence_id);
    if (it == by_id.end()) {
      throw Error(fmt::format("trace names unknown sentence {}", trace.sentence_id));
    }
    Sentence &sentence = *it->second;
    const int n = trace.end - trace.start;
    if (trace.start < 0 || trace.end > sentence.size() || n <= 0 ||
        static_cast<int>(trace.before.size()) != n ||
        static_cast<int>(trace.after.size()) != n) {
      throw Error(fmt::format("trace range out of bounds in sentence {}", sentence.id));
    }
    for (int i = 0; i < n; ++i) {
      if (sentence.tokens[trace.start + i].label != trace.before[i]) {
        throw Error(fmt::format("trace does not match sentence {} at token {}",
                                sentence.id, trace.start + i));
      }
      sentence.tokens[trace.start + i].label = trace.after[i];
    }
  }
}

}  // namespace wsner
