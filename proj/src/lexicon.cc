//
// Copyright 2026 The hncl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "hncl/lexicon.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "hncl/error.h"

namespace hncl {

namespace {

constexpr std::string_view kBuiltinColor = R"(concept: color
class: blue, red, green, yellow, black, white, brown, gray, orange
)";

constexpr std::string_view kBuiltinObject = R"(concept: object
# COCO category names
class: person, bicycle, car, motorbike, aeroplane, bus, train, truck, boat, traffic light, fire hydrant, stop sign, parking meter, bench, bird, cat, dog, horse, sheep, cow, elephant, bear, zebra, giraffe, backpack, umbrella, handbag, tie, suitcase, frisbee, skis, snowboard, sports ball, kite, baseball bat, baseball glove, skateboard, surfboard, tennis racket, bottle, wine glass, cup, fork, knife, spoon, bowl, banana, apple, sandwich, orange, broccoli, carrot, hot dog, pizza, donut, cake, chair, sofa, potted plant, bed, dining table, toilet, tv monitor, laptop, mouse, remote, keyboard, cell phone, microwave, oven, toaster, sink, refrigerator, book, clock, vase, scissors, teddy bear, hair drier, toothbrush
)";

constexpr std::string_view kBuiltinLocation = R"(concept: location
sym: left <-> right
sym: above <-> below
sym: under <-> over
sym: foreground <-> background
sym: in front of <-> behind
sym: back <-> front
)";

constexpr std::string_view kBuiltinSize = R"(concept: size
sym: large <-> small
sym: little <-> big
sym: tall <-> short
dir: long -> short
sym: thin <-> fat
sym: huge <-> tiny
dir: giant -> tiny
)";

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Lowercased, single-spaced keyword.
std::string CanonicalKeyword(std::string_view raw) {
  Caption tokens = Tokenize(raw);
  std::string out;
  for (const std::string& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    for (char c : t) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  return out;
}

std::vector<std::string> SplitOn(std::string_view s, std::string_view sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    parts.push_back(Trim(s.substr(pos, next == std::string_view::npos
                                            ? std::string_view::npos
                                            : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + sep.size();
  }
  return parts;
}

}  // namespace

std::string_view ConceptName(ConceptId concept_id) {
  switch (concept_id) {
    case ConceptId::kColor: return "color";
    case ConceptId::kObject: return "object";
    case ConceptId::kLocation: return "location";
    case ConceptId::kSize: return "size";
  }
  return "unknown";
}

ConceptId ParseConcept(std::string_view name) {
  for (ConceptId c : kAllConcepts) {
    if (ConceptName(c) == name) return c;
  }
  throw UsageError("unknown concept '" + std::string(name) +
                   "' (expected color, object, location or size)");
}

ConceptLexicon::ConceptLexicon(ConceptId concept_id,
                               std::vector<SubstitutionRule> rules)
    : concept_(concept_id), rules_(std::move(rules)) {
  if (rules_.empty()) throw DataError("lexicon has no rules");
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    SubstitutionRule& rule = rules_[r];
    for (std::string& m : rule.members) m = CanonicalKeyword(m);
    for (const std::string& m : rule.members) {
      if (m.empty()) throw DataError("empty keyword in rule " + std::to_string(r + 1));
    }
    if (rule.kind == SubstitutionRule::Kind::kClosedClass) {
      if (rule.members.size() < 2) {
        throw DataError("class rule " + std::to_string(r + 1) +
                        " needs at least two members");
      }
    } else if (rule.members.size() != 2 || rule.members[0] == rule.members[1]) {
      throw DataError("pair rule " + std::to_string(r + 1) +
                      " needs two distinct keywords");
    }

    std::size_t sources = rule.kind == SubstitutionRule::Kind::kDirectedPair
                              ? 1
                              : rule.members.size();
    for (std::size_t i = 0; i < sources; ++i) {
      const std::string& kw = rule.members[i];
      if (!rule_of_.emplace(kw, r).second) {
        throw DataError("duplicate keyword '" + kw + "' in rule " +
                        std::to_string(r + 1));
      }
      keywords_.push_back(kw);
      Entry entry{Tokenize(kw), kw, r};
      by_first_token_[entry.tokens.front()].push_back(std::move(entry));
    }
  }
  for (auto& [first, entries] : by_first_token_) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) {
                       return a.tokens.size() > b.tokens.size();
                     });
  }
}

std::vector<std::string> ConceptLexicon::Replacements(
    std::string_view keyword) const {
  std::vector<std::string> out;
  auto it = rule_of_.find(CanonicalKeyword(keyword));
  if (it == rule_of_.end()) return out;
  const SubstitutionRule& rule = rules_[it->second];
  switch (rule.kind) {
    case SubstitutionRule::Kind::kClosedClass:
      for (const std::string& m : rule.members) {
        if (m != it->first) out.push_back(m);
      }
      break;
    case SubstitutionRule::Kind::kSymmetricPair:
      out.push_back(rule.members[0] == it->first ? rule.members[1]
                                                 : rule.members[0]);
      break;
    case SubstitutionRule::Kind::kDirectedPair:
      out.push_back(rule.members[1]);
      break;
  }
  return out;
}

std::vector<MatchSpan> ConceptLexicon::FindSpans(const Caption& caption) const {
  std::vector<std::string> norm;
  norm.reserve(caption.size());
  for (const std::string& t : caption) norm.push_back(NormalizeToken(t));

  std::vector<MatchSpan> spans;
  std::size_t pos = 0;
  while (pos < norm.size()) {
    auto it = by_first_token_.find(norm[pos]);
    bool matched = false;
    if (it != by_first_token_.end()) {
      for (const Entry& e : it->second) {
        if (pos + e.tokens.size() > norm.size()) continue;
        if (std::equal(e.tokens.begin(), e.tokens.end(), norm.begin() + pos)) {
          spans.push_back({pos, e.tokens.size(), e.keyword, e.rule});
          pos += e.tokens.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) ++pos;
  }
  return spans;
}

bool ConceptLexicon::Matches(const Caption& caption) const {
  return !FindSpans(caption).empty();
}

ConceptLexicon ParseLexicon(std::string_view text) {
  std::optional<ConceptId> concept_id;
  std::vector<SubstitutionRule> rules;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> DataError {
    return DataError("lexicon line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string trimmed = Trim(line);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    std::size_t colon = trimmed.find(':');
    if (colon == std::string::npos) throw fail("expected '<key>: <value>'");
    std::string key = Trim(std::string_view(trimmed).substr(0, colon));
    std::string value = Trim(std::string_view(trimmed).substr(colon + 1));
    if (key == "concept") {
      if (concept_id) throw fail("duplicate concept header");
      try {
        concept_id = ParseConcept(value);
      } catch (const UsageError& e) {
        throw fail(e.what());
      }
      continue;
    }
    if (!concept_id) throw fail("rule before 'concept:' header");
    SubstitutionRule rule;
    if (key == "class") {
      rule.kind = SubstitutionRule::Kind::kClosedClass;
      rule.members = SplitOn(value, ",");
    } else if (key == "sym") {
      rule.kind = SubstitutionRule::Kind::kSymmetricPair;
      rule.members = SplitOn(value, "<->");
    } else if (key == "dir") {
      rule.kind = SubstitutionRule::Kind::kDirectedPair;
      rule.members = SplitOn(value, "->");
    } else {
      throw fail("unknown rule kind '" + key + "'");
    }
    rules.push_back(std::move(rule));
  }
  if (!concept_id) throw DataError("lexicon is missing its 'concept:' header");
  return ConceptLexicon(*concept_id, std::move(rules));
}

const ConceptLexicon& BuiltinLexicon(ConceptId concept_id) {
  static const ConceptLexicon color = ParseLexicon(kBuiltinColor);
  static const ConceptLexicon object = ParseLexicon(kBuiltinObject);
  static const ConceptLexicon location = ParseLexicon(kBuiltinLocation);
  static const ConceptLexicon size = ParseLexicon(kBuiltinSize);
  switch (concept_id) {
    case ConceptId::kColor: return color;
    case ConceptId::kObject: return object;
    case ConceptId::kLocation: return location;
    case ConceptId::kSize: return size;
  }
  return color;
}

ConceptLexicon LoadLexicon(std::string_view source, ConceptId concept_id) {
  if (source == "builtin") return BuiltinLexicon(concept_id);
  std::ifstream in{std::string(source)};
  if (!in) throw DataError("cannot open lexicon file '" + std::string(source) + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  ConceptLexicon lexicon = ParseLexicon(buffer.str());
  if (lexicon.concept_id() != concept_id) {
    throw DataError("lexicon file '" + std::string(source) + "' declares concept '" +
                    std::string(ConceptName(lexicon.concept_id())) + "', expected '" +
                    std::string(ConceptName(concept_id)) + "'");
  }
  return lexicon;
}

Caption Splice(const Caption& caption, const MatchSpan& span,
               std::string_view replacement) {
  Caption out(caption.begin(), caption.begin() + span.token_start);
  Caption words = Tokenize(replacement);
  std::string_view first = caption[span.token_start];
  std::string_view last = caption[span.token_start + span.token_len - 1];
  words.front().insert(0, LeadingPunct(first));
  words.back() += TrailingPunct(last);
  out.insert(out.end(), words.begin(), words.end());
  out.insert(out.end(), caption.begin() + span.token_start + span.token_len,
             caption.end());
  return out;
}

std::optional<Caption> GenerateHardNegative(const Caption& caption,
                                            const ConceptLexicon& lexicon,
                                            Rng& rng) {
  std::vector<MatchSpan> spans = lexicon.FindSpans(caption);
  if (spans.empty()) return std::nullopt;
  const MatchSpan& span = spans[rng.UniformIndex(spans.size())];
  std::vector<std::string> options = lexicon.Replacements(span.keyword);
  return Splice(caption, span, options[rng.UniformIndex(options.size())]);
}

std::vector<Caption> EnumerateNegatives(const Caption& caption,
                                        const ConceptLexicon& lexicon) {
  std::vector<MatchSpan> spans = lexicon.FindSpans(caption);
  if (spans.empty()) {
    throw DataError("caption '" + Join(caption) + "' has no " +
                    std::string(ConceptName(lexicon.concept_id())) + " keyword");
  }
  std::vector<Caption> out;
  for (const std::string& r : lexicon.Replacements(spans.front().keyword)) {
    out.push_back(Splice(caption, spans.front(), r));
  }
  return out;
}

}  // namespace hncl
