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

#ifndef HNCL_LEXICON_H_
#define HNCL_LEXICON_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hncl/random.h"
#include "hncl/text.h"

namespace hncl {

enum class ConceptId { kColor, kObject, kLocation, kSize };

inline constexpr std::array<ConceptId, 4> kAllConcepts = {
    ConceptId::kColor, ConceptId::kObject, ConceptId::kLocation,
    ConceptId::kSize};

std::string_view ConceptName(ConceptId concept_id);
// Throws UsageError on an unknown name.
ConceptId ParseConcept(std::string_view name);

struct SubstitutionRule {
  enum class Kind { kClosedClass, kSymmetricPair, kDirectedPair };

  Kind kind = Kind::kClosedClass;
  // closed class: all members; pairs: {source, target}.
  std::vector<std::string> members;
};

struct MatchSpan {
  std::size_t token_start = 0;
  std::size_t token_len = 0;
  std::string keyword;
  std::size_t rule = 0;  // index into ConceptLexicon::rules()
};

// Keywords and substitution rules for one concept. Immutable once built;
// construction validates the rule set.
class ConceptLexicon {
 public:
  // Throws DataError on an empty/degenerate rule or a keyword that can be
  // matched by more than one rule.
  ConceptLexicon(ConceptId concept_id, std::vector<SubstitutionRule> rules);

  ConceptId concept_id() const { return concept_; }
  const std::vector<SubstitutionRule>& rules() const { return rules_; }

  // Matchable keywords in declaration order. A directed rule contributes
  // only its source; its target is matchable only through another rule.
  const std::vector<std::string>& keywords() const { return keywords_; }

  // Legal replacements for a matchable keyword, in declaration order.
  // Empty if the keyword is not matchable.
  std::vector<std::string> Replacements(std::string_view keyword) const;

  // Non-overlapping matches, left to right, longest keyword first at each
  // position. Case-insensitive, whole tokens only.
  std::vector<MatchSpan> FindSpans(const Caption& caption) const;

  bool Matches(const Caption& caption) const;

 private:
  struct Entry {
    std::vector<std::string> tokens;  // normalized keyword tokens
    std::string keyword;
    std::size_t rule;
  };

  ConceptId concept_;
  std::vector<SubstitutionRule> rules_;
  std::vector<std::string> keywords_;
  std::unordered_map<std::string, std::size_t> rule_of_;
  // First keyword token -> entries, longest first.
  std::unordered_map<std::string, std::vector<Entry>> by_first_token_;
};

// The built-in keyword lists for each concept.
const ConceptLexicon& BuiltinLexicon(ConceptId concept_id);

// Parses the line-oriented lexicon format:
//   # comment
//   concept: color
//   class: blue, red, green
//   sym: under <-> over
//   dir: long -> short
ConceptLexicon ParseLexicon(std::string_view text);

// `source` is "builtin" or a path to a lexicon file. The file's concept
// header must agree with `concept_id`.
ConceptLexicon LoadLexicon(std::string_view source, ConceptId concept_id);

// Replaces the tokens of `span` by `replacement`, keeping surrounding tokens
// and the span's outer punctuation verbatim.
Caption Splice(const Caption& caption, const MatchSpan& span,
               std::string_view replacement);

// One hard negative: a uniformly chosen span rewritten with a uniformly
// chosen legal replacement. nullopt when the caption has no keyword.
std::optional<Caption> GenerateHardNegative(const Caption& caption,
                                            const ConceptLexicon& lexicon,
                                            Rng& rng);

// Every legal rewrite of the first matched span, in declaration order.
// Throws DataError when the caption has no keyword.
std::vector<Caption> EnumerateNegatives(const Caption& caption,
                                        const ConceptLexicon& lexicon);

}  // namespace hncl

#endif  // HNCL_LEXICON_H_
