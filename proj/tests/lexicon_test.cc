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

#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hncl/error.h"
#include "hncl/io.h"
#include "hncl/lexicon.h"
#include "hncl/random.h"
#include "hncl/text.h"
#include "test_util.h"

namespace hncl {
namespace {

using testing::TempDir;
using testing::Words;

const Caption kFigureCaption = Words("a white cat sits under a black open umbrella");

std::vector<std::string> Joined(const std::vector<Caption>& captions) {
  std::vector<std::string> out;
  for (const Caption& c : captions) out.push_back(Join(c));
  return out;
}

TEST(TextTest, NormalizeStripsEdgePunctuationAndLowercases) {
  EXPECT_EQ(NormalizeToken("Umbrella."), "umbrella");
  EXPECT_EQ(NormalizeToken("(White,"), "white");
  EXPECT_EQ(NormalizeToken("don't"), "don't");
  EXPECT_EQ(NormalizeToken("..."), "");
  EXPECT_EQ(LeadingPunct("(White,"), "(");
  EXPECT_EQ(TrailingPunct("(White,"), ",");
}

TEST(TextTest, TokenizeSplitsOnAnyWhitespace) {
  EXPECT_EQ(Tokenize("  a\tred\n car "), (Caption{"a", "red", "car"}));
  EXPECT_TRUE(Tokenize("   ").empty());
  EXPECT_EQ(Join(Tokenize("a  red car")), "a red car");
}

TEST(ConceptTest, NamesRoundTrip) {
  for (ConceptId c : kAllConcepts) EXPECT_EQ(ParseConcept(ConceptName(c)), c);
  EXPECT_THROW(ParseConcept("texture"), UsageError);
}

TEST(BuiltinLexiconTest, ColorIsOneClassOfNine) {
  const ConceptLexicon& lex = BuiltinLexicon(ConceptId::kColor);
  EXPECT_EQ(lex.keywords().size(), 9u);
  ASSERT_EQ(lex.rules().size(), 1u);
  EXPECT_EQ(lex.rules()[0].kind, SubstitutionRule::Kind::kClosedClass);
  EXPECT_EQ(lex.keywords().front(), "blue");
}

TEST(BuiltinLexiconTest, ObjectIsOneClassOfEighty) {
  const ConceptLexicon& lex = BuiltinLexicon(ConceptId::kObject);
  EXPECT_EQ(lex.keywords().size(), 80u);
  EXPECT_EQ(lex.rules().size(), 1u);
  EXPECT_EQ(std::set<std::string>(lex.keywords().begin(), lex.keywords().end()).size(), 80u);
}

TEST(BuiltinLexiconTest, LocationIsSixSymmetricPairs) {
  const ConceptLexicon& lex = BuiltinLexicon(ConceptId::kLocation);
  EXPECT_EQ(lex.keywords().size(), 12u);
  ASSERT_EQ(lex.rules().size(), 6u);
  for (const SubstitutionRule& r : lex.rules()) {
    EXPECT_EQ(r.kind, SubstitutionRule::Kind::kSymmetricPair);
  }
}

TEST(BuiltinLexiconTest, SizeIsFiveSymmetricPairsAndTwoDirectedRules) {
  const ConceptLexicon& lex = BuiltinLexicon(ConceptId::kSize);
  std::size_t sym = 0, dir = 0;
  for (const SubstitutionRule& r : lex.rules()) {
    (r.kind == SubstitutionRule::Kind::kSymmetricPair ? sym : dir) += 1;
  }
  EXPECT_EQ(sym, 5u);
  EXPECT_EQ(dir, 2u);
  // Ten pair members plus the two directed sources.
  EXPECT_EQ(lex.keywords().size(), 12u);
  EXPECT_EQ(lex.Replacements("long"), (std::vector<std::string>{"short"}));
  EXPECT_EQ(lex.Replacements("giant"), (std::vector<std::string>{"tiny"}));
  EXPECT_EQ(lex.Replacements("short"), (std::vector<std::string>{"tall"}));
  EXPECT_EQ(lex.Replacements("tiny"), (std::vector<std::string>{"huge"}));
}

TEST(FindSpansTest, FigureCaptionColor) {
  const auto spans = BuiltinLexicon(ConceptId::kColor).FindSpans(kFigureCaption);
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].token_start, 1u);
  EXPECT_EQ(spans[0].keyword, "white");
  EXPECT_EQ(spans[1].token_start, 6u);
  EXPECT_EQ(spans[1].keyword, "black");
}

TEST(FindSpansTest, FigureCaptionLocation) {
  const auto spans = BuiltinLexicon(ConceptId::kLocation).FindSpans(kFigureCaption);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0].keyword, "under");
  EXPECT_EQ(spans[0].token_start, 4u);
}

TEST(FindSpansTest, NoMatch) {
  EXPECT_TRUE(BuiltinLexicon(ConceptId::kColor).FindSpans(Words("a person riding a horse")).empty());
}

TEST(FindSpansTest, MultiWordKeywordsAndCase) {
  const auto loc = BuiltinLexicon(ConceptId::kLocation).FindSpans(Words("a dog In Front Of a car"));
  ASSERT_EQ(loc.size(), 1u);
  EXPECT_EQ(loc[0].token_start, 2u);
  EXPECT_EQ(loc[0].token_len, 3u);
  const auto obj = BuiltinLexicon(ConceptId::kObject).FindSpans(Words("a red fire hydrant."));
  ASSERT_EQ(obj.size(), 1u);
  EXPECT_EQ(obj[0].keyword, "fire hydrant");
  EXPECT_EQ(obj[0].token_len, 2u);
}

TEST(FindSpansTest, LongestKeywordWinsAtAPosition) {
  ConceptLexicon lex(ConceptId::kObject,
                     {{SubstitutionRule::Kind::kClosedClass, {"fire", "fire hydrant", "cat"}}});
  const auto spans = lex.FindSpans(Words("the fire hydrant near the fire"));
  ASSERT_EQ(spans.size(), 2u);
  EXPECT_EQ(spans[0].keyword, "fire hydrant");
  EXPECT_EQ(spans[1].keyword, "fire");
  EXPECT_EQ(spans[1].token_start, 5u);
}

TEST(FindSpansTest, PluralsAreNotMatched) {
  EXPECT_TRUE(BuiltinLexicon(ConceptId::kObject).FindSpans(Words("two cats")).empty());
}

TEST(HardNegativeTest, DirectedRuleHasOneOutput) {
  Rng rng(3);
  const auto neg = GenerateHardNegative(Words("the long road"), BuiltinLexicon(ConceptId::kSize), rng);
  ASSERT_TRUE(neg.has_value());
  EXPECT_EQ(Join(*neg), "the short road");
}

TEST(HardNegativeTest, AbsentWithoutKeyword) {
  Rng rng(3);
  EXPECT_FALSE(GenerateHardNegative(Words("a person riding a horse"),
                                    BuiltinLexicon(ConceptId::kColor), rng));
}

TEST(HardNegativeTest, ChangesExactlyOneSpanToAnotherColor) {
  const ConceptLexicon& lex = BuiltinLexicon(ConceptId::kColor);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const Caption neg = *GenerateHardNegative(kFigureCaption, lex, rng);
    ASSERT_EQ(neg.size(), kFigureCaption.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < neg.size(); ++i) {
      if (neg[i] != kFigureCaption[i]) {
        ++changed;
        EXPECT_TRUE(i == 1 || i == 6);
        EXPECT_FALSE(lex.Replacements(neg[i]).empty());
        seen.insert(neg[i]);
      }
    }
    EXPECT_EQ(changed, 1u);
  }
  // Both spans and all 9 colors show up across seeds.
  EXPECT_EQ(seen.size(), 9u);
}

TEST(HardNegativeTest, DeterministicPerSeed) {
  const ConceptLexicon& lex = BuiltinLexicon(ConceptId::kObject);
  const Caption c = Words("a small red dog left a large blue truck");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed), b(seed);
    EXPECT_EQ(GenerateHardNegative(c, lex, a), GenerateHardNegative(c, lex, b));
  }
}

TEST(HardNegativeTest, MultiWordReplacementChangesLength) {
  ConceptLexicon lex(ConceptId::kLocation,
                     {{SubstitutionRule::Kind::kSymmetricPair, {"in front of", "behind"}}});
  Rng rng(0);
  EXPECT_EQ(Join(*GenerateHardNegative(Words("a cat in front of a car"), lex, rng)),
            "a cat behind a car");
}

TEST(SpliceTest, KeepsOuterPunctuation) {
  const Caption c = Words("a cat (under) the table.");
  const auto spans = BuiltinLexicon(ConceptId::kLocation).FindSpans(c);
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(Join(Splice(c, spans[0], "over")), "a cat (over) the table.");
}

TEST(SpliceTest, SymmetricSubstitutionIsAnInvolution) {
  const ConceptLexicon& lex = BuiltinLexicon(ConceptId::kLocation);
  const Caption once = EnumerateNegatives(kFigureCaption, lex).at(0);
  const Caption twice = EnumerateNegatives(once, lex).at(0);
  EXPECT_EQ(twice, kFigureCaption);
}

TEST(EnumerateTest, ColorVariesFirstSpanInDeclarationOrder) {
  const auto negs = Joined(EnumerateNegatives(kFigureCaption, BuiltinLexicon(ConceptId::kColor)));
  ASSERT_EQ(negs.size(), 8u);
  EXPECT_EQ(negs[0], "a blue cat sits under a black open umbrella");
  EXPECT_NE(std::find(negs.begin(), negs.end(), "a brown cat sits under a black open umbrella"),
            negs.end());
  for (const std::string& n : negs) {
    EXPECT_NE(n.find("black open umbrella"), std::string::npos) << n;
    EXPECT_EQ(n.find("white"), std::string::npos) << n;
  }
}

TEST(EnumerateTest, LocationHasOneVariant) {
  EXPECT_EQ(Joined(EnumerateNegatives(kFigureCaption, BuiltinLexicon(ConceptId::kLocation))),
            (std::vector<std::string>{"a white cat sits over a black open umbrella"}));
}

TEST(EnumerateTest, DirectedRuleNeverReverses) {
  EXPECT_EQ(Joined(EnumerateNegatives(Words("the short fence"), BuiltinLexicon(ConceptId::kSize))),
            (std::vector<std::string>{"the tall fence"}));
}

TEST(EnumerateTest, ObjectGivesSeventyNine) {
  EXPECT_EQ(EnumerateNegatives(Words("a dog on a bench"), BuiltinLexicon(ConceptId::kObject)).size(),
            79u);
}

TEST(EnumerateTest, NoSpanIsAnError) {
  EXPECT_THROW(EnumerateNegatives(Words("a person riding"), BuiltinLexicon(ConceptId::kColor)),
               DataError);
}

TEST(ParseLexiconTest, AllRuleKindsAndComments) {
  const ConceptLexicon lex = ParseLexicon(
      "# sizes\n"
      "concept: size\n"
      "\n"
      "sym: big <-> small\n"
      "dir: giant -> tiny\n"
      "class: a1, a2 , a3\n");
  EXPECT_EQ(lex.concept_id(), ConceptId::kSize);
  ASSERT_EQ(lex.rules().size(), 3u);
  EXPECT_EQ(lex.keywords(), (std::vector<std::string>{"big", "small", "giant", "a1", "a2", "a3"}));
  EXPECT_EQ(lex.Replacements("a2"), (std::vector<std::string>{"a1", "a3"}));
}

TEST(ParseLexiconTest, DuplicateKeywordAcrossRules) {
  EXPECT_THROW(ParseLexicon("concept: color\nclass: red, blue\nsym: red <-> green\n"), DataError);
}

TEST(ParseLexiconTest, DegenerateRules) {
  EXPECT_THROW(ParseLexicon("concept: color\nclass: red\n"), DataError);
  EXPECT_THROW(ParseLexicon("concept: color\nsym: red <-> red\n"), DataError);
  EXPECT_THROW(ParseLexicon("concept: color\ndir: red -> \n"), DataError);
  EXPECT_THROW(ParseLexicon("class: red, blue\n"), DataError);
  EXPECT_THROW(ParseLexicon("concept: color\nswap: red, blue\n"), DataError);
  EXPECT_THROW(ParseLexicon("concept: color\nconcept: size\nclass: a, b\n"), DataError);
}

TEST(LoadLexiconTest, FileMustMatchConcept) {
  TempDir dir("lexicon");
  WriteFile(dir / "loc.txt", "concept: location\nsym: up <-> down\n");
  const ConceptLexicon lex = LoadLexicon((dir / "loc.txt").string(), ConceptId::kLocation);
  EXPECT_EQ(lex.keywords().size(), 2u);
  EXPECT_THROW(LoadLexicon((dir / "loc.txt").string(), ConceptId::kColor), DataError);
  EXPECT_THROW(LoadLexicon((dir / "missing.txt").string(), ConceptId::kColor), DataError);
  EXPECT_EQ(LoadLexicon("builtin", ConceptId::kColor).keywords().size(), 9u);
}

}  // namespace
}  // namespace hncl
