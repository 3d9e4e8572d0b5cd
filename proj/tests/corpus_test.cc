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

#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hncl/corpus.h"
#include "hncl/error.h"
#include "hncl/io.h"
#include "hncl/lexicon.h"
#include "test_util.h"

namespace hncl {
namespace {

using testing::TempDir;
using testing::Words;

constexpr std::size_t kWhite = 5;
constexpr std::size_t kBlack = 4;
constexpr std::size_t kBrown = 6;

std::size_t ObjectIndex(const std::string& name) {
  const auto& p = ObjectPalette();
  return static_cast<std::size_t>(std::find(p.begin(), p.end(), name) - p.begin());
}

std::size_t RelationIndex(const std::string& word) {
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    if (RelationWord(r) == word) return r;
  }
  return kNumRelations;
}

SceneSpec CatUnderUmbrella() {
  SceneSpec s;
  s.entities = {{ObjectIndex("cat"), kWhite, EntitySize::kLarge},
                {ObjectIndex("umbrella"), kBlack, EntitySize::kSmall}};
  s.relation = RelationIndex("under");
  return s;
}

std::vector<double> Noiseless(const SceneSpec& s, std::size_t v = 12) {
  Rng rng(0);
  return FeaturizeScene(s, v, 0.0, rng);
}

TEST(PaletteTest, WordsComeFromTheLexicons) {
  EXPECT_EQ(ColorWord(kWhite), "white");
  EXPECT_EQ(ColorWord(kBlack), "black");
  EXPECT_EQ(ColorWord(kBrown), "brown");
  EXPECT_EQ(ObjectPalette().size(), kMaxObjectVocab);
  const auto& objects = BuiltinLexicon(ConceptId::kObject).keywords();
  for (const std::string& o : ObjectPalette()) {
    EXPECT_NE(std::find(objects.begin(), objects.end(), o), objects.end()) << o;
  }
  for (std::size_t r = 0; r < kNumRelations; ++r) {
    EXPECT_FALSE(BuiltinLexicon(ConceptId::kLocation).Replacements(RelationWord(r)).empty());
  }
  EXPECT_LT(ObjectIndex("umbrella"), 12u);
  EXPECT_LT(ObjectIndex("cat"), 12u);
}

TEST(RenderCaptionTest, Templates) {
  EXPECT_EQ(Join(RenderCaption(CatUnderUmbrella())), "a large white cat under a small black umbrella");
  SceneSpec bird;
  bird.entities = {{ObjectIndex("bird"), 1, EntitySize::kSmall}};
  EXPECT_EQ(Join(RenderCaption(bird)), "a small red bird");
}

TEST(RenderCaptionTest, SwappingColorsChangesExactlyTheColorTokens) {
  SceneSpec a = CatUnderUmbrella();
  SceneSpec b = a;
  std::swap(b.entities[0].color, b.entities[1].color);
  const Caption ca = RenderCaption(a), cb = RenderCaption(b);
  ASSERT_EQ(ca.size(), cb.size());
  std::vector<std::size_t> diff;
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (ca[i] != cb[i]) diff.push_back(i);
  }
  EXPECT_EQ(diff, (std::vector<std::size_t>{2, 7}));
}

TEST(SceneTest, Validation) {
  SceneSpec s = CatUnderUmbrella();
  EXPECT_NO_THROW(ValidateScene(s, 12));
  s.relation.reset();
  EXPECT_THROW(ValidateScene(s, 12), UsageError);
  SceneSpec lone;
  lone.entities = {{0, 0, EntitySize::kSmall}};
  lone.relation = 0;
  EXPECT_THROW(ValidateScene(lone, 12), UsageError);
  lone.relation.reset();
  lone.entities[0].color = kNumColors;
  EXPECT_THROW(ValidateScene(lone, 12), UsageError);
  EXPECT_THROW(ValidateScene(CatUnderUmbrella(), 3), UsageError);
}

TEST(FeaturizeTest, DimensionAndPadding) {
  EXPECT_EQ(SceneFeatureDim(12), 2 * (12 * 9 + 1) + 12);
  SceneSpec one;
  one.entities = {{2, 3, EntitySize::kLarge}};
  const auto f = Noiseless(one);
  ASSERT_EQ(f.size(), SceneFeatureDim(12));
  const std::size_t block = 12 * 9 + 1;
  for (std::size_t i = block; i < f.size(); ++i) EXPECT_EQ(f[i], 0.0);
  EXPECT_EQ(f[2 * 9 + 3], 1.0);
  EXPECT_EQ(f[block - 1], 1.0);
}

TEST(FeaturizeTest, ColorChangeStaysInsideFirstEntityBlock) {
  SceneSpec brown = CatUnderUmbrella();
  brown.entities[0].color = kBrown;
  const auto a = Noiseless(CatUnderUmbrella()), b = Noiseless(brown);
  const std::size_t block = 12 * 9 + 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) EXPECT_LT(i, block - 1) << i;
  }
  EXPECT_NE(a, b);
}

TEST(FeaturizeTest, ColorSwapKeepsColorMarginalsButNotFeatures) {
  SceneSpec swapped = CatUnderUmbrella();
  std::swap(swapped.entities[0].color, swapped.entities[1].color);
  const auto a = Noiseless(CatUnderUmbrella()), b = Noiseless(swapped);
  EXPECT_NE(a, b);
  const std::size_t V = 12, block = V * 9 + 1;
  for (std::size_t c = 0; c < 9; ++c) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t e = 0; e < 2; ++e) {
      for (std::size_t o = 0; o < V; ++o) {
        ma += a[e * block + o * 9 + c];
        mb += b[e * block + o * 9 + c];
      }
    }
    EXPECT_EQ(ma, mb) << "color " << c;
  }
}

TEST(FeaturizeTest, DeterministicAndNoisy) {
  EXPECT_EQ(Noiseless(CatUnderUmbrella()), Noiseless(CatUnderUmbrella()));
  Rng rng(5);
  const auto clean = Noiseless(CatUnderUmbrella());
  const auto noisy = FeaturizeScene(CatUnderUmbrella(), 12, 0.05, rng);
  double sq = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) sq += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
  const double sd = std::sqrt(sq / static_cast<double>(clean.size()));
  EXPECT_NEAR(sd, 0.05, 0.01);
}

// Brute force over every scene with 3 objects and 3 colors.
TEST(FeaturizeTest, InjectiveOnSmallVocabulary) {
  const std::size_t V = 3;
  std::vector<Entity> entities;
  for (std::size_t o = 0; o < V; ++o)
    for (std::size_t c = 0; c < 3; ++c)
      for (EntitySize s : {EntitySize::kSmall, EntitySize::kLarge}) entities.push_back({o, c, s});
  std::set<std::vector<double>> seen;
  std::size_t scenes = 0;
  for (const Entity& e : entities) {
    SceneSpec s;
    s.entities = {e};
    seen.insert(Noiseless(s, V));
    ++scenes;
    for (const Entity& f : entities) {
      for (std::size_t r = 0; r < kNumRelations; ++r) {
        SceneSpec t;
        t.entities = {e, f};
        t.relation = r;
        seen.insert(Noiseless(t, V));
        ++scenes;
      }
    }
  }
  EXPECT_EQ(scenes, 18u + 18u * 18u * 12u);
  EXPECT_EQ(seen.size(), scenes);
}

std::multiset<std::string> Multiset(const Caption& c) { return {c.begin(), c.end()}; }

TEST(GenerateCorpusTest, FullBindingFractionGivesSwappedPairs) {
  CorpusConfig cfg;
  cfg.n_samples = 4;
  cfg.binding_critical_fraction = 1.0;
  cfg.seed = 7;
  const auto s = GenerateCorpus(cfg);
  ASSERT_EQ(s.size(), 4u);
  for (std::size_t i : {0u, 2u}) {
    EXPECT_EQ(Multiset(s[i].caption), Multiset(s[i + 1].caption));
    EXPECT_NE(s[i].caption, s[i + 1].caption);
    EXPECT_NE(s[i].image_features, s[i + 1].image_features);
  }
}

TEST(GenerateCorpusTest, SingleSampleMatchesGrammar) {
  CorpusConfig cfg;
  cfg.n_samples = 1;
  cfg.binding_critical_fraction = 0.0;
  cfg.seed = 0;
  const auto s = GenerateCorpus(cfg);
  ASSERT_EQ(s.size(), 1u);
  const std::regex grammar("a (small|large) [a-z]+ [a-z]+( [a-z ]+ a (small|large) [a-z]+ [a-z]+)?");
  EXPECT_TRUE(std::regex_match(Join(s[0].caption), grammar)) << Join(s[0].caption);
  EXPECT_EQ(Join(s[0].caption), Join(RenderCaption(*s[0].scene)));
  EXPECT_EQ(s[0].id, "s000000");
}

TEST(GenerateCorpusTest, InvalidConfigs) {
  CorpusConfig cfg;
  cfg.n_samples = 0;
  EXPECT_THROW(GenerateCorpus(cfg), UsageError);
  cfg.n_samples = 5;
  cfg.binding_critical_fraction = 1.5;
  EXPECT_THROW(GenerateCorpus(cfg), UsageError);
  cfg.binding_critical_fraction = 0.5;
  cfg.object_vocab_size = 81;
  EXPECT_THROW(GenerateCorpus(cfg), UsageError);
  cfg.object_vocab_size = 12;
  cfg.noise_sigma = -1.0;
  EXPECT_THROW(GenerateCorpus(cfg), UsageError);
}

TEST(GenerateCorpusTest, BindingFractionCountsTwoEntitySamples) {
  for (double f : {0.0, 0.5, 1.0}) {
    CorpusConfig cfg;
    cfg.n_samples = 20000;
    cfg.binding_critical_fraction = f;
    cfg.seed = 11;
    const auto s = GenerateCorpus(cfg);
    std::size_t two = 0, paired = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i].scene->entities.size() == 2) ++two;
    }
    for (std::size_t i = 0; i + 1 < s.size();) {
      SceneSpec swapped = *s[i].scene;
      if (swapped.entities.size() == 2) std::swap(swapped.entities[0].color, swapped.entities[1].color);
      if (swapped.entities.size() == 2 && swapped != *s[i].scene && swapped == *s[i + 1].scene) {
        paired += 2;
        i += 2;
      } else {
        ++i;
      }
    }
    EXPECT_NEAR(static_cast<double>(paired) / static_cast<double>(two), f, 0.03) << f;
  }
}

TEST(GenerateCorpusTest, EverySampleIsConsistent) {
  CorpusConfig cfg;
  cfg.n_samples = 500;
  cfg.seed = 3;
  for (const PairedSample& s : GenerateCorpus(cfg)) {
    ASSERT_TRUE(s.scene.has_value());
    EXPECT_EQ(s.caption, RenderCaption(*s.scene));
    EXPECT_EQ(s.image_features.size(), SceneFeatureDim(12));
    EXPECT_EQ(s.concepts, DetectConcepts(s.caption));
    EXPECT_TRUE(s.concepts.count(ConceptId::kColor));
    EXPECT_EQ(s.concepts.count(ConceptId::kLocation) == 1, s.scene->entities.size() == 2);
  }
}

TEST(GenerateCorpusTest, ByteIdenticalAcrossRuns) {
  TempDir dir("corpus");
  CorpusConfig cfg;
  cfg.n_samples = 300;
  cfg.seed = 42;
  WriteJsonl(dir / "a.jsonl", GenerateCorpus(cfg));
  WriteJsonl(dir / "b.jsonl", GenerateCorpus(cfg));
  EXPECT_EQ(ReadFile(dir / "a.jsonl"), ReadFile(dir / "b.jsonl"));
  cfg.seed = 43;
  WriteJsonl(dir / "c.jsonl", GenerateCorpus(cfg));
  EXPECT_NE(ReadFile(dir / "a.jsonl"), ReadFile(dir / "c.jsonl"));
}

TEST(JsonlTest, RoundTripIsExact) {
  TempDir dir("jsonl");
  CorpusConfig cfg;
  cfg.n_samples = 50;
  cfg.seed = 1;
  const auto samples = GenerateCorpus(cfg);
  WriteJsonl(dir / "c.jsonl", samples);
  const auto back = IngestJsonl(dir / "c.jsonl");
  ASSERT_EQ(back.size(), samples.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].id, samples[i].id);
    EXPECT_EQ(back[i].caption, samples[i].caption);
    EXPECT_EQ(back[i].image_features, samples[i].image_features);
    EXPECT_EQ(back[i].concepts, samples[i].concepts);
  }
}

TEST(JsonlTest, ValidLinesTextOnlyAndEmptyFile) {
  TempDir dir("jsonl");
  WriteFile(dir / "three.jsonl",
            "{\"id\": \"a\", \"caption\": \"a red car\"}\n"
            "{\"id\": \"b\", \"caption\": \"a person\", \"concepts\": [\"object\"]}\n"
            "{\"id\": \"c\", \"caption\": \"a blue cat\", \"features\": [0.5, 1]}\n");
  const auto s = IngestJsonl(dir / "three.jsonl");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_TRUE(s[0].image_features.empty());
  EXPECT_EQ(s[0].concepts, (std::set<ConceptId>{ConceptId::kColor, ConceptId::kObject}));
  EXPECT_EQ(s[1].concepts, (std::set<ConceptId>{ConceptId::kObject}));
  EXPECT_EQ(s[2].image_features, (std::vector<double>{0.5, 1.0}));
  WriteFile(dir / "empty.jsonl", "");
  EXPECT_TRUE(IngestJsonl(dir / "empty.jsonl").empty());
}

void ExpectLineError(const std::string& text, const std::string& line) {
  TempDir dir("jsonl");
  WriteFile(dir / "bad.jsonl", text);
  try {
    IngestJsonl(dir / "bad.jsonl");
    FAIL() << "expected a data error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.jsonl:" + line + ":"), std::string::npos)
        << e.what();
  }
}

TEST(JsonlTest, SchemaErrorsNameTheLine) {
  const std::string good = "{\"id\": \"a\", \"caption\": \"a red car\"}\n";
  ExpectLineError(good + "{\"id\": \"b\"}\n", "2");
  ExpectLineError("not json\n", "1");
  ExpectLineError(good + good + "{\"id\": 3, \"caption\": \"x\"}\n", "3");
  ExpectLineError("{\"id\": \"a\", \"caption\": \"x\", \"features\": [1, \"y\"]}\n", "1");
  ExpectLineError(
      "{\"id\": \"a\", \"caption\": \"x\", \"features\": [1, 2]}\n"
      "{\"id\": \"b\", \"caption\": \"x\", \"features\": [1]}\n",
      "2");
  ExpectLineError("{\"id\": \"a\", \"caption\": \"x\", \"concepts\": [\"texture\"]}\n", "1");
  EXPECT_THROW(IngestJsonl("/nonexistent/corpus.jsonl"), DataError);
}

std::vector<PairedSample> TextOnly(const std::vector<std::string>& captions) {
  std::vector<PairedSample> out;
  for (const std::string& c : captions) {
    PairedSample s;
    s.caption = Words(c);
    out.push_back(s);
  }
  return out;
}

TEST(CorpusStatsTest, Examples) {
  const ConceptLexicon* color[] = {&BuiltinLexicon(ConceptId::kColor)};
  EXPECT_EQ(CorpusStats(TextOnly({"a red car", "a person"}), color).at(ConceptId::kColor), 1u);
  const ConceptLexicon* object[] = {&BuiltinLexicon(ConceptId::kObject)};
  const auto figure = TextOnly({"a white cat sits under a black open umbrella.",
                                "a person standing on a loading platform next to a train.",
                                "a man leans near the door of a creatively painted tour bus."});
  EXPECT_EQ(CorpusStats(figure, object).at(ConceptId::kObject), 3u);
  std::vector<const ConceptLexicon*> all;
  for (ConceptId c : kAllConcepts) all.push_back(&BuiltinLexicon(c));
  const auto empty = CorpusStats(std::vector<PairedSample>{}, all);
  ASSERT_EQ(empty.size(), 4u);
  for (const auto& [c, n] : empty) EXPECT_EQ(n, 0u);
}

TEST(CorpusStatsTest, FilteredCountEqualsEnumerableCount) {
  CorpusConfig cfg;
  cfg.n_samples = 400;
  cfg.seed = 9;
  const auto samples = GenerateCorpus(cfg);
  for (ConceptId c : kAllConcepts) {
    const ConceptLexicon& lex = BuiltinLexicon(c);
    std::size_t enumerable = 0;
    for (const PairedSample& s : samples) {
      try {
        EnumerateNegatives(s.caption, lex);
        ++enumerable;
      } catch (const DataError&) {
      }
    }
    const ConceptLexicon* lexicons[] = {&lex};
    EXPECT_EQ(CorpusStats(samples, lexicons).at(c), enumerable);
    EXPECT_EQ(FilterByConcept(samples, lex).size(), enumerable);
  }
}

TEST(ManifestTest, RecordsConfigAndHash) {
  TempDir dir("manifest");
  CorpusConfig cfg;
  cfg.n_samples = 20;
  cfg.seed = 77;
  WriteJsonl(dir / "c.jsonl", GenerateCorpus(cfg));
  const std::string manifest = CorpusManifestJson(cfg, dir / "c.jsonl");
  EXPECT_NE(manifest.find(Sha256File(dir / "c.jsonl")), std::string::npos);
  EXPECT_NE(manifest.find("\"seed\": 77"), std::string::npos);
  EXPECT_NE(manifest.find("\"n_samples\": 20"), std::string::npos);
}

TEST(IoTest, Sha256KnownVector) {
  EXPECT_EQ(Sha256Hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_THROW(ReadFile("/nonexistent/file"), DataError);
}

}  // namespace
}  // namespace hncl
