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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "hncl/corpus.h"
#include "hncl/encoder.h"
#include "hncl/error.h"
#include "hncl/evalsuite.h"
#include "hncl/io.h"
#include "hncl/random.h"
#include "test_util.h"

namespace hncl {
namespace {

using testing::TempDir;

std::vector<PairedSample> Corpus(std::size_t n, std::uint64_t seed, double sigma = 0.05) {
  CorpusConfig c;
  c.n_samples = n;
  c.seed = seed;
  c.noise_sigma = sigma;
  return GenerateCorpus(c);
}

Model RandomModel(std::span<const PairedSample> samples, std::uint64_t seed) {
  std::vector<Caption> captions;
  for (const PairedSample& s : samples) captions.push_back(s.caption);
  Model m;
  m.vocab = Vocabulary::Build(captions);
  ModelConfig c;
  c.vocab_size = m.vocab.size();
  c.image_dim = samples.front().image_features.size();
  m.params = InitParams(c, seed);
  return m;
}

// Text embeds to the one-hot of its color word; images to the one-hot of the
// first entity's color. Other colors are orthogonal.
Model ColorOracleModel(std::span<const PairedSample> samples, std::size_t object_vocab) {
  std::vector<Caption> captions;
  for (const PairedSample& s : samples) captions.push_back(s.caption);
  Model m;
  m.vocab = Vocabulary::Build(captions);
  ModelConfig c;
  c.vocab_size = m.vocab.size();
  c.image_dim = SceneFeatureDim(object_vocab);
  c.token_dim = kNumColors;
  c.embed_dim = kNumColors;
  c.hidden_dim = kNumColors;
  m.params = ModelParams(c);
  auto tok = m.params.group(ParamGroup::kTokenEmbeddings);
  auto wt = m.params.group(ParamGroup::kTextProjection);
  auto w1 = m.params.group(ParamGroup::kImageW1);
  auto w2 = m.params.group(ParamGroup::kImageW2);
  for (std::size_t col = 0; col < kNumColors; ++col) {
    tok[m.vocab.Id(ColorWord(col)) * kNumColors + col] = 1.0;
    wt[col * kNumColors + col] = 1.0;
    w2[col * kNumColors + col] = 1.0;
    for (std::size_t o = 0; o < object_vocab; ++o) w1[col * c.image_dim + o * kNumColors + col] = 1.0;
  }
  return m;
}

TEST(FineGrainedTest, HitRequiresStrictMaximum) {
  EXPECT_TRUE(FineGrainedHit(0.9, std::vector<double>{0.1, 0.8}));
  EXPECT_FALSE(FineGrainedHit(0.8, std::vector<double>{0.1, 0.8}));
  EXPECT_FALSE(FineGrainedHit(0.5, std::vector<double>{0.6}));
  EXPECT_TRUE(FineGrainedHit(0.5, std::vector<double>{}));
}

TEST(FineGrainedTest, PerfectModelScoresOne) {
  std::vector<PairedSample> single;
  for (PairedSample& s : Corpus(400, 3, 0.0))
    if (s.scene->entities.size() == 1) single.push_back(std::move(s));
  ASSERT_GT(single.size(), 50u);
  const Model m = ColorOracleModel(single, 12);
  EXPECT_DOUBLE_EQ(FineGrainedAccuracy(m, single, BuiltinLexicon(ConceptId::kColor)), 1.0);
}

TEST(FineGrainedTest, TieCountsAsMiss) {
  std::vector<PairedSample> one = {Corpus(1, 3).front()};
  Model m = RandomModel(one, 1);
  // zero text projection: every caption scores 0
  for (double& w : m.params.group(ParamGroup::kTextProjection)) w = 0.0;
  for (double& w : m.params.group(ParamGroup::kTokenEmbeddings)) w = 0.0;
  for (double& w : m.params.group(ParamGroup::kPositionEmbeddings)) w = 1.0;
  m.params.group(ParamGroup::kTextProjection)[0] = 1.0;
  EXPECT_DOUBLE_EQ(FineGrainedAccuracy(m, one, BuiltinLexicon(ConceptId::kColor)), 0.0);
}

TEST(FineGrainedTest, RandomModelNearOneInNine) {
  const auto samples = FilterByConcept(Corpus(2000, 11), BuiltinLexicon(ConceptId::kColor));
  const Model m = RandomModel(samples, 4);
  EXPECT_NEAR(FineGrainedAccuracy(m, samples, BuiltinLexicon(ConceptId::kColor)), 1.0 / 9.0, 0.05);
}

TEST(FineGrainedTest, Errors) {
  const auto samples = Corpus(4, 1);
  const Model m = RandomModel(samples, 1);
  EXPECT_THROW(FineGrainedAccuracy(m, {}, BuiltinLexicon(ConceptId::kColor)), DataError);
  auto text_only = samples;
  text_only[0].image_features.clear();
  EXPECT_THROW(FineGrainedAccuracy(m, text_only, BuiltinLexicon(ConceptId::kColor)), DataError);
}

TEST(RecallTest, Identity) {
  const std::size_t n = 20;
  std::vector<double> sim(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) sim[i * n + i] = 1.0;
  EXPECT_DOUBLE_EQ(RecallAtK(sim, n, 1), 1.0);
  EXPECT_DOUBLE_EQ(RecallAtK(sim, n, 5), 1.0);
}

TEST(RecallTest, ConstantSimilarityUsesIndexTieBreak) {
  const std::size_t n = 100;
  const std::vector<double> sim(n * n, 0.3);
  // brute force: caption j is a hit iff fewer than k images precede it
  std::size_t hits = 0;
  for (std::size_t j = 0; j < n; ++j) hits += j < 5 ? 1 : 0;
  EXPECT_DOUBLE_EQ(RecallAtK(sim, n, 5), static_cast<double>(hits) / n);
  EXPECT_DOUBLE_EQ(RecallAtK(sim, n, 5), 0.05);
}

TEST(RecallTest, KEqualsNIsAlwaysOne) {
  Rng rng(3);
  std::vector<double> sim(25);
  for (double& v : sim) v = rng.Normal(0.0, 1.0);
  EXPECT_DOUBLE_EQ(RecallAtK(sim, 5, 5), 1.0);
  const auto samples = Corpus(5, 2);
  EXPECT_DOUBLE_EQ(RetrievalRecallAtK(RandomModel(samples, 2), samples, 5), 1.0);
}

TEST(RecallTest, MonotoneInK) {
  Rng rng(4);
  const std::size_t n = 40;
  std::vector<double> sim(n * n);
  for (double& v : sim) v = std::round(rng.Normal(0.0, 1.0) * 4.0);
  double prev = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double r = RecallAtK(sim, n, k);
    EXPECT_GE(r, prev);
    prev = r;
  }
  EXPECT_DOUBLE_EQ(prev, 1.0);
}

TEST(RecallTest, TooFewSamples) {
  const std::vector<double> sim(9, 0.0);
  EXPECT_THROW(RecallAtK(sim, 3, 5), UsageError);
  const auto samples = Corpus(4, 2);
  EXPECT_THROW(RetrievalRecallAtK(RandomModel(samples, 2), samples, 5), UsageError);
}

TEST(RecallTest, ModelMatchesBruteForce) {
  const auto samples = Corpus(60, 6);
  const Model m = RandomModel(samples, 6);
  const std::size_t n = samples.size();
  std::vector<std::vector<double>> img, txt;
  for (const PairedSample& s : samples) {
    img.push_back(testing::oracle::Image(m.params, s.image_features));
    txt.push_back(testing::oracle::Text(m.params, m.vocab.Encode(s.caption)));
  }
  std::size_t hits = 0;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return testing::oracle::Dot(img[a], txt[j]) > testing::oracle::Dot(img[b], txt[j]);
    });
    hits += std::find(order.begin(), order.begin() + 5, j) != order.begin() + 5;
  }
  EXPECT_NEAR(RetrievalRecallAtK(m, samples, 5), static_cast<double>(hits) / n, 1e-12);
}

TEST(ChallengeTest, Examples) {
  EXPECT_TRUE(ChallengeCorrect({0.9, 0.2, 0.8, 0.3}));
  EXPECT_FALSE(ChallengeCorrect({0.5, 0.5, 0.8, 0.3}));
  EXPECT_FALSE(ChallengeCorrect({0.9, 0.2, 0.3, 0.3}));
  EXPECT_FALSE(ChallengeCorrect({0.9, 0.2, 0.2, 0.3}));
  const std::vector<ChallengeScores> none;
  EXPECT_THROW(PairwiseChallengeAccuracy(none), DataError);
}

// Eq.-style brute force: both images ranked per caption, correct iff each
// caption's own image is the unique top.
bool OracleCorrect(const ChallengeScores& s) {
  const double for_a[2] = {s.a_a, s.b_a};
  const double for_b[2] = {s.a_b, s.b_b};
  auto unique_top = [](const double* v, int own) {
    int wins = 0;
    for (int i = 0; i < 2; ++i)
      if (i != own && v[own] - v[i] > 0) ++wins;
    return wins == 1;
  };
  return unique_top(for_a, 0) && unique_top(for_b, 1);
}

TEST(ChallengeTest, MatchesBruteForceIncludingTies) {
  Rng rng(9);
  for (int config = 0; config < 1000; ++config) {
    std::vector<ChallengeScores> scores(1 + rng.UniformIndex(20));
    std::size_t expected = 0;
    for (ChallengeScores& s : scores) {
      // coarse grid so ties are frequent
      auto draw = [&] { return static_cast<double>(rng.UniformIndex(4)) * 0.25; };
      s = {draw(), draw(), draw(), draw()};
      expected += OracleCorrect(s);
    }
    EXPECT_EQ(PairwiseChallengeAccuracy(scores),
              static_cast<double>(expected) / static_cast<double>(scores.size()));
  }
}

TEST(ChallengeTest, InvariantUnderMonotoneTransform) {
  Rng rng(10);
  std::vector<ChallengeScores> scores(500), cubed(500);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto draw = [&] { return rng.Normal(0.0, 1.0); };
    scores[i] = {draw(), draw(), draw(), draw()};
    auto f = [](double x) { return std::exp(3.0 * x) + x * x * x; };
    cubed[i] = {f(scores[i].a_a), f(scores[i].b_a), f(scores[i].b_b), f(scores[i].a_b)};
    std::vector<double> neg = {scores[i].b_a, scores[i].a_b};
    std::vector<double> neg_f = {cubed[i].b_a, cubed[i].a_b};
    EXPECT_EQ(FineGrainedHit(scores[i].a_a, neg), FineGrainedHit(cubed[i].a_a, neg_f));
  }
  EXPECT_EQ(PairwiseChallengeAccuracy(scores), PairwiseChallengeAccuracy(cubed));
}

TEST(ChallengeTest, ModelScoresMatchOracle) {
  CorpusConfig cc;
  Rng rng(5);
  const auto pairs = GenerateChallengePairs(cc, ConceptId::kColor, 30, rng);
  std::vector<PairedSample> as_samples;
  for (const ChallengePair& p : pairs) as_samples.push_back({p.id, p.caption_a, p.features_a, {}, {}});
  const Model m = RandomModel(as_samples, 5);
  const auto scores = ScoreChallengePairs(m, pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    using testing::oracle::Dot;
    const auto ia = testing::oracle::Image(m.params, pairs[i].features_a);
    const auto ib = testing::oracle::Image(m.params, pairs[i].features_b);
    const auto ta = testing::oracle::Text(m.params, m.vocab.Encode(pairs[i].caption_a));
    const auto tb = testing::oracle::Text(m.params, m.vocab.Encode(pairs[i].caption_b));
    EXPECT_NEAR(scores[i].a_a, Dot(ia, ta), 1e-12);
    EXPECT_NEAR(scores[i].b_a, Dot(ib, ta), 1e-12);
    EXPECT_NEAR(scores[i].b_b, Dot(ib, tb), 1e-12);
    EXPECT_NEAR(scores[i].a_b, Dot(ia, tb), 1e-12);
  }
}

// Returns the single differing token pair, or nullopt.
std::optional<std::pair<std::string, std::string>> OneTokenDiff(const Caption& a, const Caption& b) {
  if (a.size() != b.size()) return std::nullopt;
  std::optional<std::pair<std::string, std::string>> diff;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    if (diff) return std::nullopt;
    diff = {a[i], b[i]};
  }
  return diff;
}

TEST(ChallengeGeneratorTest, ColorPairsDifferInOneColorToken) {
  CorpusConfig cc;
  Rng rng(1);
  const auto pairs = GenerateChallengePairs(cc, ConceptId::kColor, 465, rng);
  ASSERT_EQ(pairs.size(), 465u);
  const auto& lex = BuiltinLexicon(ConceptId::kColor);
  for (const ChallengePair& p : pairs) {
    const auto diff = OneTokenDiff(p.caption_a, p.caption_b);
    ASSERT_TRUE(diff) << Join(p.caption_a) << " / " << Join(p.caption_b);
    const auto repl = lex.Replacements(diff->first);
    EXPECT_NE(std::find(repl.begin(), repl.end(), diff->second), repl.end());
    EXPECT_NE(p.features_a, p.features_b);
    EXPECT_EQ(p.concept_id, ConceptId::kColor);
  }
}

TEST(ChallengeGeneratorTest, SizeAndObjectEditsAreLexiconSubstitutions) {
  CorpusConfig cc;
  for (ConceptId concept_id : {ConceptId::kSize, ConceptId::kObject}) {
    Rng rng(2);
    const auto& lex = BuiltinLexicon(concept_id);
    for (const ChallengePair& p : GenerateChallengePairs(cc, concept_id, 200, rng)) {
      const auto diff = OneTokenDiff(p.caption_a, p.caption_b);
      ASSERT_TRUE(diff);
      const auto repl = lex.Replacements(diff->first);
      EXPECT_NE(std::find(repl.begin(), repl.end(), diff->second), repl.end())
          << diff->first << " -> " << diff->second;
      if (concept_id == ConceptId::kObject)
        EXPECT_EQ(ObjectCategory(std::find(ObjectPalette().begin(), ObjectPalette().end(), diff->first) -
                                 ObjectPalette().begin()),
                  ObjectCategory(std::find(ObjectPalette().begin(), ObjectPalette().end(), diff->second) -
                                 ObjectPalette().begin()));
    }
  }
}

TEST(ChallengeGeneratorTest, LocationUnsupported) {
  Rng rng(1);
  EXPECT_THROW(GenerateChallengePairs(CorpusConfig{}, ConceptId::kLocation, 5, rng), UsageError);
}

TEST(ChallengeGeneratorTest, JsonlRoundTrip) {
  TempDir dir("chal");
  Rng rng(3);
  const auto pairs = GenerateChallengePairs(CorpusConfig{}, ConceptId::kSize, 10, rng);
  WriteChallengeJsonl(dir / "c.jsonl", pairs);
  const auto back = ReadChallengeJsonl(dir / "c.jsonl");
  ASSERT_EQ(back.size(), pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(back[i].id, pairs[i].id);
    EXPECT_EQ(back[i].concept_id, pairs[i].concept_id);
    EXPECT_EQ(back[i].caption_a, pairs[i].caption_a);
    EXPECT_EQ(back[i].caption_b, pairs[i].caption_b);
    EXPECT_EQ(back[i].features_a, pairs[i].features_a);
    EXPECT_EQ(back[i].features_b, pairs[i].features_b);
  }
  WriteFile(dir / "bad.jsonl", "{\"id\":\"x\"}\n");
  EXPECT_THROW(ReadChallengeJsonl(dir / "bad.jsonl"), DataError);
  EXPECT_THROW(ReadChallengeJsonl(dir / "missing.jsonl"), DataError);
}

std::vector<EvalReport> SomeReports() {
  std::vector<EvalReport> out;
  for (const char* run : {"clas", "hn1"}) {
    for (int e = 1; e <= 2; ++e) {
      EvalReport r;
      r.run = run;
      r.checkpoint = "ckpt_e" + std::to_string(e) + "_p100.bin";
      r.fine_grained_top1 = 0.25 * e + (run[0] == 'h' ? 0.1 : 0.0);
      r.recall_at_5 = 0.5 + 0.01 * e;
      if (e == 2) r.challenge_accuracy = 0.625;
      r.n_eval = 2000;
      r.n_challenge = e == 2 ? 465 : 0;
      out.push_back(r);
    }
  }
  return out;
}

TEST(ReportTest, CsvRows) {
  auto reports = SomeReports();
  reports.resize(3);
  const std::string csv = ReportsToCsv(reports);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "run,checkpoint,concept,fine_grained_top1,recall_at_5,challenge_acc,n_eval");
  EXPECT_NE(csv.find("clas,ckpt_e2_p100.bin,color,0.500000,0.520000,0.625000,2000\n"),
            std::string::npos);
  EXPECT_NE(csv.find("clas,ckpt_e1_p100.bin,color,0.250000,0.510000,,2000\n"), std::string::npos);
}

TEST(ReportTest, JsonRoundTrip) {
  const auto reports = SomeReports();
  EXPECT_EQ(ReportsFromJson(ReportsToJson(reports)), reports);
  EXPECT_THROW(ReportsFromJson("{}"), DataError);
  EXPECT_THROW(ReportsFromJson("[{\"run\":1}]"), DataError);
}

TEST(ReportTest, SvgHasOneSeriesPerRun) {
  const std::string svg = ReportsToSvg(SomeReports());
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  std::size_t series = 0;
  for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
       pos = svg.find("<polyline", pos + 1))
    ++series;
  EXPECT_EQ(series, 2u);
  EXPECT_NE(svg.find("data-run=\"clas\""), std::string::npos);
  EXPECT_NE(svg.find("data-run=\"hn1\""), std::string::npos);
}

TEST(ReportTest, EmitWritesFiles) {
  TempDir dir("report");
  const auto reports = SomeReports();
  EmitReport(reports, dir / "out" / "eval", true);
  EXPECT_EQ(ReadFile(dir / "out" / "eval.csv"), ReportsToCsv(reports));
  EXPECT_EQ(ReadFile(dir / "out" / "eval.json"), ReportsToJson(reports));
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "eval.svg"));
  EmitReport(reports, dir / "plain", false);
  EXPECT_FALSE(std::filesystem::exists(dir / "plain.svg"));
  EXPECT_THROW(EmitReport({}, dir / "empty", false), UsageError);
}

TEST(EvaluateTest, CombinesMetrics) {
  const auto samples = Corpus(300, 12);
  const Model m = RandomModel(samples, 12);
  Rng rng(12);
  const auto pairs = GenerateChallengePairs(CorpusConfig{}, ConceptId::kColor, 40, rng);
  const auto& lex = BuiltinLexicon(ConceptId::kColor);
  const EvalReport r = Evaluate(m, "clas", "ckpt_e1_p10.bin", lex, {samples, pairs, 5});
  const auto matching = FilterByConcept(samples, lex);
  EXPECT_EQ(r.fine_grained_top1, FineGrainedAccuracy(m, matching, lex));
  EXPECT_EQ(r.recall_at_5, RetrievalRecallAtK(m, samples, 5));
  ASSERT_TRUE(r.challenge_accuracy);
  EXPECT_EQ(*r.challenge_accuracy, PairwiseChallengeAccuracy(m, pairs));
  EXPECT_EQ(r.n_eval, matching.size());
  EXPECT_EQ(r.n_challenge, 40u);
  const EvalReport bare = Evaluate(m, "clas", "x", lex, {samples, {}, 5});
  EXPECT_FALSE(bare.challenge_accuracy);
}

}  // namespace
}  // namespace hncl
