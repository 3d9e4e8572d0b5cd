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

#ifndef HNCL_EVALSUITE_H_
#define HNCL_EVALSUITE_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hncl/corpus.h"
#include "hncl/encoder.h"
#include "hncl/lexicon.h"
#include "hncl/random.h"

namespace hncl {

// --- Fine-grained ranking -------------------------------------------------

// A hit requires the true caption to score strictly above every negative.
bool FineGrainedHit(double true_score, std::span<const double> negative_scores);

// Ranks each sample's caption against all rewrites of its first keyword
// span. Throws DataError on an empty set or a sample without a keyword or
// features.
double FineGrainedAccuracy(const Model& model,
                           std::span<const PairedSample> samples,
                           const ConceptLexicon& lexicon);

// --- Text-to-image retrieval ----------------------------------------------

// `sim` is n x n with sim[i * n + j] = score(image i, caption j). For each
// caption j the images are ranked by score, ties broken by lower index; a
// hit means image j lands in the top k. Throws UsageError when n < k.
double RecallAtK(std::span<const double> sim, std::size_t n, std::size_t k);

double RetrievalRecallAtK(const Model& model,
                          std::span<const PairedSample> samples,
                          std::size_t k = 5);

// --- Pairwise challenge ---------------------------------------------------

struct ChallengePair {
  std::string id;
  ConceptId concept_id = ConceptId::kColor;
  std::vector<double> features_a;
  std::vector<double> features_b;
  Caption caption_a;
  Caption caption_b;
};

// Scores of one pair: s(image, caption).
struct ChallengeScores {
  double a_a = 0.0;  // s(i_a, t_a)
  double b_a = 0.0;  // s(i_b, t_a)
  double b_b = 0.0;  // s(i_b, t_b)
  double a_b = 0.0;  // s(i_a, t_b)
};

// Correct iff each caption strictly prefers its own image.
bool ChallengeCorrect(const ChallengeScores& s);
double PairwiseChallengeAccuracy(std::span<const ChallengeScores> scores);
std::vector<ChallengeScores> ScoreChallengePairs(const Model& model,
                                                 std::span<const ChallengePair> pairs);
double PairwiseChallengeAccuracy(const Model& model,
                                 std::span<const ChallengePair> pairs);

// Samples a scene and mutates one attribute of one entity: a different
// color, the other size, or (object) a different object of the same
// super-category. Both scenes get independent feature noise. Throws
// UsageError for location.
std::vector<ChallengePair> GenerateChallengePairs(const CorpusConfig& corpus,
                                                  ConceptId concept_id,
                                                  std::size_t n, Rng& rng);

// JSONL rows: {"id", "concept", "features_a", "features_b", "caption_a",
// "caption_b"}.
void WriteChallengeJsonl(const std::filesystem::path& path,
                         std::span<const ChallengePair> pairs);
std::vector<ChallengePair> ReadChallengeJsonl(const std::filesystem::path& path);

// --- Reports --------------------------------------------------------------

struct EvalReport {
  std::string run;
  std::string checkpoint;
  ConceptId concept_id = ConceptId::kColor;
  double fine_grained_top1 = 0.0;
  double recall_at_5 = 0.0;
  std::optional<double> challenge_accuracy;
  std::size_t n_eval = 0;
  std::size_t n_challenge = 0;

  bool operator==(const EvalReport&) const = default;
};

struct EvalInputs {
  std::span<const PairedSample> samples;       // fine-grained + recall
  std::span<const ChallengePair> pairs;        // optional
  std::size_t k = 5;
};

// Fine-grained accuracy runs on the samples matching the lexicon; recall on
// all samples with features.
EvalReport Evaluate(const Model& model, const std::string& run,
                    const std::string& checkpoint, const ConceptLexicon& lexicon,
                    const EvalInputs& inputs);

// run,checkpoint,concept,fine_grained_top1,recall_at_5,challenge_acc,n_eval
std::string ReportsToCsv(std::span<const EvalReport> reports);
std::string ReportsToJson(std::span<const EvalReport> reports);
std::vector<EvalReport> ReportsFromJson(std::string_view text);
// Scatter of fine-grained accuracy against Recall@5, one series per run in
// checkpoint order; end-of-epoch checkpoints are labelled.
std::string ReportsToSvg(std::span<const EvalReport> reports);

// Writes <prefix>.csv and <prefix>.json, plus <prefix>.svg if requested.
// Throws UsageError on an empty report list.
void EmitReport(std::span<const EvalReport> reports,
                const std::filesystem::path& prefix, bool svg);

}  // namespace hncl

#endif  // HNCL_EVALSUITE_H_
