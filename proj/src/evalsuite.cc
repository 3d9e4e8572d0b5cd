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

#include "hncl/evalsuite.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "hncl/error.h"
#include "hncl/io.h"
#include "hncl/kernels.h"
#include "json.hpp"

namespace hncl {

using nlohmann::json;

bool FineGrainedHit(double true_score, std::span<const double> negative_scores) {
  return std::all_of(negative_scores.begin(), negative_scores.end(),
                     [&](double s) { return true_score > s; });
}

namespace {

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * b[c];
  return s;
}

}  // namespace

double FineGrainedAccuracy(const Model& model,
                           std::span<const PairedSample> samples,
                           const ConceptLexicon& lexicon) {
  if (samples.empty()) throw DataError("fine-grained evaluation set is empty");
  for (const PairedSample& s : samples) {
    if (s.image_features.empty()) {
      throw DataError("sample '" + s.id + "' has no image features");
    }
  }
  std::vector<std::vector<Caption>> negatives(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    negatives[i] = EnumerateNegatives(samples[i].caption, lexicon);
  }

  std::size_t hits = 0;
#pragma omp parallel
  {
    TextCache text;
    ImageCache image;
    std::vector<double> scores;
#pragma omp for schedule(dynamic, 16) reduction(+ : hits)
    for (std::size_t i = 0; i < samples.size(); ++i) {
      ImageForward(model.params, samples[i].image_features, image);
      TextForward(model.params, model.vocab.Encode(samples[i].caption), text);
      const double truth = Dot(image.out, text.out);
      scores.clear();
      for (const Caption& neg : negatives[i]) {
        TextForward(model.params, model.vocab.Encode(neg), text);
        scores.push_back(Dot(image.out, text.out));
      }
      if (FineGrainedHit(truth, scores)) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

double RecallAtK(std::span<const double> sim, std::size_t n, std::size_t k) {
  if (n == 0 || n < k) {
    throw UsageError("recall@" + std::to_string(k) + " needs at least " +
                     std::to_string(k) + " samples, got " + std::to_string(n));
  }
  std::size_t hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (std::size_t j = 0; j < n; ++j) {
    const double own = sim[j * n + j];
    std::size_t rank = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sim[i * n + j];
      if (s > own || (s == own && i < j)) ++rank;
    }
    if (rank < k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double RetrievalRecallAtK(const Model& model,
                          std::span<const PairedSample> samples, std::size_t k) {
  std::vector<std::span<const double>> features;
  std::vector<std::vector<TokenId>> ids;
  for (const PairedSample& s : samples) {
    if (s.image_features.empty()) {
      throw DataError("sample '" + s.id + "' has no image features");
    }
    features.emplace_back(s.image_features);
    ids.push_back(model.vocab.Encode(s.caption));
  }
  if (samples.size() < k) {
    throw UsageError("recall@" + std::to_string(k) + " needs at least " +
                     std::to_string(k) + " samples, got " + std::to_string(samples.size()));
  }
  Embeddings images = kernels::EncodeImages(model.params, features);
  Embeddings texts = kernels::EncodeTexts(model.params, ids);
  std::vector<double> sim;
  kernels::ScaledDots(images, texts, 1.0, sim);
  return RecallAtK(sim, samples.size(), k);
}

bool ChallengeCorrect(const ChallengeScores& s) {
  return s.a_a > s.b_a && s.b_b > s.a_b;
}

double PairwiseChallengeAccuracy(std::span<const ChallengeScores> scores) {
  if (scores.empty()) throw DataError("challenge set is empty");
  std::size_t correct = 0;
  for (const ChallengeScores& s : scores) {
    if (ChallengeCorrect(s)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::vector<ChallengeScores> ScoreChallengePairs(const Model& model,
                                                 std::span<const ChallengePair> pairs) {
  std::vector<ChallengeScores> scores(pairs.size());
#pragma omp parallel
  {
    TextCache ta, tb;
    ImageCache ia, ib;
#pragma omp for schedule(dynamic, 16)
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      ImageForward(model.params, pairs[i].features_a, ia);
      ImageForward(model.params, pairs[i].features_b, ib);
      TextForward(model.params, model.vocab.Encode(pairs[i].caption_a), ta);
      TextForward(model.params, model.vocab.Encode(pairs[i].caption_b), tb);
      scores[i] = {Dot(ia.out, ta.out), Dot(ib.out, ta.out), Dot(ib.out, tb.out),
                   Dot(ia.out, tb.out)};
    }
  }
  return scores;
}

double PairwiseChallengeAccuracy(const Model& model,
                                 std::span<const ChallengePair> pairs) {
  if (pairs.empty()) throw DataError("challenge set is empty");
  return PairwiseChallengeAccuracy(ScoreChallengePairs(model, pairs));
}

std::vector<ChallengePair> GenerateChallengePairs(const CorpusConfig& corpus,
                                                  ConceptId concept_id,
                                                  std::size_t n, Rng& rng) {
  if (concept_id == ConceptId::kLocation) {
    throw UsageError("challenge pairs are not defined for the location concept");
  }
  corpus.Validate();
  const std::size_t vocab = corpus.object_vocab_size;
  std::vector<ChallengePair> pairs;
  pairs.reserve(n);
  while (pairs.size() < n) {
    SceneSpec a = SampleScene(vocab, 1 + rng.UniformIndex(2), rng);
    SceneSpec b = a;
    Entity& e = b.entities[rng.UniformIndex(b.entities.size())];
    switch (concept_id) {
      case ConceptId::kColor:
        e.color = (e.color + 1 + rng.UniformIndex(kNumColors - 1)) % kNumColors;
        break;
      case ConceptId::kSize:
        e.size = e.size == EntitySize::kLarge ? EntitySize::kSmall : EntitySize::kLarge;
        break;
      case ConceptId::kObject: {
        std::vector<std::size_t> siblings;
        for (std::size_t o = 0; o < vocab; ++o) {
          if (o != e.object && ObjectCategory(o) == ObjectCategory(e.object)) {
            siblings.push_back(o);
          }
        }
        if (siblings.empty()) continue;  // resample the scene
        e.object = siblings[rng.UniformIndex(siblings.size())];
        break;
      }
      case ConceptId::kLocation:
        break;
    }
    ChallengePair pair;
    pair.id = "c" + std::to_string(pairs.size());
    pair.concept_id = concept_id;
    pair.caption_a = RenderCaption(a);
    pair.caption_b = RenderCaption(b);
    pair.features_a = FeaturizeScene(a, vocab, corpus.noise_sigma, rng);
    pair.features_b = FeaturizeScene(b, vocab, corpus.noise_sigma, rng);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

void WriteChallengeJsonl(const std::filesystem::path& path,
                         std::span<const ChallengePair> pairs) {
  std::string out;
  for (const ChallengePair& p : pairs) {
    json row;
    row["id"] = p.id;
    row["concept"] = ConceptName(p.concept_id);
    row["features_a"] = p.features_a;
    row["features_b"] = p.features_b;
    row["caption_a"] = Join(p.caption_a);
    row["caption_b"] = Join(p.caption_b);
    out += row.dump();
    out.push_back('\n');
  }
  WriteFile(path, out);
}

std::vector<ChallengePair> ReadChallengeJsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open challenge file '" + path.string() + "'");
  std::vector<ChallengePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& what) {
      return DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) throw fail("not a JSON object");
    ChallengePair p;
    try {
      p.id = row.at("id").get<std::string>();
      p.concept_id = ParseConcept(row.at("concept").get<std::string>());
      p.features_a = row.at("features_a").get<std::vector<double>>();
      p.features_b = row.at("features_b").get<std::vector<double>>();
      p.caption_a = Tokenize(row.at("caption_a").get<std::string>());
      p.caption_b = Tokenize(row.at("caption_b").get<std::string>());
    } catch (const json::exception& e) {
      throw fail(e.what());
    } catch (const UsageError& e) {
      throw fail(e.what());
    }
    if (p.caption_a.empty() || p.caption_b.empty()) throw fail("empty caption");
    if (p.features_a.size() != p.features_b.size() || p.features_a.empty()) {
      throw fail("feature vectors must be non-empty and of equal length");
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

EvalReport Evaluate(const Model& model, const std::string& run,
                    const std::string& checkpoint, const ConceptLexicon& lexicon,
                    const EvalInputs& inputs) {
  std::vector<PairedSample> matching = FilterByConcept(inputs.samples, lexicon);
  EvalReport report;
  report.run = run;
  report.checkpoint = checkpoint;
  report.concept_id = lexicon.concept_id();
  report.fine_grained_top1 = FineGrainedAccuracy(model, matching, lexicon);
  report.recall_at_5 = RetrievalRecallAtK(model, inputs.samples, inputs.k);
  report.n_eval = matching.size();
  if (!inputs.pairs.empty()) {
    report.challenge_accuracy = PairwiseChallengeAccuracy(model, inputs.pairs);
    report.n_challenge = inputs.pairs.size();
  }
  return report;
}

namespace {

std::string Fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Epoch of an end-of-epoch checkpoint name ("ckpt_e2_p100..."), else 0.
std::size_t EndOfEpoch(const std::string& checkpoint) {
  unsigned epoch = 0;
  char rest[8] = {};
  if (std::sscanf(checkpoint.c_str(), "ckpt_e%u_p100%7s", &epoch, rest) >= 1 &&
      checkpoint.find("_p100") != std::string::npos) {
    return epoch;
  }
  return 0;
}

}  // namespace

std::string ReportsToCsv(std::span<const EvalReport> reports) {
  std::string out = "run,checkpoint,concept,fine_grained_top1,recall_at_5,challenge_acc,n_eval\n";
  for (const EvalReport& r : reports) {
    out += r.run + ',' + r.checkpoint + ',' + std::string(ConceptName(r.concept_id)) + ',' +
           Fixed(r.fine_grained_top1) + ',' + Fixed(r.recall_at_5) + ',' +
           (r.challenge_accuracy ? Fixed(*r.challenge_accuracy) : std::string()) + ',' +
           std::to_string(r.n_eval) + '\n';
  }
  return out;
}

std::string ReportsToJson(std::span<const EvalReport> reports) {
  json arr = json::array();
  for (const EvalReport& r : reports) {
    json row = {{"run", r.run},
                {"checkpoint", r.checkpoint},
                {"concept", ConceptName(r.concept_id)},
                {"fine_grained_top1", r.fine_grained_top1},
                {"recall_at_5", r.recall_at_5},
                {"challenge_acc", nullptr},
                {"n_eval", r.n_eval},
                {"n_challenge", r.n_challenge}};
    if (r.challenge_accuracy) row["challenge_acc"] = *r.challenge_accuracy;
    arr.push_back(std::move(row));
  }
  return arr.dump(2) + "\n";
}

std::vector<EvalReport> ReportsFromJson(std::string_view text) {
  json arr = json::parse(text, nullptr, false);
  if (arr.is_discarded() || !arr.is_array()) throw DataError("report JSON must be an array");
  std::vector<EvalReport> out;
  try {
    for (const json& row : arr) {
      EvalReport r;
      r.run = row.at("run").get<std::string>();
      r.checkpoint = row.at("checkpoint").get<std::string>();
      r.concept_id = ParseConcept(row.at("concept").get<std::string>());
      r.fine_grained_top1 = row.at("fine_grained_top1").get<double>();
      r.recall_at_5 = row.at("recall_at_5").get<double>();
      if (row.contains("challenge_acc") && !row["challenge_acc"].is_null()) {
        r.challenge_accuracy = row["challenge_acc"].get<double>();
      }
      r.n_eval = row.at("n_eval").get<std::size_t>();
      r.n_challenge = row.value("n_challenge", std::size_t{0});
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("report JSON: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("report JSON: ") + e.what());
  }
  return out;
}

std::string ReportsToSvg(std::span<const EvalReport> reports) {
  constexpr double kWidth = 640, kHeight = 480, kMargin = 60;
  static constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                            "#ff7f0e", "#9467bd", "#8c564b"};
  std::vector<std::string> runs;
  std::map<std::string, std::vector<const EvalReport*>> series;
  for (const EvalReport& r : reports) {
    if (!series.count(r.run)) runs.push_back(r.run);
    series[r.run].push_back(&r);
  }
  double xmin = 1, xmax = 0, ymin = 1, ymax = 0;
  for (const EvalReport& r : reports) {
    xmin = std::min(xmin, r.recall_at_5);
    xmax = std::max(xmax, r.recall_at_5);
    ymin = std::min(ymin, r.fine_grained_top1);
    ymax = std::max(ymax, r.fine_grained_top1);
  }
  auto pad = [](double& lo, double& hi) {
    const double span = std::max(hi - lo, 0.02);
    lo = std::max(0.0, lo - 0.1 * span);
    hi = std::min(1.0, hi + 0.1 * span);
    if (hi <= lo) hi = lo + 0.01;
  };
  pad(xmin, xmax);
  pad(ymin, ymax);
  auto px = [&](double x) { return kMargin + (x - xmin) / (xmax - xmin) * (kWidth - 2 * kMargin); };
  auto py = [&](double y) { return kHeight - kMargin - (y - ymin) / (ymax - ymin) * (kHeight - 2 * kMargin); };

  std::ostringstream svg;
  svg << std::fixed << std::setprecision(2);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">Recall@5 (" << xmin << " - " << xmax << ")</text>\n";
  svg << "<text x=\"15\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 15 "
      << kHeight / 2 << ")\" text-anchor=\"middle\">fine-grained top-1 (" << ymin << " - "
      << ymax << ")</text>\n";
  for (std::size_t s = 0; s < runs.size(); ++s) {
    const char* color = kColors[s % std::size(kColors)];
    svg << "<g class=\"series\" data-run=\"" << runs[s] << "\">\n";
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (const EvalReport* r : series[runs[s]]) {
      svg << px(r->recall_at_5) << ',' << py(r->fine_grained_top1) << ' ';
    }
    svg << "\"/>\n";
    for (const EvalReport* r : series[runs[s]]) {
      svg << "<circle cx=\"" << px(r->recall_at_5) << "\" cy=\"" << py(r->fine_grained_top1)
          << "\" r=\"4\" fill=\"" << color << "\"/>\n";
      if (std::size_t epoch = EndOfEpoch(r->checkpoint)) {
        svg << "<text x=\"" << px(r->recall_at_5) + 6 << "\" y=\""
            << py(r->fine_grained_top1) - 6 << "\">" << epoch << "</text>\n";
      }
    }
    svg << "<text x=\"" << kWidth - kMargin - 100 << "\" y=\"" << kMargin + 18 * s
        << "\" fill=\"" << color << "\">" << runs[s] << "</text>\n";
    svg << "</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void EmitReport(std::span<const EvalReport> reports,
                const std::filesystem::path& prefix, bool svg) {
  if (reports.empty()) throw UsageError("no reports to emit");
  auto with_ext = [&](const char* ext) {
    std::filesystem::path p = prefix;
    p += ext;
    return p;
  };
  WriteFile(with_ext(".csv"), ReportsToCsv(reports));
  WriteFile(with_ext(".json"), ReportsToJson(reports));
  if (svg) WriteFile(with_ext(".svg"), ReportsToSvg(reports));
}

}  // namespace hncl
