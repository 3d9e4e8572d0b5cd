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

#include "hncl/objective.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hncl/error.h"
#include "hncl/kernels.h"

namespace hncl {

std::string_view HnModeName(HnMode mode) {
  return mode == HnMode::kAppend ? "append" : "replace";
}

HnMode ParseHnMode(std::string_view name) {
  if (name == "append") return HnMode::kAppend;
  if (name == "replace") return HnMode::kReplace;
  throw UsageError("unknown hard-negative mode '" + std::string(name) +
                   "' (expected append or replace)");
}

AugmentedBatch MakeBatch(std::span<const PairedSample* const> samples) {
  AugmentedBatch batch;
  for (const PairedSample* s : samples) {
    batch.images.emplace_back(s->image_features);
    batch.texts.push_back(s->caption);
  }
  return batch;
}

AugmentedBatch InjectHardNegatives(AugmentedBatch batch,
                                   const ConceptLexicon& lexicon,
                                   std::size_t count, Rng& rng) {
  batch.hard_negatives.clear();
  if (count == 0) return batch;
  const std::size_t n = batch.size();
  if (n < 2) throw DataError("hard negatives need a batch of at least two");
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < n; ++i) {
    if (lexicon.Matches(batch.texts[i])) eligible.push_back(i);
  }
  if (eligible.size() < count) {
    throw DataError("batch has " + std::to_string(eligible.size()) + " captions with a " +
                    std::string(ConceptName(lexicon.concept_id())) + " keyword, " +
                    std::to_string(count) + " hard negatives requested");
  }
  // Partial Fisher-Yates: the first `count` entries become the sources.
  for (std::size_t k = 0; k < count; ++k) {
    std::swap(eligible[k], eligible[k + rng.UniformIndex(eligible.size() - k)]);
  }
  for (std::size_t k = 0; k < count; ++k) {
    HardNegative hn;
    hn.source_row = eligible[k];
    hn.caption = *GenerateHardNegative(batch.texts[hn.source_row], lexicon, rng);
    std::size_t col = rng.UniformIndex(n - 1);
    hn.replace_column = col >= hn.source_row ? col + 1 : col;
    batch.hard_negatives.push_back(std::move(hn));
  }
  return batch;
}

SimilarityMatrix ComputeSimilarity(const Embeddings& images,
                                   const Embeddings& texts,
                                   const Embeddings& hard_negatives,
                                   std::span<const HardNegativeColumn> annotations,
                                   double logit_scale) {
  const std::size_t n = images.count();
  if (texts.count() != n) throw UsageError("image and text counts differ");
  if (texts.dim != images.dim ||
      (hard_negatives.count() > 0 && hard_negatives.dim != images.dim)) {
    throw UsageError("embedding dimensions differ");
  }
  if (annotations.size() != hard_negatives.count()) {
    throw UsageError("one annotation per hard negative required");
  }
  Embeddings columns{images.dim, texts.data};
  columns.Append(hard_negatives.data);

  SimilarityMatrix m;
  m.rows = n;
  m.cols = columns.count();
  m.scale = std::exp(logit_scale);
  m.hard_negatives.assign(annotations.begin(), annotations.end());
  for (const HardNegativeColumn& a : m.hard_negatives) {
    if (a.source_row >= n || a.replace_column >= n || a.replace_column == a.source_row) {
      throw UsageError("hard-negative annotation out of range");
    }
  }
  kernels::ScaledDots(images, columns, m.scale, m.values);
  return m;
}

namespace {

// Cross-entropy of `logits` against `target`; softmax written to `probs`.
double CrossEntropy(std::span<const double> logits, std::size_t target,
                    std::vector<double>& probs) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  probs.resize(logits.size());
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    probs[j] = std::exp(logits[j] - max_logit);
    total += probs[j];
  }
  for (double& p : probs) p /= total;
  return std::log(total) + max_logit - logits[target];
}

}  // namespace

LossBreakdown InfoNce(const SimilarityMatrix& matrix, HnMode mode,
                      std::vector<double>* grad) {
  const std::size_t n = matrix.rows, cols = matrix.cols;
  if (n == 0) throw UsageError("empty similarity matrix");
  for (double v : matrix.values) {
    if (!std::isfinite(v)) throw NumericError("non-finite similarity value");
  }
  if (grad) grad->assign(matrix.values.size(), 0.0);
  const double weight = 0.5 / static_cast<double>(n);

  // Per-row logit layout: source column of each logit.
  std::vector<std::size_t> row_hn(n, cols);
  for (std::size_t k = 0; k < matrix.hard_negatives.size(); ++k) {
    row_hn[matrix.hard_negatives[k].source_row] = n + k;
  }

  LossBreakdown loss;
  std::vector<double> logits, probs;
  std::vector<std::size_t> source;
  for (std::size_t i = 0; i < n; ++i) {
    source.resize(mode == HnMode::kAppend ? cols : n);
    std::iota(source.begin(), source.end(), std::size_t{0});
    if (mode == HnMode::kReplace && row_hn[i] != cols) {
      source[matrix.hard_negatives[row_hn[i] - n].replace_column] = row_hn[i];
    }
    logits.resize(source.size());
    for (std::size_t j = 0; j < source.size(); ++j) logits[j] = matrix.at(i, source[j]);
    loss.i2t += CrossEntropy(logits, i, probs);
    if (grad) {
      for (std::size_t j = 0; j < source.size(); ++j) {
        (*grad)[i * cols + source[j]] += weight * (probs[j] - (j == i ? 1.0 : 0.0));
      }
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    logits.resize(n);
    for (std::size_t i = 0; i < n; ++i) logits[i] = matrix.at(i, j);
    loss.t2i += CrossEntropy(logits, j, probs);
    if (grad) {
      for (std::size_t i = 0; i < n; ++i) {
        (*grad)[i * cols + j] += weight * (probs[i] - (i == j ? 1.0 : 0.0));
      }
    }
  }
  loss.i2t /= static_cast<double>(n);
  loss.t2i /= static_cast<double>(n);
  loss.total = 0.5 * (loss.i2t + loss.t2i);
  if (!std::isfinite(loss.total)) throw NumericError("non-finite contrastive loss");
  return loss;
}

LossAndGrad LossAndGradients(const Model& model, const AugmentedBatch& batch,
                             HnMode mode) {
  const ModelParams& params = model.params;
  const std::size_t n = batch.size();
  const std::size_t d = params.config().embed_dim;
  if (batch.images.size() != n) throw UsageError("batch image/text counts differ");

  std::vector<std::vector<TokenId>> ids;
  ids.reserve(n + batch.hard_negatives.size());
  for (const Caption& c : batch.texts) ids.push_back(model.vocab.Encode(c));
  std::vector<HardNegativeColumn> annotations;
  for (const HardNegative& hn : batch.hard_negatives) {
    ids.push_back(model.vocab.Encode(hn.caption));
    annotations.push_back({hn.source_row, hn.replace_column});
  }

  std::vector<TextCache> text_caches;
  std::vector<ImageCache> image_caches;
  kernels::ForwardTexts(params, ids, text_caches);
  kernels::ForwardImages(params, batch.images, image_caches);

  Embeddings images{d, {}}, texts{d, {}}, negatives{d, {}};
  for (const ImageCache& c : image_caches) images.Append(c.out);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    (j < n ? texts : negatives).Append(text_caches[j].out);
  }

  SimilarityMatrix sim =
      ComputeSimilarity(images, texts, negatives, annotations, params.logit_scale());
  std::vector<double> gsim;
  LossAndGrad out{InfoNce(sim, mode, &gsim), ModelParams(params.config())};

  // values = exp(s) * dot, so d values / ds = values.
  double gscale = 0.0;
  for (std::size_t i = 0; i < gsim.size(); ++i) gscale += gsim[i] * sim.values[i];
  out.grads.logit_scale() = gscale;

  Embeddings all_texts{d, texts.data};
  all_texts.Append(negatives.data);
  std::vector<double> gimg, gtxt;
  kernels::DotsBackward(images, all_texts, sim.scale, gsim, gimg, gtxt);
  kernels::BackwardTexts(params, text_caches, gtxt, out.grads);
  kernels::BackwardImages(params, image_caches, gimg, out.grads);
  if (!out.grads.AllFinite()) throw NumericError("non-finite gradient");
  return out;
}

}  // namespace hncl
