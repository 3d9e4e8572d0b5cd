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

#ifndef HNCL_OBJECTIVE_H_
#define HNCL_OBJECTIVE_H_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "hncl/corpus.h"
#include "hncl/encoder.h"
#include "hncl/lexicon.h"
#include "hncl/random.h"

namespace hncl {

// How a hard negative enters the image-to-text softmax.
//   kAppend:  an extra text column visible to every image row.
//   kReplace: overwrites one non-positive entry of its source row only.
enum class HnMode { kAppend, kReplace };

std::string_view HnModeName(HnMode mode);
HnMode ParseHnMode(std::string_view name);

struct HardNegative {
  std::size_t source_row = 0;
  Caption caption;
  // Entry of the source row overwritten in kReplace mode; never the
  // positive. Drawn at injection time so both modes consume the same
  // random stream.
  std::size_t replace_column = 0;
};

struct AugmentedBatch {
  std::vector<std::span<const double>> images;
  std::vector<Caption> texts;
  std::vector<HardNegative> hard_negatives;

  std::size_t size() const { return texts.size(); }
};

// Views the samples' features; the samples must outlive the batch.
AugmentedBatch MakeBatch(std::span<const PairedSample* const> samples);

// Picks `count` distinct source rows uniformly among rows whose caption
// matches the lexicon and attaches one generated hard negative to each.
// Throws DataError when fewer rows are eligible.
AugmentedBatch InjectHardNegatives(AugmentedBatch batch,
                                   const ConceptLexicon& lexicon,
                                   std::size_t count, Rng& rng);

// Row-major stack of unit embeddings.
struct Embeddings {
  std::size_t dim = 0;
  std::vector<double> data;

  std::size_t count() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data).subspan(i * dim, dim);
  }
  void Append(std::span<const double> v) { data.insert(data.end(), v.begin(), v.end()); }
};

struct HardNegativeColumn {
  std::size_t source_row = 0;
  std::size_t replace_column = 0;
};

// N image rows by N + H text columns: the genuine texts, then one column
// per hard negative. values[i][j] = exp(s) * <image_i, text_j>.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double scale = 1.0;  // exp(logit_scale)
  std::vector<double> values;
  std::vector<HardNegativeColumn> hard_negatives;

  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  std::size_t genuine_cols() const { return rows; }
};

// Throws UsageError on inconsistent dimensions.
SimilarityMatrix ComputeSimilarity(const Embeddings& images,
                                   const Embeddings& texts,
                                   const Embeddings& hard_negatives,
                                   std::span<const HardNegativeColumn> annotations,
                                   double logit_scale);

struct LossBreakdown {
  double i2t = 0.0;
  double t2i = 0.0;
  double total = 0.0;
};

// Symmetric cross-entropy. Hard negatives only enter the image-to-text
// direction. When `grad` is given it receives d total / d values, laid out
// like `matrix.values`. Throws NumericError on non-finite input.
LossBreakdown InfoNce(const SimilarityMatrix& matrix, HnMode mode,
                      std::vector<double>* grad = nullptr);

struct LossAndGrad {
  LossBreakdown loss;
  ModelParams grads;
};

// Forward, loss and full backward through both encoders and the logit
// scale. OpenMP-parallel; bit-identical for any thread count.
LossAndGrad LossAndGradients(const Model& model, const AugmentedBatch& batch,
                             HnMode mode);

}  // namespace hncl

#endif  // HNCL_OBJECTIVE_H_
