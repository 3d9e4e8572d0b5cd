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

#include "hncl/reference.h"

#include <cmath>

#include "hncl/error.h"

namespace hncl::reference {

void ScaledDots(const Embeddings& a, const Embeddings& b, double scale,
                std::vector<double>& out) {
  const std::size_t n = a.count(), m = b.count(), d = a.dim;
  out.assign(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += a.data[i * d + c] * b.data[j * d + c];
      out[i * m + j] = scale * dot;
    }
  }
}

LossAndGrad LossAndGradients(const Model& model, const AugmentedBatch& batch,
                             HnMode mode) {
  const ModelParams& params = model.params;
  const std::size_t n = batch.size();
  const std::size_t d = params.config().embed_dim;

  std::vector<TextCache> texts(n + batch.hard_negatives.size());
  std::vector<ImageCache> images(n);
  for (std::size_t j = 0; j < n; ++j) {
    TextForward(params, model.vocab.Encode(batch.texts[j]), texts[j]);
  }
  std::vector<HardNegativeColumn> annotations;
  for (std::size_t k = 0; k < batch.hard_negatives.size(); ++k) {
    const HardNegative& hn = batch.hard_negatives[k];
    TextForward(params, model.vocab.Encode(hn.caption), texts[n + k]);
    annotations.push_back({hn.source_row, hn.replace_column});
  }
  for (std::size_t i = 0; i < n; ++i) ImageForward(params, batch.images[i], images[i]);

  SimilarityMatrix sim;
  sim.rows = n;
  sim.cols = texts.size();
  sim.scale = std::exp(params.logit_scale());
  sim.hard_negatives = annotations;
  sim.values.assign(sim.rows * sim.cols, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < sim.cols; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += images[i].out[c] * texts[j].out[c];
      sim.values[i * sim.cols + j] = sim.scale * dot;
    }
  }

  std::vector<double> gsim;
  LossAndGrad out{InfoNce(sim, mode, &gsim), ModelParams(params.config())};
  double gscale = 0.0;
  for (std::size_t i = 0; i < gsim.size(); ++i) gscale += gsim[i] * sim.values[i];
  out.grads.logit_scale() = gscale;

  for (std::size_t j = 0; j < sim.cols; ++j) {
    std::vector<double> g(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < d; ++c) g[c] += gsim[i * sim.cols + j] * images[i].out[c];
    }
    for (double& v : g) v *= sim.scale;
    TextLocalGrad local;
    TextBackward(params, texts[j], g, local);
    AccumulateTextGrad(texts[j], local, out.grads);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> g(d, 0.0);
    for (std::size_t j = 0; j < sim.cols; ++j) {
      for (std::size_t c = 0; c < d; ++c) g[c] += gsim[i * sim.cols + j] * texts[j].out[c];
    }
    for (double& v : g) v *= sim.scale;
    ImageLocalGrad local;
    ImageBackward(params, images[i], g, local);
    AccumulateImageGrad(images[i], local, out.grads);
  }
  if (!out.grads.AllFinite()) throw NumericError("non-finite gradient");
  return out;
}

}  // namespace hncl::reference
