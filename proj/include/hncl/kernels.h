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

#ifndef HNCL_KERNELS_H_
#define HNCL_KERNELS_H_

// OpenMP kernels behind the objective and the evaluators. Every kernel
// partitions work so that each output value is produced by one thread with
// a fixed summation order; results do not depend on the thread count.
// Serial counterparts live in hncl/reference.h.

#include <cstddef>
#include <span>
#include <vector>

#include "hncl/encoder.h"
#include "hncl/objective.h"

namespace hncl::kernels {

void ForwardTexts(const ModelParams& params,
                  std::span<const std::vector<TokenId>> ids,
                  std::vector<TextCache>& caches);
void ForwardImages(const ModelParams& params,
                   std::span<const std::span<const double>> features,
                   std::vector<ImageCache>& caches);

// Unit embeddings only, no caches kept.
Embeddings EncodeTexts(const ModelParams& params,
                       std::span<const std::vector<TokenId>> ids);
Embeddings EncodeImages(const ModelParams& params,
                        std::span<const std::span<const double>> features);

// out[i * m + j] = scale * <a_i, b_j>
void ScaledDots(const Embeddings& a, const Embeddings& b, double scale,
                std::vector<double>& out);

// grad_a[i] = scale * sum_j g[i][j] b_j  and  grad_b[j] = scale * sum_i g[i][j] a_i
void DotsBackward(const Embeddings& a, const Embeddings& b, double scale,
                  std::span<const double> g, std::vector<double>& grad_a,
                  std::vector<double>& grad_b);

// Per-sample backward in parallel, then a parameter-parallel reduction that
// sums samples in index order.
void BackwardTexts(const ModelParams& params, std::span<const TextCache> caches,
                   std::span<const double> grad_out, ModelParams& grads);
void BackwardImages(const ModelParams& params, std::span<const ImageCache> caches,
                    std::span<const double> grad_out, ModelParams& grads);

}  // namespace hncl::kernels

#endif  // HNCL_KERNELS_H_
