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

#ifndef HNCL_REFERENCE_H_
#define HNCL_REFERENCE_H_

// Serial reference implementations of the OpenMP kernels. Kept for tests
// and the benchmark; they follow the same per-value summation order, so
// results must match the parallel path bit for bit.

#include <vector>

#include "hncl/objective.h"

namespace hncl::reference {

void ScaledDots(const Embeddings& a, const Embeddings& b, double scale,
                std::vector<double>& out);

LossAndGrad LossAndGradients(const Model& model, const AugmentedBatch& batch,
                             HnMode mode);

}  // namespace hncl::reference

#endif  // HNCL_REFERENCE_H_
