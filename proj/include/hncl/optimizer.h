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

#ifndef HNCL_OPTIMIZER_H_
#define HNCL_OPTIMIZER_H_

#include <cstdint>

#include "hncl/encoder.h"

namespace hncl {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.1;
};

struct AdamState {
  AdamState() = default;
  explicit AdamState(const ModelConfig& config) : m(config), v(config) {}

  ModelParams m;
  ModelParams v;
  std::int64_t step = 0;
};

// Adam with bias correction. Decoupled weight decay
// theta <- theta - lr * wd * theta is applied first, to every value except
// the logit scale.
void AdamStep(ModelParams& params, const ModelParams& grads, AdamState& state,
              const AdamConfig& config);

}  // namespace hncl

#endif  // HNCL_OPTIMIZER_H_
