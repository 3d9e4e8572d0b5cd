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

#include "hncl/optimizer.h"

#include <cmath>

#include "hncl/error.h"

namespace hncl {

void AdamStep(ModelParams& params, const ModelParams& grads, AdamState& state,
              const AdamConfig& config) {
  if (!(grads.config() == params.config()) || !(state.m.config() == params.config())) {
    throw UsageError("optimizer shapes do not match the parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const double decay = config.learning_rate * config.weight_decay;
  const std::size_t scale_index = params.offset(ParamGroup::kLogitScale);

  auto theta = params.values();
  auto g = grads.values();
  auto m = state.m.values();
  auto v = state.v.values();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (i != scale_index) theta[i] -= decay * theta[i];
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    theta[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

}  // namespace hncl
