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

#ifndef HNCL_RANDOM_H_
#define HNCL_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace hncl {

// Seeded random stream. Every stochastic operation takes one of these by
// reference so that callers own the state and runs stay reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Independent stream for (seed, key), e.g. one stream per sample index.
  static Rng Derive(std::uint64_t seed, std::uint64_t key);

  // Uniform integer in [0, n). n must be positive.
  std::size_t UniformIndex(std::size_t n);
  // Uniform real in [0, 1).
  double Uniform();
  double Normal(double mean, double stddev);

  template <typename T>
  void Shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[UniformIndex(i)]);
    }
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hncl

#endif  // HNCL_RANDOM_H_
