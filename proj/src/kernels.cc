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

#include "hncl/kernels.h"

#include <exception>
#include <mutex>

namespace hncl::kernels {

namespace {

// Exceptions must not escape an OpenMP region; the first one is rethrown
// after the loop.
class ExceptionSlot {
 public:
  template <typename F>
  void Run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void Rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
};

}  // namespace

void ForwardTexts(const ModelParams& params,
                  std::span<const std::vector<TokenId>> ids,
                  std::vector<TextCache>& caches) {
  caches.resize(ids.size());
  ExceptionSlot slot;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < ids.size(); ++i) {
    slot.Run([&] { TextForward(params, ids[i], caches[i]); });
  }
  slot.Rethrow();
}

void ForwardImages(const ModelParams& params,
                   std::span<const std::span<const double>> features,
                   std::vector<ImageCache>& caches) {
  caches.resize(features.size());
  ExceptionSlot slot;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < features.size(); ++i) {
    slot.Run([&] { ImageForward(params, features[i], caches[i]); });
  }
  slot.Rethrow();
}

Embeddings EncodeTexts(const ModelParams& params,
                       std::span<const std::vector<TokenId>> ids) {
  const std::size_t d = params.config().embed_dim;
  Embeddings out{d, std::vector<double>(ids.size() * d)};
  ExceptionSlot slot;
#pragma omp parallel
  {
    TextCache cache;
#pragma omp for schedule(dynamic, 16)
    for (std::size_t i = 0; i < ids.size(); ++i) {
      slot.Run([&] {
        TextForward(params, ids[i], cache);
        std::copy(cache.out.begin(), cache.out.end(), out.data.begin() + i * d);
      });
    }
  }
  slot.Rethrow();
  return out;
}

Embeddings EncodeImages(const ModelParams& params,
                        std::span<const std::span<const double>> features) {
  const std::size_t d = params.config().embed_dim;
  Embeddings out{d, std::vector<double>(features.size() * d)};
  ExceptionSlot slot;
#pragma omp parallel
  {
    ImageCache cache;
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < features.size(); ++i) {
      slot.Run([&] {
        ImageForward(params, features[i], cache);
        std::copy(cache.out.begin(), cache.out.end(), out.data.begin() + i * d);
      });
    }
  }
  slot.Rethrow();
  return out;
}

void ScaledDots(const Embeddings& a, const Embeddings& b, double scale,
                std::vector<double>& out) {
  const std::size_t n = a.count(), m = b.count(), d = a.dim;
  out.assign(n * m, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = &a.data[i * d];
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = &b.data[j * d];
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += ai[c] * bj[c];
      out[i * m + j] = scale * dot;
    }
  }
}

void DotsBackward(const Embeddings& a, const Embeddings& b, double scale,
                  std::span<const double> g, std::vector<double>& grad_a,
                  std::vector<double>& grad_b) {
  const std::size_t n = a.count(), m = b.count(), d = a.dim;
  grad_a.assign(n * d, 0.0);
  grad_b.assign(m * d, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double w = g[i * m + j];
      for (std::size_t c = 0; c < d; ++c) grad_a[i * d + c] += w * b.data[j * d + c];
    }
    for (std::size_t c = 0; c < d; ++c) grad_a[i * d + c] *= scale;
  }
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = g[i * m + j];
      for (std::size_t c = 0; c < d; ++c) grad_b[j * d + c] += w * a.data[i * d + c];
    }
    for (std::size_t c = 0; c < d; ++c) grad_b[j * d + c] *= scale;
  }
}

void BackwardTexts(const ModelParams& params, std::span<const TextCache> caches,
                   std::span<const double> grad_out, ModelParams& grads) {
  const ModelConfig& cfg = params.config();
  const std::size_t n = caches.size();
  const std::size_t dt = cfg.token_dim, d = cfg.embed_dim;
  std::vector<TextLocalGrad> locals(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t s = 0; s < n; ++s) {
    TextBackward(params, caches[s], grad_out.subspan(s * d, d), locals[s]);
  }

  auto outer = [&](ParamGroup group, auto right_of) {
    auto dst = grads.group(group);
#pragma omp parallel for schedule(static)
    for (std::size_t a = 0; a < dt; ++a) {
      for (std::size_t b = 0; b < dt; ++b) {
        double acc = dst[a * dt + b];
        for (std::size_t s = 0; s < n; ++s) {
          const std::vector<double>& x = caches[s].x;
          const std::vector<double>& right = right_of(locals[s]);
          const std::size_t L = caches[s].ids.size();
          for (std::size_t p = 0; p < L; ++p) acc += x[p * dt + a] * right[p * dt + b];
        }
        dst[a * dt + b] = acc;
      }
    }
  };
  outer(ParamGroup::kQuery, [](const TextLocalGrad& l) -> const std::vector<double>& { return l.gq; });
  outer(ParamGroup::kKey, [](const TextLocalGrad& l) -> const std::vector<double>& { return l.gk; });
  outer(ParamGroup::kValue, [](const TextLocalGrad& l) -> const std::vector<double>& { return l.gv; });

  auto gwt = grads.group(ParamGroup::kTextProjection);
#pragma omp parallel for schedule(static)
  for (std::size_t a = 0; a < dt; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      double acc = gwt[a * d + b];
      for (std::size_t s = 0; s < n; ++s) acc += caches[s].pooled[a] * locals[s].gz[b];
      gwt[a * d + b] = acc;
    }
  }

  // Scatter rows; parallel over the embedding coordinate keeps the
  // per-entry order (sample, position).
  auto gemb = grads.group(ParamGroup::kTokenEmbeddings);
  auto gpos = grads.group(ParamGroup::kPositionEmbeddings);
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < dt; ++c) {
    for (std::size_t s = 0; s < n; ++s) {
      const TextCache& cache = caches[s];
      for (std::size_t p = 0; p < cache.ids.size(); ++p) {
        const TokenId id = cache.ids[p] < cfg.vocab_size ? cache.ids[p] : Vocabulary::kUnk;
        const double g = locals[s].gx[p * dt + c];
        gemb[id * dt + c] += g;
        if (p < cfg.max_positions) gpos[p * dt + c] += g;
      }
    }
  }
}

void BackwardImages(const ModelParams& params, std::span<const ImageCache> caches,
                    std::span<const double> grad_out, ModelParams& grads) {
  const ModelConfig& cfg = params.config();
  const std::size_t n = caches.size();
  const std::size_t D = cfg.image_dim, H = cfg.hidden_dim, d = cfg.embed_dim;
  std::vector<ImageLocalGrad> locals(n);
#pragma omp parallel for schedule(static)
  for (std::size_t s = 0; s < n; ++s) {
    ImageBackward(params, caches[s], grad_out.subspan(s * d, d), locals[s]);
  }

  auto gw1 = grads.group(ParamGroup::kImageW1);
  auto gb1 = grads.group(ParamGroup::kImageB1);
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < D; ++c) {
      double acc = gw1[r * D + c];
      for (std::size_t s = 0; s < n; ++s) acc += locals[s].ga[r] * caches[s].x[c];
      gw1[r * D + c] = acc;
    }
    double acc = gb1[r];
    for (std::size_t s = 0; s < n; ++s) acc += locals[s].ga[r];
    gb1[r] = acc;
  }
  auto gw2 = grads.group(ParamGroup::kImageW2);
  auto gb2 = grads.group(ParamGroup::kImageB2);
#pragma omp parallel for schedule(static)
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < H; ++c) {
      double acc = gw2[r * H + c];
      for (std::size_t s = 0; s < n; ++s) acc += locals[s].gz[r] * caches[s].hidden[c];
      gw2[r * H + c] = acc;
    }
    double acc = gb2[r];
    for (std::size_t s = 0; s < n; ++s) acc += locals[s].gz[r];
    gb2[r] = acc;
  }
}

}  // namespace hncl::kernels
