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

#include "hncl/encoder.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "hncl/error.h"
#include "hncl/lexicon.h"
#include "hncl/random.h"

namespace hncl {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{std::string(kUnkToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty() || tokens_[0] != kUnkToken) {
    throw DataError("vocabulary must start with the unknown token");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::Build(std::span<const Caption> captions) {
  std::set<std::string> unique;
  for (ConceptId c : kAllConcepts) {
    for (const SubstitutionRule& rule : BuiltinLexicon(c).rules()) {
      for (const std::string& kw : rule.members) {
        for (const std::string& t : Tokenize(kw)) unique.insert(t);
      }
    }
  }
  for (const Caption& caption : captions) {
    for (const std::string& t : caption) {
      std::string n = NormalizeToken(t);
      if (!n.empty()) unique.insert(std::move(n));
    }
  }
  unique.erase(std::string(kUnkToken));
  std::vector<std::string> tokens{std::string(kUnkToken)};
  tokens.insert(tokens.end(), unique.begin(), unique.end());
  return Vocabulary(std::move(tokens));
}

TokenId Vocabulary::Id(std::string_view normalized_token) const {
  auto it = ids_.find(std::string(normalized_token));
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<TokenId> Vocabulary::Encode(const Caption& caption) const {
  std::vector<TokenId> ids;
  ids.reserve(caption.size());
  for (const std::string& t : caption) ids.push_back(Id(NormalizeToken(t)));
  return ids;
}

void ModelConfig::Validate() const {
  if (vocab_size == 0 || image_dim == 0 || token_dim == 0 || embed_dim == 0 ||
      hidden_dim == 0 || max_positions == 0) {
    throw UsageError("model dimensions must be positive");
  }
}

std::string_view ParamGroupName(ParamGroup group) {
  static constexpr std::string_view kNames[kNumParamGroups] = {
      "token_embeddings", "position_embeddings", "attn_query", "attn_key",
      "attn_value",       "text_projection",     "image_w1",   "image_b1",
      "image_w2",         "image_b2",            "logit_scale"};
  return kNames[static_cast<std::size_t>(group)];
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config_.Validate();
  const std::size_t dt = config.token_dim;
  const std::size_t sizes[kNumParamGroups] = {
      config.vocab_size * dt,
      config.max_positions * dt,
      dt * dt,
      dt * dt,
      dt * dt,
      dt * config.embed_dim,
      config.hidden_dim * config.image_dim,
      config.hidden_dim,
      config.embed_dim * config.hidden_dim,
      config.embed_dim,
      1};
  offsets_[0] = 0;
  for (std::size_t g = 0; g < kNumParamGroups; ++g) {
    offsets_[g + 1] = offsets_[g] + sizes[g];
  }
  values_.assign(offsets_[kNumParamGroups], 0.0);
}

std::size_t ModelParams::group_size(ParamGroup g) const {
  auto i = static_cast<std::size_t>(g);
  return offsets_[i + 1] - offsets_[i];
}

std::span<double> ModelParams::group(ParamGroup g) {
  return std::span<double>(values_).subspan(offset(g), group_size(g));
}

std::span<const double> ModelParams::group(ParamGroup g) const {
  return std::span<const double>(values_).subspan(offset(g), group_size(g));
}

void ModelParams::SetZero() { std::fill(values_.begin(), values_.end(), 0.0); }

bool ModelParams::AllFinite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

ModelParams InitParams(const ModelConfig& config, std::uint64_t seed) {
  ModelParams params(config);
  Rng rng(seed);
  auto fill = [&](ParamGroup g, double fan_in) {
    const double stddev = 1.0 / std::sqrt(fan_in);
    for (double& w : params.group(g)) w = rng.Normal(0.0, stddev);
  };
  const auto dt = static_cast<double>(config.token_dim);
  fill(ParamGroup::kTokenEmbeddings, 1.0);
  fill(ParamGroup::kPositionEmbeddings, 1.0);
  fill(ParamGroup::kQuery, dt);
  fill(ParamGroup::kKey, dt);
  fill(ParamGroup::kValue, dt);
  fill(ParamGroup::kTextProjection, dt);
  fill(ParamGroup::kImageW1, static_cast<double>(config.image_dim));
  fill(ParamGroup::kImageW2, static_cast<double>(config.hidden_dim));
  params.logit_scale() = std::log(1.0 / kInitialTemperature);
  return params;
}

namespace {

// out = z / |z|; throws on a degenerate projection.
double Normalize(std::span<const double> z, std::vector<double>& out) {
  double sq = 0.0;
  for (double v : z) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NumericError("cannot normalize a zero or non-finite embedding");
  }
  out.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] / norm;
  return norm;
}

// Gradient through out = z / |z|.
void NormalizeBackward(std::span<const double> out, double norm,
                       std::span<const double> grad_out,
                       std::vector<double>& gz) {
  double dot = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) dot += out[i] * grad_out[i];
  gz.resize(out.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    gz[i] = (grad_out[i] - out[i] * dot) / norm;
  }
}

// c (rows x n) = a (rows x m) * b (m x n)
void MatMul(std::span<const double> a, std::span<const double> b,
            std::size_t rows, std::size_t m, std::size_t n,
            std::vector<double>& c) {
  c.assign(rows * n, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      const double aik = a[i * m + k];
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += aik * b[k * n + j];
    }
  }
}

}  // namespace

void TextForward(const ModelParams& params, std::span<const TokenId> ids,
                 TextCache& cache) {
  const ModelConfig& cfg = params.config();
  const std::size_t L = ids.size();
  const std::size_t dt = cfg.token_dim;
  if (L == 0) throw UsageError("cannot encode an empty caption");
  auto emb = params.group(ParamGroup::kTokenEmbeddings);
  auto pos = params.group(ParamGroup::kPositionEmbeddings);

  cache.ids.assign(ids.begin(), ids.end());
  cache.x.assign(L * dt, 0.0);
  for (std::size_t p = 0; p < L; ++p) {
    const TokenId id = ids[p] < cfg.vocab_size ? ids[p] : Vocabulary::kUnk;
    for (std::size_t c = 0; c < dt; ++c) {
      cache.x[p * dt + c] = emb[id * dt + c] + (p < cfg.max_positions ? pos[p * dt + c] : 0.0);
    }
  }
  MatMul(cache.x, params.group(ParamGroup::kQuery), L, dt, dt, cache.q);
  MatMul(cache.x, params.group(ParamGroup::kKey), L, dt, dt, cache.k);
  MatMul(cache.x, params.group(ParamGroup::kValue), L, dt, dt, cache.v);

  const double scale = 1.0 / std::sqrt(static_cast<double>(dt));
  cache.attn.assign(L * L, 0.0);
  for (std::size_t p = 0; p < L; ++p) {
    double* row = &cache.attn[p * L];
    double max_logit = -INFINITY;
    for (std::size_t r = 0; r < L; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < dt; ++j) s += cache.q[p * dt + j] * cache.k[r * dt + j];
      row[r] = s * scale;
      max_logit = std::max(max_logit, row[r]);
    }
    double total = 0.0;
    for (std::size_t r = 0; r < L; ++r) {
      row[r] = std::exp(row[r] - max_logit);
      total += row[r];
    }
    for (std::size_t r = 0; r < L; ++r) row[r] /= total;
  }

  // pooled = mean_p (x_p + sum_r attn[p][r] v_r)
  cache.pooled.assign(dt, 0.0);
  for (std::size_t p = 0; p < L; ++p) {
    for (std::size_t c = 0; c < dt; ++c) {
      double mixed = 0.0;
      for (std::size_t r = 0; r < L; ++r) mixed += cache.attn[p * L + r] * cache.v[r * dt + c];
      cache.pooled[c] += cache.x[p * dt + c] + mixed;
    }
  }
  for (double& c : cache.pooled) c /= static_cast<double>(L);

  MatMul(cache.pooled, params.group(ParamGroup::kTextProjection), 1, dt,
         cfg.embed_dim, cache.z);
  cache.norm = Normalize(cache.z, cache.out);
}

void ImageForward(const ModelParams& params, std::span<const double> features,
                  ImageCache& cache) {
  const ModelConfig& cfg = params.config();
  if (features.size() != cfg.image_dim) {
    throw UsageError("image feature dimension " + std::to_string(features.size()) +
                     " does not match model dimension " + std::to_string(cfg.image_dim));
  }
  auto w1 = params.group(ParamGroup::kImageW1);
  auto b1 = params.group(ParamGroup::kImageB1);
  auto w2 = params.group(ParamGroup::kImageW2);
  auto b2 = params.group(ParamGroup::kImageB2);
  const std::size_t D = cfg.image_dim, H = cfg.hidden_dim, d = cfg.embed_dim;

  cache.x.assign(features.begin(), features.end());
  cache.hidden.resize(H);
  for (std::size_t r = 0; r < H; ++r) {
    double a = b1[r];
    for (std::size_t c = 0; c < D; ++c) a += w1[r * D + c] * features[c];
    cache.hidden[r] = std::tanh(a);
  }
  cache.z.resize(d);
  for (std::size_t r = 0; r < d; ++r) {
    double a = b2[r];
    for (std::size_t c = 0; c < H; ++c) a += w2[r * H + c] * cache.hidden[c];
    cache.z[r] = a;
  }
  cache.norm = Normalize(cache.z, cache.out);
}

std::vector<double> EncodeText(const ModelParams& params,
                               std::span<const TokenId> ids) {
  TextCache cache;
  TextForward(params, ids, cache);
  return std::move(cache.out);
}

std::vector<double> EncodeImage(const ModelParams& params,
                                std::span<const double> features) {
  ImageCache cache;
  ImageForward(params, features, cache);
  return std::move(cache.out);
}

std::vector<double> EncodeCaption(const Model& model, const Caption& caption) {
  return EncodeText(model.params, model.vocab.Encode(caption));
}

void TextBackward(const ModelParams& params, const TextCache& cache,
                  std::span<const double> grad_out, TextLocalGrad& local) {
  const ModelConfig& cfg = params.config();
  const std::size_t L = cache.ids.size();
  const std::size_t dt = cfg.token_dim, d = cfg.embed_dim;
  auto wt = params.group(ParamGroup::kTextProjection);
  auto wq = params.group(ParamGroup::kQuery);
  auto wk = params.group(ParamGroup::kKey);
  auto wv = params.group(ParamGroup::kValue);

  NormalizeBackward(cache.out, cache.norm, grad_out, local.gz);

  // Every position receives the same gradient through the mean pool.
  std::vector<double> gh(dt, 0.0);
  for (std::size_t a = 0; a < dt; ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < d; ++b) s += wt[a * d + b] * local.gz[b];
    gh[a] = s / static_cast<double>(L);
  }

  // d/d attn[p][r] = gh . v_r, identical across query positions p.
  std::vector<double> gattn(L);
  for (std::size_t r = 0; r < L; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < dt; ++c) s += gh[c] * cache.v[r * dt + c];
    gattn[r] = s;
  }

  local.gv.assign(L * dt, 0.0);
  for (std::size_t r = 0; r < L; ++r) {
    double col = 0.0;
    for (std::size_t p = 0; p < L; ++p) col += cache.attn[p * L + r];
    for (std::size_t c = 0; c < dt; ++c) local.gv[r * dt + c] = col * gh[c];
  }

  const double scale = 1.0 / std::sqrt(static_cast<double>(dt));
  std::vector<double> glogit(L * L);
  for (std::size_t p = 0; p < L; ++p) {
    double expect = 0.0;
    for (std::size_t r = 0; r < L; ++r) expect += cache.attn[p * L + r] * gattn[r];
    for (std::size_t r = 0; r < L; ++r) {
      glogit[p * L + r] = cache.attn[p * L + r] * (gattn[r] - expect) * scale;
    }
  }

  local.gq.assign(L * dt, 0.0);
  local.gk.assign(L * dt, 0.0);
  for (std::size_t p = 0; p < L; ++p) {
    for (std::size_t r = 0; r < L; ++r) {
      const double g = glogit[p * L + r];
      for (std::size_t j = 0; j < dt; ++j) {
        local.gq[p * dt + j] += g * cache.k[r * dt + j];
        local.gk[r * dt + j] += g * cache.q[p * dt + j];
      }
    }
  }

  local.gx.assign(L * dt, 0.0);
  for (std::size_t p = 0; p < L; ++p) {
    for (std::size_t c = 0; c < dt; ++c) {
      double s = gh[c];
      for (std::size_t j = 0; j < dt; ++j) {
        s += local.gq[p * dt + j] * wq[c * dt + j] +
             local.gk[p * dt + j] * wk[c * dt + j] +
             local.gv[p * dt + j] * wv[c * dt + j];
      }
      local.gx[p * dt + c] = s;
    }
  }
}

void ImageBackward(const ModelParams& params, const ImageCache& cache,
                   std::span<const double> grad_out, ImageLocalGrad& local) {
  const ModelConfig& cfg = params.config();
  const std::size_t H = cfg.hidden_dim, d = cfg.embed_dim;
  auto w2 = params.group(ParamGroup::kImageW2);
  NormalizeBackward(cache.out, cache.norm, grad_out, local.gz);
  local.ga.assign(H, 0.0);
  for (std::size_t c = 0; c < H; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < d; ++r) s += w2[r * H + c] * local.gz[r];
    const double h = cache.hidden[c];
    local.ga[c] = s * (1.0 - h * h);
  }
}

void AccumulateTextGrad(const TextCache& cache, const TextLocalGrad& local,
                        ModelParams& grads) {
  const ModelConfig& cfg = grads.config();
  const std::size_t L = cache.ids.size();
  const std::size_t dt = cfg.token_dim, d = cfg.embed_dim;
  auto outer = [&](ParamGroup g, const std::vector<double>& right) {
    auto dst = grads.group(g);
    for (std::size_t a = 0; a < dt; ++a) {
      for (std::size_t b = 0; b < dt; ++b) {
        double& acc = dst[a * dt + b];
        for (std::size_t p = 0; p < L; ++p) acc += cache.x[p * dt + a] * right[p * dt + b];
      }
    }
  };
  outer(ParamGroup::kQuery, local.gq);
  outer(ParamGroup::kKey, local.gk);
  outer(ParamGroup::kValue, local.gv);
  auto gwt = grads.group(ParamGroup::kTextProjection);
  for (std::size_t a = 0; a < dt; ++a) {
    for (std::size_t b = 0; b < d; ++b) gwt[a * d + b] += cache.pooled[a] * local.gz[b];
  }
  auto gemb = grads.group(ParamGroup::kTokenEmbeddings);
  auto gpos = grads.group(ParamGroup::kPositionEmbeddings);
  for (std::size_t p = 0; p < L; ++p) {
    const TokenId id = cache.ids[p] < cfg.vocab_size ? cache.ids[p] : Vocabulary::kUnk;
    for (std::size_t c = 0; c < dt; ++c) gemb[id * dt + c] += local.gx[p * dt + c];
    if (p < cfg.max_positions) {
      for (std::size_t c = 0; c < dt; ++c) gpos[p * dt + c] += local.gx[p * dt + c];
    }
  }
}

void AccumulateImageGrad(const ImageCache& cache, const ImageLocalGrad& local,
                         ModelParams& grads) {
  const ModelConfig& cfg = grads.config();
  const std::size_t D = cfg.image_dim, H = cfg.hidden_dim, d = cfg.embed_dim;
  auto gw1 = grads.group(ParamGroup::kImageW1);
  auto gb1 = grads.group(ParamGroup::kImageB1);
  auto gw2 = grads.group(ParamGroup::kImageW2);
  auto gb2 = grads.group(ParamGroup::kImageB2);
  for (std::size_t r = 0; r < H; ++r) {
    for (std::size_t c = 0; c < D; ++c) gw1[r * D + c] += local.ga[r] * cache.x[c];
    gb1[r] += local.ga[r];
  }
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t c = 0; c < H; ++c) gw2[r * H + c] += local.gz[r] * cache.hidden[c];
    gb2[r] += local.gz[r];
  }
}

}  // namespace hncl
