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

#ifndef HNCL_ENCODER_H_
#define HNCL_ENCODER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hncl/text.h"

namespace hncl {

using TokenId = std::uint32_t;

// Token inventory of the text encoder. Id 0 is reserved for unknown tokens.
class Vocabulary {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  // `tokens[0]` must be the unknown token; the rest unique and normalized.
  explicit Vocabulary(std::vector<std::string> tokens);

  // Sorted union of normalized caption tokens and all built-in lexicon
  // keyword tokens, so every generated hard negative is in vocabulary.
  static Vocabulary Build(std::span<const Caption> captions);

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  TokenId Id(std::string_view normalized_token) const;
  std::vector<TokenId> Encode(const Caption& caption) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t image_dim = 0;
  std::size_t token_dim = 32;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 64;
  std::size_t max_positions = 16;

  // Throws UsageError on a zero dimension.
  void Validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class ParamGroup : std::size_t {
  kTokenEmbeddings,     // vocab x token_dim
  kPositionEmbeddings,  // max_positions x token_dim
  kQuery,               // token_dim x token_dim
  kKey,                 // token_dim x token_dim
  kValue,               // token_dim x token_dim
  kTextProjection,      // token_dim x embed_dim
  kImageW1,             // hidden x image_dim
  kImageB1,             // hidden
  kImageW2,             // embed_dim x hidden
  kImageB2,             // embed_dim
  kLogitScale,          // 1
};
inline constexpr std::size_t kNumParamGroups = 11;

std::string_view ParamGroupName(ParamGroup group);

// All learnable values of the dual encoder in one flat buffer. Gradients and
// optimizer moments use the same type.
class ModelParams {
 public:
  ModelParams() = default;
  // Zero-initialized.
  explicit ModelParams(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> group(ParamGroup g);
  std::span<const double> group(ParamGroup g) const;
  std::size_t offset(ParamGroup g) const {
    return offsets_[static_cast<std::size_t>(g)];
  }
  std::size_t group_size(ParamGroup g) const;

  double logit_scale() const { return values_[offset(ParamGroup::kLogitScale)]; }
  double& logit_scale() { return values_[offset(ParamGroup::kLogitScale)]; }

  void SetZero();
  bool AllFinite() const;
  bool operator==(const ModelParams& other) const {
    return config_ == other.config_ && values_ == other.values_;
  }

 private:
  ModelConfig config_;
  std::array<std::size_t, kNumParamGroups + 1> offsets_{};
  std::vector<double> values_;
};

inline constexpr double kInitialTemperature = 0.07;
// exp(logit_scale) never exceeds this.
inline constexpr double kMaxLogitScaleExp = 100.0;

// Weights ~ N(0, 1/fan_in) (lookup tables count fan_in = 1), zero biases,
// logit scale ln(1/0.07).
ModelParams InitParams(const ModelConfig& config, std::uint64_t seed);

struct Model {
  Vocabulary vocab;
  ModelParams params;
};

// Forward state kept for the backward pass. Matrices are row-major.
struct TextCache {
  std::vector<TokenId> ids;
  std::vector<double> x;     // L x dt, embeddings + positions
  std::vector<double> q, k, v;
  std::vector<double> attn;  // L x L, row softmax
  std::vector<double> pooled;  // dt
  std::vector<double> z;       // embed_dim, pre-normalization
  double norm = 0.0;
  std::vector<double> out;     // unit embedding
};

struct ImageCache {
  std::vector<double> x;       // input features
  std::vector<double> hidden;  // tanh activations
  std::vector<double> z;
  double norm = 0.0;
  std::vector<double> out;
};

// Embed, one single-head self-attention pass with residual, mean-pool,
// project, L2-normalize. Throws UsageError on an empty caption.
void TextForward(const ModelParams& params, std::span<const TokenId> ids,
                 TextCache& cache);
// tanh MLP then L2-normalize. Throws UsageError on a dimension mismatch.
void ImageForward(const ModelParams& params, std::span<const double> features,
                  ImageCache& cache);

std::vector<double> EncodeText(const ModelParams& params,
                               std::span<const TokenId> ids);
std::vector<double> EncodeImage(const ModelParams& params,
                                std::span<const double> features);
std::vector<double> EncodeCaption(const Model& model, const Caption& caption);

// Per-sample intermediate gradients. Parameter gradients are sums of outer
// products of these with cached activations; see Accumulate*Grad.
struct TextLocalGrad {
  std::vector<double> gx;          // L x dt, w.r.t. embedded tokens
  std::vector<double> gq, gk, gv;  // L x dt
  std::vector<double> gz;          // embed_dim, w.r.t. the projection output
};

struct ImageLocalGrad {
  std::vector<double> ga;  // hidden, pre-activation
  std::vector<double> gz;  // embed_dim
};

void TextBackward(const ModelParams& params, const TextCache& cache,
                  std::span<const double> grad_out, TextLocalGrad& local);
void ImageBackward(const ModelParams& params, const ImageCache& cache,
                   std::span<const double> grad_out, ImageLocalGrad& local);

// Adds one sample's parameter gradients into `grads`.
void AccumulateTextGrad(const TextCache& cache, const TextLocalGrad& local,
                        ModelParams& grads);
void AccumulateImageGrad(const ImageCache& cache, const ImageLocalGrad& local,
                         ModelParams& grads);

}  // namespace hncl

#endif  // HNCL_ENCODER_H_
