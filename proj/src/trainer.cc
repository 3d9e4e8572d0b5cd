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

#include "hncl/trainer.h"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <numeric>

#include "hncl/checkpoint.h"
#include "hncl/error.h"
#include "hncl/io.h"
#include "json.hpp"

namespace hncl {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kEpochStreamBase = 1000;

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::Validate() const {
  if (batch_size < 2) throw UsageError("batch size must be at least 2");
  if (epochs == 0) throw UsageError("epochs must be positive");
  if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
  if (!(weight_decay >= 0.0)) throw UsageError("weight decay must be >= 0");
  if (!(checkpoint_every_fraction > 0.0 && checkpoint_every_fraction <= 1.0)) {
    throw UsageError("checkpoint fraction must be in (0, 1]");
  }
  if (hard_negatives >= batch_size) {
    throw UsageError("hard negatives must be fewer than the batch size");
  }
}

std::vector<std::size_t> CheckpointBatches(std::size_t batches_per_epoch,
                                           double fraction) {
  std::vector<std::size_t> out;
  if (batches_per_epoch == 0) return out;
  // The epsilon keeps 640 * 0.1 at 64 despite rounding in the product.
  const auto every = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(static_cast<double>(batches_per_epoch) * fraction - 1e-9)));
  for (std::size_t b = every; b <= batches_per_epoch; b += every) out.push_back(b);
  if (out.empty() || out.back() != batches_per_epoch) out.push_back(batches_per_epoch);
  return out;
}

std::string CheckpointFileName(std::size_t epoch, std::size_t percent) {
  return "ckpt_e" + std::to_string(epoch) + "_p" + std::to_string(percent) + ".bin";
}

std::string RunLog::ToCsv() const {
  std::string out = "step,epoch,loss_total,loss_i2t,loss_t2i,wallclock_ms\n";
  for (const StepRecord& s : steps) {
    out += std::to_string(s.step) + ',' + std::to_string(s.epoch) + ',' +
           FormatDouble(s.loss.total) + ',' + FormatDouble(s.loss.i2t) + ',' +
           FormatDouble(s.loss.t2i) + ',' + FormatDouble(s.wallclock_ms) + '\n';
  }
  return out;
}

std::string RunLog::ToJson() const {
  nlohmann::json j;
  j["run"] = run;
  j["steps"] = nlohmann::json::array();
  for (const StepRecord& s : steps) {
    j["steps"].push_back({{"step", s.step},
                          {"epoch", s.epoch},
                          {"loss_total", s.loss.total},
                          {"loss_i2t", s.loss.i2t},
                          {"loss_t2i", s.loss.t2i},
                          {"wallclock_ms", s.wallclock_ms}});
  }
  j["checkpoints"] = nlohmann::json::array();
  for (const CheckpointRecord& c : checkpoints) {
    j["checkpoints"].push_back({{"step", c.step},
                                {"epoch", c.epoch},
                                {"batch", c.batch},
                                {"percent", c.percent},
                                {"file", c.file},
                                {"end_of_epoch", c.end_of_epoch}});
  }
  return j.dump(2) + "\n";
}

TrainResult Train(std::span<const PairedSample> corpus,
                  const ConceptLexicon& lexicon, const TrainConfig& config,
                  const std::filesystem::path& out_dir,
                  const CheckpointHook& hook) {
  config.Validate();
  std::vector<const PairedSample*> pool;
  std::vector<Caption> captions;
  for (const PairedSample& s : corpus) {
    if (s.image_features.empty() || !lexicon.Matches(s.caption)) continue;
    if (!pool.empty() && s.image_features.size() != pool.front()->image_features.size()) {
      throw DataError("sample '" + s.id + "' has an inconsistent feature dimension");
    }
    pool.push_back(&s);
    captions.push_back(s.caption);
  }
  if (pool.size() < config.batch_size) {
    throw DataError("only " + std::to_string(pool.size()) + " samples carry a " +
                    std::string(ConceptName(lexicon.concept_id())) +
                    " keyword and features; need at least one batch of " +
                    std::to_string(config.batch_size));
  }

  TrainResult result;
  result.log.run = config.run_name;
  Model& model = result.model;
  model.vocab = Vocabulary::Build(captions);
  ModelConfig mc;
  mc.vocab_size = model.vocab.size();
  mc.image_dim = pool.front()->image_features.size();
  mc.token_dim = config.token_dim;
  mc.embed_dim = config.embed_dim;
  mc.hidden_dim = config.hidden_dim;
  mc.max_positions = config.max_positions;
  model.params = InitParams(mc, Rng::Derive(config.seed, kInitStream).engine()());
  AdamState adam(mc);
  const AdamConfig adam_config = config.adam();
  const double max_logit_scale = std::log(kMaxLogitScaleExp);

  const std::size_t batches = pool.size() / config.batch_size;
  const std::vector<std::size_t> marks =
      CheckpointBatches(batches, config.checkpoint_every_fraction);
  spdlog::info("run {}: {} samples, {} batches/epoch, {} checkpoints/epoch, H={} ({})",
               config.run_name, pool.size(), batches, marks.size(),
               config.hard_negatives, HnModeName(config.hn_mode));

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> order(pool.size());
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng rng = Rng::Derive(config.seed, kEpochStreamBase + epoch);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.Shuffle(order);
    auto mark = marks.begin();
    for (std::size_t b = 1; b <= batches; ++b) {
      std::vector<const PairedSample*> members(config.batch_size);
      for (std::size_t i = 0; i < config.batch_size; ++i) {
        members[i] = pool[order[(b - 1) * config.batch_size + i]];
      }
      AugmentedBatch batch =
          InjectHardNegatives(MakeBatch(members), lexicon, config.hard_negatives, rng);
      LossAndGrad lg = LossAndGradients(model, batch, config.hn_mode);
      if (!std::isfinite(lg.loss.total)) {
        throw NumericError("non-finite loss at step " + std::to_string(step + 1));
      }
      AdamStep(model.params, lg.grads, adam, adam_config);
      model.params.logit_scale() = std::min(model.params.logit_scale(), max_logit_scale);
      if (!model.params.AllFinite()) {
        throw NumericError("non-finite parameters after step " + std::to_string(step + 1));
      }
      ++step;
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
      result.log.steps.push_back({step, epoch, lg.loss, ms});
      spdlog::debug("step {} epoch {} loss {:.6f} (i2t {:.6f}, t2i {:.6f})", step, epoch,
                    lg.loss.total, lg.loss.i2t, lg.loss.t2i);

      if (mark != marks.end() && *mark == b) {
        ++mark;
        CheckpointRecord record;
        record.step = step;
        record.epoch = epoch;
        record.batch = b;
        record.percent = static_cast<std::size_t>(
            std::lround(100.0 * static_cast<double>(b) / static_cast<double>(batches)));
        record.end_of_epoch = b == batches;
        if (!out_dir.empty()) {
          record.file = CheckpointFileName(epoch, record.percent);
          SaveCheckpoint(out_dir / record.file, model,
                         {config.run_name, std::string(ConceptName(lexicon.concept_id())),
                          epoch, record.percent, step});
        }
        if (hook) hook(model, record);
        result.log.checkpoints.push_back(std::move(record));
        spdlog::info("run {}: checkpoint epoch {} {}% (step {}, loss {:.4f})",
                     config.run_name, epoch, result.log.checkpoints.back().percent,
                     step, lg.loss.total);
      }
    }
  }
  return result;
}

}  // namespace hncl
