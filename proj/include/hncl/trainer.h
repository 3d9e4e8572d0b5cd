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

#ifndef HNCL_TRAINER_H_
#define HNCL_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hncl/corpus.h"
#include "hncl/encoder.h"
#include "hncl/lexicon.h"
#include "hncl/objective.h"
#include "hncl/optimizer.h"

namespace hncl {

struct TrainConfig {
  // Learning rate used for the 150M-parameter pretrained setting; selectable
  // but far too small for a model trained from scratch.
  static constexpr double kPretrainedLearningRate = 5e-6;

  std::size_t batch_size = 64;
  std::size_t epochs = 3;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.1;
  std::size_t hard_negatives = 0;
  HnMode hn_mode = HnMode::kAppend;
  ConceptId concept_id = ConceptId::kColor;
  double checkpoint_every_fraction = 0.10;
  std::uint64_t seed = 0;
  std::string run_name = "run";

  std::size_t token_dim = 32;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 64;
  std::size_t max_positions = 16;

  void Validate() const;
  AdamConfig adam() const {
    return {learning_rate, beta1, beta2, epsilon, weight_decay};
  }
};

struct StepRecord {
  std::size_t step = 0;  // 1-based, global
  std::size_t epoch = 0; // 1-based
  LossBreakdown loss;
  double wallclock_ms = 0.0;
};

struct CheckpointRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::size_t batch = 0;  // batches done in this epoch
  std::size_t percent = 0;
  std::string file;       // empty when nothing was written
  bool end_of_epoch = false;
};

struct RunLog {
  std::string run;
  std::vector<StepRecord> steps;
  std::vector<CheckpointRecord> checkpoints;

  // step,epoch,loss_total,loss_i2t,loss_t2i,wallclock_ms
  std::string ToCsv() const;
  std::string ToJson() const;
};

// Batch counts (1-based, within an epoch) after which a checkpoint is taken:
// every ceil(batches * fraction) batches, plus the last batch.
std::vector<std::size_t> CheckpointBatches(std::size_t batches_per_epoch,
                                           double fraction);
std::string CheckpointFileName(std::size_t epoch, std::size_t percent);

// Called at every checkpoint with the current model.
using CheckpointHook = std::function<void(const Model&, const CheckpointRecord&)>;

struct TrainResult {
  Model model;
  RunLog log;
};

// Trains on the samples matching `lexicon`. Shuffles every epoch, drops the
// incomplete trailing batch, injects fresh hard negatives each step. With a
// non-empty `out_dir`, writes ckpt_e{epoch}_p{percent}.bin files there.
// Throws DataError when the filtered corpus is smaller than one batch and
// NumericError on a non-finite loss.
TrainResult Train(std::span<const PairedSample> corpus,
                  const ConceptLexicon& lexicon, const TrainConfig& config,
                  const std::filesystem::path& out_dir = {},
                  const CheckpointHook& hook = {});

}  // namespace hncl

#endif  // HNCL_TRAINER_H_
