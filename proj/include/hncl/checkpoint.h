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

#ifndef HNCL_CHECKPOINT_H_
#define HNCL_CHECKPOINT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "hncl/encoder.h"

namespace hncl {

// Checkpoint container, version 1. All integers little-endian.
//
//   "HNCLCKPT"                      8 bytes magic
//   u32 version
//   u64 header_len, header bytes    JSON: model config, vocabulary, info
//   u32 array_count
//   per array: u32 name_len, name, u64 count, count x f64
//   32 bytes                        SHA-256 of everything above
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointInfo {
  std::string run;
  std::string concept_id;
  std::size_t epoch = 0;
  std::size_t percent = 0;
  std::size_t step = 0;
};

struct LoadedCheckpoint {
  Model model;
  CheckpointInfo info;
};

std::string SerializeCheckpoint(const Model& model, const CheckpointInfo& info);
// Throws DataError on a truncated, corrupted or unknown container.
LoadedCheckpoint ParseCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::filesystem::path& path, const Model& model,
                    const CheckpointInfo& info);
LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace hncl

#endif  // HNCL_CHECKPOINT_H_
