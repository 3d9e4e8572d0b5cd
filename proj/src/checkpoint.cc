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

#include "hncl/checkpoint.h"

#include <openssl/sha.h>

#include <bit>
#include <cstring>

#include "hncl/error.h"
#include "hncl/io.h"
#include "json.hpp"

namespace hncl {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "HNCLCKPT";

template <typename T>
void Put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T Get() {
    T value;
    std::memcpy(&value, Take(sizeof(T)).data(), sizeof(T));
    return value;
  }
  std::string_view Take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw DataError("checkpoint is truncated");
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string SerializeCheckpoint(const Model& model, const CheckpointInfo& info) {
  const ModelConfig& cfg = model.params.config();
  nlohmann::json header;
  header["format"] = "hncl-checkpoint";
  header["config"] = {{"vocab_size", cfg.vocab_size},   {"image_dim", cfg.image_dim},
                      {"token_dim", cfg.token_dim},     {"embed_dim", cfg.embed_dim},
                      {"hidden_dim", cfg.hidden_dim},   {"max_positions", cfg.max_positions}};
  header["vocab"] = model.vocab.tokens();
  header["info"] = {{"run", info.run},     {"concept", info.concept_id}, {"epoch", info.epoch},
                    {"percent", info.percent}, {"step", info.step}};
  const std::string header_text = header.dump();

  std::string out(kMagic);
  Put<std::uint32_t>(out, kCheckpointVersion);
  Put<std::uint64_t>(out, header_text.size());
  out += header_text;
  Put<std::uint32_t>(out, kNumParamGroups);
  for (std::size_t g = 0; g < kNumParamGroups; ++g) {
    const auto group = static_cast<ParamGroup>(g);
    const std::string_view name = ParamGroupName(group);
    auto values = model.params.group(group);
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    Put<std::uint64_t>(out, values.size());
    out.append(reinterpret_cast<const char*>(values.data()), values.size_bytes());
  }
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(out.data()), out.size(), digest);
  out.append(reinterpret_cast<const char*>(digest), sizeof(digest));
  return out;
}

LoadedCheckpoint ParseCheckpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + SHA256_DIGEST_LENGTH ||
      bytes.substr(0, kMagic.size()) != kMagic) {
    throw DataError("not a checkpoint file");
  }
  const std::string_view body = bytes.substr(0, bytes.size() - SHA256_DIGEST_LENGTH);
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(body.data()), body.size(), digest);
  if (std::memcmp(digest, bytes.data() + body.size(), SHA256_DIGEST_LENGTH) != 0) {
    throw DataError("checkpoint checksum mismatch");
  }

  Reader reader(body);
  reader.Take(kMagic.size());
  const auto version = reader.Get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = reader.Get<std::uint64_t>();
  nlohmann::json header = nlohmann::json::parse(reader.Take(header_len), nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "hncl-checkpoint") {
    throw DataError("checkpoint header is not valid");
  }

  LoadedCheckpoint out;
  try {
    const nlohmann::json& c = header.at("config");
    ModelConfig cfg;
    cfg.vocab_size = c.at("vocab_size").get<std::size_t>();
    cfg.image_dim = c.at("image_dim").get<std::size_t>();
    cfg.token_dim = c.at("token_dim").get<std::size_t>();
    cfg.embed_dim = c.at("embed_dim").get<std::size_t>();
    cfg.hidden_dim = c.at("hidden_dim").get<std::size_t>();
    cfg.max_positions = c.at("max_positions").get<std::size_t>();
    out.model.vocab = Vocabulary(header.at("vocab").get<std::vector<std::string>>());
    if (out.model.vocab.size() != cfg.vocab_size) {
      throw DataError("checkpoint vocabulary size disagrees with its config");
    }
    out.model.params = ModelParams(cfg);
    const nlohmann::json& info = header.at("info");
    out.info.run = info.at("run").get<std::string>();
    out.info.concept_id = info.at("concept").get<std::string>();
    out.info.epoch = info.at("epoch").get<std::size_t>();
    out.info.percent = info.at("percent").get<std::size_t>();
    out.info.step = info.at("step").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }

  const auto arrays = reader.Get<std::uint32_t>();
  if (arrays != kNumParamGroups) throw DataError("unexpected checkpoint array count");
  for (std::size_t g = 0; g < kNumParamGroups; ++g) {
    const auto group = static_cast<ParamGroup>(g);
    const auto name_len = reader.Get<std::uint32_t>();
    const std::string_view name = reader.Take(name_len);
    if (name != ParamGroupName(group)) {
      throw DataError("unexpected checkpoint array '" + std::string(name) + "'");
    }
    const auto count = reader.Get<std::uint64_t>();
    auto dst = out.model.params.group(group);
    if (count != dst.size()) {
      throw DataError("checkpoint array '" + std::string(name) + "' has wrong size");
    }
    std::string_view raw = reader.Take(count * sizeof(double));
    std::memcpy(dst.data(), raw.data(), raw.size());
  }
  if (reader.remaining() != 0) throw DataError("trailing bytes in checkpoint");
  if (!out.model.params.AllFinite()) throw DataError("checkpoint holds non-finite values");
  return out;
}

void SaveCheckpoint(const std::filesystem::path& path, const Model& model,
                    const CheckpointInfo& info) {
  WriteFile(path, SerializeCheckpoint(model, info));
}

LoadedCheckpoint LoadCheckpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw DataError("checkpoint '" + path.string() + "' does not exist");
  }
  return ParseCheckpoint(ReadFile(path));
}

}  // namespace hncl
