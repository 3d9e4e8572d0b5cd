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

#ifndef HNCL_CORPUS_H_
#define HNCL_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hncl/lexicon.h"
#include "hncl/random.h"
#include "hncl/text.h"

namespace hncl {

// Synthetic scene palette. Colors, sizes and relations are drawn from the
// built-in lexicons so that every rendered caption can be substituted.
inline constexpr std::size_t kNumColors = 9;
inline constexpr std::size_t kNumRelations = 12;
inline constexpr std::size_t kMaxObjectVocab = 80;

enum class EntitySize { kSmall, kLarge };

struct Entity {
  std::size_t object = 0;  // index into the object palette, < object vocab
  std::size_t color = 0;   // index into the color lexicon, < kNumColors
  EntitySize size = EntitySize::kSmall;

  bool operator==(const Entity&) const = default;
};

// One or two entities; a relation (index into the location keywords) links
// entity 0 (subject) to entity 1 and is present iff there are two.
struct SceneSpec {
  std::vector<Entity> entities;
  std::optional<std::size_t> relation;

  bool operator==(const SceneSpec&) const = default;
};

// Object names used by the synthetic corpus, in id order. A permutation of
// the 80 object keywords whose first entries span several super-categories.
const std::vector<std::string>& ObjectPalette();
const std::string& ColorWord(std::size_t color);
const std::string& RelationWord(std::size_t relation);
std::string_view SizeWord(EntitySize size);
// Super-category label of a palette object.
std::string_view ObjectCategory(std::size_t object);

// Throws UsageError when the scene is malformed for the vocabulary.
void ValidateScene(const SceneSpec& scene, std::size_t object_vocab_size);

struct PairedSample {
  std::string id;
  Caption caption;
  std::vector<double> image_features;  // empty in text-only mode
  std::set<ConceptId> concepts;
  std::optional<SceneSpec> scene;
};

struct CorpusConfig {
  std::size_t n_samples = 20000;
  std::size_t object_vocab_size = 12;
  double binding_critical_fraction = 0.5;
  double noise_sigma = 0.05;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Feature dimension of featurized scenes for a given object vocabulary.
std::size_t SceneFeatureDim(std::size_t object_vocab_size);

Caption RenderCaption(const SceneSpec& scene);

// Per entity: flattened one-hot(object) x one-hot(color) followed by a size
// scalar in {-1, +1}. Subject block, object block (zero for single-entity
// scenes), then the relation one-hot. Gaussian noise N(0, sigma^2) is added
// to every coordinate.
std::vector<double> FeaturizeScene(const SceneSpec& scene,
                                   std::size_t object_vocab_size, double sigma,
                                   Rng& rng);

// Random scene with the given entity count (1 or 2).
SceneSpec SampleScene(std::size_t object_vocab_size, std::size_t n_entities,
                      Rng& rng);

// Concepts whose built-in lexicon matches the caption.
std::set<ConceptId> DetectConcepts(const Caption& caption);

std::vector<PairedSample> GenerateCorpus(const CorpusConfig& config);

// JSONL rows: {"id", "caption", "features"?, "concepts"?}.
std::vector<PairedSample> IngestJsonl(const std::filesystem::path& path);
std::string SampleToJson(const PairedSample& sample);
void WriteJsonl(const std::filesystem::path& path,
                std::span<const PairedSample> samples);

// Samples with at least one keyword span per concept.
std::map<ConceptId, std::size_t> CorpusStats(
    std::span<const PairedSample> samples,
    std::span<const ConceptLexicon* const> lexicons);

std::vector<PairedSample> FilterByConcept(std::span<const PairedSample> samples,
                                          const ConceptLexicon& lexicon);

// Manifest: config, seed, sample count and SHA-256 of the corpus bytes.
std::string CorpusManifestJson(const CorpusConfig& config,
                               const std::filesystem::path& corpus_path);

}  // namespace hncl

#endif  // HNCL_CORPUS_H_
