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

#include "hncl/corpus.h"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "hncl/error.h"
#include "hncl/io.h"
#include "json.hpp"

namespace hncl {

namespace {

using nlohmann::json;

struct CategorizedObject {
  const char* name;
  const char* category;
};

// Synthetic palette order. The first twelve cover three super-categories
// with at least four members each; the rest follow the lexicon order.
constexpr CategorizedObject kPalette[] = {
    {"cat", "animal"},          {"dog", "animal"},
    {"horse", "animal"},        {"bird", "animal"},
    {"umbrella", "accessory"},  {"backpack", "accessory"},
    {"handbag", "accessory"},   {"suitcase", "accessory"},
    {"car", "vehicle"},         {"bus", "vehicle"},
    {"bicycle", "vehicle"},     {"truck", "vehicle"},
    {"person", "person"},       {"motorbike", "vehicle"},
    {"aeroplane", "vehicle"},   {"train", "vehicle"},
    {"boat", "vehicle"},        {"traffic light", "outdoor"},
    {"fire hydrant", "outdoor"}, {"stop sign", "outdoor"},
    {"parking meter", "outdoor"}, {"bench", "outdoor"},
    {"sheep", "animal"},        {"cow", "animal"},
    {"elephant", "animal"},     {"bear", "animal"},
    {"zebra", "animal"},        {"giraffe", "animal"},
    {"tie", "accessory"},       {"frisbee", "sports"},
    {"skis", "sports"},         {"snowboard", "sports"},
    {"sports ball", "sports"},  {"kite", "sports"},
    {"baseball bat", "sports"}, {"baseball glove", "sports"},
    {"skateboard", "sports"},   {"surfboard", "sports"},
    {"tennis racket", "sports"}, {"bottle", "kitchen"},
    {"wine glass", "kitchen"},  {"cup", "kitchen"},
    {"fork", "kitchen"},        {"knife", "kitchen"},
    {"spoon", "kitchen"},       {"bowl", "kitchen"},
    {"banana", "food"},         {"apple", "food"},
    {"sandwich", "food"},       {"orange", "food"},
    {"broccoli", "food"},       {"carrot", "food"},
    {"hot dog", "food"},        {"pizza", "food"},
    {"donut", "food"},          {"cake", "food"},
    {"chair", "furniture"},     {"sofa", "furniture"},
    {"potted plant", "furniture"}, {"bed", "furniture"},
    {"dining table", "furniture"}, {"toilet", "furniture"},
    {"tv monitor", "electronic"}, {"laptop", "electronic"},
    {"mouse", "electronic"},    {"remote", "electronic"},
    {"keyboard", "electronic"}, {"cell phone", "electronic"},
    {"microwave", "appliance"}, {"oven", "appliance"},
    {"toaster", "appliance"},   {"sink", "appliance"},
    {"refrigerator", "appliance"}, {"book", "indoor"},
    {"clock", "indoor"},        {"vase", "indoor"},
    {"scissors", "indoor"},     {"teddy bear", "indoor"},
    {"hair drier", "indoor"},   {"toothbrush", "indoor"},
};
static_assert(std::size(kPalette) == kMaxObjectVocab);

std::size_t BlockDim(std::size_t object_vocab_size) {
  return object_vocab_size * kNumColors + 1;
}

}  // namespace

const std::vector<std::string>& ObjectPalette() {
  static const std::vector<std::string> palette = [] {
    std::vector<std::string> out;
    for (const CategorizedObject& o : kPalette) out.emplace_back(o.name);
    return out;
  }();
  return palette;
}

std::string_view ObjectCategory(std::size_t object) {
  return kPalette[object].category;
}

const std::string& ColorWord(std::size_t color) {
  return BuiltinLexicon(ConceptId::kColor).keywords().at(color);
}

const std::string& RelationWord(std::size_t relation) {
  return BuiltinLexicon(ConceptId::kLocation).keywords().at(relation);
}

std::string_view SizeWord(EntitySize size) {
  return size == EntitySize::kLarge ? "large" : "small";
}

void ValidateScene(const SceneSpec& scene, std::size_t object_vocab_size) {
  if (scene.entities.empty() || scene.entities.size() > 2) {
    throw UsageError("scene must have one or two entities");
  }
  if (scene.relation.has_value() != (scene.entities.size() == 2)) {
    throw UsageError("scene relation must be present iff it has two entities");
  }
  if (scene.relation && *scene.relation >= kNumRelations) {
    throw UsageError("scene relation out of range");
  }
  for (const Entity& e : scene.entities) {
    if (e.object >= object_vocab_size || e.color >= kNumColors) {
      throw UsageError("scene entity out of vocabulary range");
    }
  }
}

void CorpusConfig::Validate() const {
  if (n_samples == 0) throw UsageError("corpus needs at least one sample");
  if (object_vocab_size == 0 || object_vocab_size > kMaxObjectVocab) {
    throw UsageError("object vocabulary size must be in [1, 80]");
  }
  if (!(binding_critical_fraction >= 0.0 && binding_critical_fraction <= 1.0)) {
    throw UsageError("binding-critical fraction must be in [0, 1]");
  }
  if (!(noise_sigma >= 0.0)) throw UsageError("noise sigma must be >= 0");
}

std::size_t SceneFeatureDim(std::size_t object_vocab_size) {
  return 2 * BlockDim(object_vocab_size) + kNumRelations;
}

Caption RenderCaption(const SceneSpec& scene) {
  std::string text;
  auto entity = [&](const Entity& e) {
    text += "a ";
    text += SizeWord(e.size);
    text += ' ';
    text += ColorWord(e.color);
    text += ' ';
    text += ObjectPalette().at(e.object);
  };
  entity(scene.entities.at(0));
  if (scene.entities.size() == 2) {
    text += ' ';
    text += RelationWord(*scene.relation);
    text += ' ';
    entity(scene.entities[1]);
  }
  return Tokenize(text);
}

std::vector<double> FeaturizeScene(const SceneSpec& scene,
                                   std::size_t object_vocab_size, double sigma,
                                   Rng& rng) {
  ValidateScene(scene, object_vocab_size);
  const std::size_t block = BlockDim(object_vocab_size);
  std::vector<double> features(SceneFeatureDim(object_vocab_size), 0.0);
  for (std::size_t k = 0; k < scene.entities.size(); ++k) {
    const Entity& e = scene.entities[k];
    const std::size_t offset = k * block;
    features[offset + e.object * kNumColors + e.color] = 1.0;
    features[offset + block - 1] = e.size == EntitySize::kLarge ? 1.0 : -1.0;
  }
  if (scene.relation) features[2 * block + *scene.relation] = 1.0;
  if (sigma > 0.0) {
    for (double& f : features) f += rng.Normal(0.0, sigma);
  }
  return features;
}

SceneSpec SampleScene(std::size_t object_vocab_size, std::size_t n_entities,
                      Rng& rng) {
  SceneSpec scene;
  for (std::size_t k = 0; k < n_entities; ++k) {
    Entity e;
    e.object = rng.UniformIndex(object_vocab_size);
    e.color = rng.UniformIndex(kNumColors);
    e.size = rng.UniformIndex(2) == 0 ? EntitySize::kSmall : EntitySize::kLarge;
    scene.entities.push_back(e);
  }
  if (n_entities == 2) scene.relation = rng.UniformIndex(kNumRelations);
  return scene;
}

std::set<ConceptId> DetectConcepts(const Caption& caption) {
  std::set<ConceptId> out;
  for (ConceptId c : kAllConcepts) {
    if (BuiltinLexicon(c).Matches(caption)) out.insert(c);
  }
  return out;
}

std::vector<PairedSample> GenerateCorpus(const CorpusConfig& config) {
  config.Validate();
  Rng rng(config.seed);
  // Each draw emits a near-pair with probability p, else one scene with 1 or
  // 2 entities. p = f / (4 - 3f) makes the expected share of two-entity
  // samples that belong to a near-pair equal f.
  const double f = config.binding_critical_fraction;
  const double pair_probability = f / (4.0 - 3.0 * f);
  std::vector<SceneSpec> scenes;
  scenes.reserve(config.n_samples);
  while (scenes.size() < config.n_samples) {
    const bool room_for_pair = scenes.size() + 1 < config.n_samples;
    if (room_for_pair && rng.Uniform() < pair_probability) {
      // Attribute-swapped near-pair: same objects and colors, colors bound
      // to the other entity.
      SceneSpec a = SampleScene(config.object_vocab_size, 2, rng);
      if (a.entities[0].color == a.entities[1].color) {
        a.entities[1].color =
            (a.entities[0].color + 1 + rng.UniformIndex(kNumColors - 1)) % kNumColors;
      }
      SceneSpec b = a;
      std::swap(b.entities[0].color, b.entities[1].color);
      scenes.push_back(std::move(a));
      scenes.push_back(std::move(b));
    } else {
      scenes.push_back(SampleScene(config.object_vocab_size, 1 + rng.UniformIndex(2), rng));
    }
  }

  std::vector<PairedSample> samples(config.n_samples);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    PairedSample& s = samples[i];
    std::ostringstream id;
    id << 's' << std::setw(6) << std::setfill('0') << i;
    s.id = id.str();
    s.caption = RenderCaption(scenes[i]);
    Rng noise = Rng::Derive(config.seed, i);
    s.image_features = FeaturizeScene(scenes[i], config.object_vocab_size,
                                      config.noise_sigma, noise);
    s.concepts = DetectConcepts(s.caption);
    s.scene = std::move(scenes[i]);
  }
  return samples;
}

std::string SampleToJson(const PairedSample& sample) {
  json row;
  row["id"] = sample.id;
  row["caption"] = Join(sample.caption);
  if (!sample.image_features.empty()) row["features"] = sample.image_features;
  json concepts = json::array();
  for (ConceptId c : sample.concepts) concepts.push_back(ConceptName(c));
  row["concepts"] = std::move(concepts);
  return row.dump();
}

void WriteJsonl(const std::filesystem::path& path,
                std::span<const PairedSample> samples) {
  std::string out;
  for (const PairedSample& s : samples) {
    out += SampleToJson(s);
    out.push_back('\n');
  }
  WriteFile(path, out);
}

std::vector<PairedSample> IngestJsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus '" + path.string() + "'");
  std::vector<PairedSample> samples;
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> dim;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& what) {
      return DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) throw fail("not a JSON object");
    if (!row.contains("id") || !row["id"].is_string()) throw fail("missing string field 'id'");
    if (!row.contains("caption") || !row["caption"].is_string()) {
      throw fail("missing string field 'caption'");
    }
    PairedSample s;
    s.id = row["id"].get<std::string>();
    s.caption = Tokenize(row["caption"].get<std::string>());
    if (s.caption.empty()) throw fail("empty caption");
    if (row.contains("features")) {
      const json& f = row["features"];
      if (!f.is_array()) throw fail("'features' must be a numeric array");
      for (const json& v : f) {
        if (!v.is_number()) throw fail("'features' must be a numeric array");
        s.image_features.push_back(v.get<double>());
      }
      if (s.image_features.empty()) throw fail("'features' is empty");
      if (dim && *dim != s.image_features.size()) {
        throw fail("feature dimension " + std::to_string(s.image_features.size()) +
                   " differs from earlier rows (" + std::to_string(*dim) + ")");
      }
      dim = s.image_features.size();
    }
    if (row.contains("concepts")) {
      if (!row["concepts"].is_array()) throw fail("'concepts' must be an array");
      for (const json& c : row["concepts"]) {
        if (!c.is_string()) throw fail("'concepts' must hold strings");
        try {
          s.concepts.insert(ParseConcept(c.get<std::string>()));
        } catch (const UsageError& e) {
          throw fail(e.what());
        }
      }
    } else {
      s.concepts = DetectConcepts(s.caption);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::map<ConceptId, std::size_t> CorpusStats(
    std::span<const PairedSample> samples,
    std::span<const ConceptLexicon* const> lexicons) {
  std::map<ConceptId, std::size_t> counts;
  for (const ConceptLexicon* lexicon : lexicons) {
    std::size_t& n = counts[lexicon->concept_id()];
    for (const PairedSample& s : samples) {
      if (lexicon->Matches(s.caption)) ++n;
    }
  }
  return counts;
}

std::vector<PairedSample> FilterByConcept(std::span<const PairedSample> samples,
                                          const ConceptLexicon& lexicon) {
  std::vector<PairedSample> out;
  for (const PairedSample& s : samples) {
    if (lexicon.Matches(s.caption)) out.push_back(s);
  }
  return out;
}

std::string CorpusManifestJson(const CorpusConfig& config,
                               const std::filesystem::path& corpus_path) {
  json manifest;
  manifest["config"] = {
      {"n_samples", config.n_samples},
      {"object_vocab_size", config.object_vocab_size},
      {"binding_critical_fraction", config.binding_critical_fraction},
      {"noise_sigma", config.noise_sigma},
  };
  manifest["seed"] = config.seed;
  manifest["corpus"] = corpus_path.filename().string();
  manifest["content_sha256"] = Sha256File(corpus_path);
  return manifest.dump(2) + "\n";
}

}  // namespace hncl
