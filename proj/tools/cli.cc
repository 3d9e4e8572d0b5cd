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

#include "cli.h"

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <tuple>
#include <vector>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "hncl/checkpoint.h"
#include "hncl/corpus.h"
#include "hncl/error.h"
#include "hncl/evalsuite.h"
#include "hncl/io.h"
#include "hncl/lexicon.h"
#include "hncl/objective.h"
#include "hncl/random.h"
#include "hncl/text.h"
#include "hncl/trainer.h"
#include "json.hpp"

namespace hncl::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Common {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string config;
};

void AddCommon(CLI::App* sub, Common& common) {
  sub->add_option("--seed", common.seed, "Random seed")->capture_default_str();
  sub->add_option("--threads", common.threads,
                  "Worker threads, 0 for all available cores")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--config", common.config,
                  "JSON object of option values; flags take precedence");
}

std::string ConfigScalar(const std::string& key, const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_number()) return value.dump();
  throw UsageError("config key '" + key + "' must be a string, number or boolean");
}

// Fills options not given on the command line from the config file.
void ApplyConfig(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  const json config = json::parse(ReadFile(path), nullptr, false);
  if (config.is_discarded() || !config.is_object()) {
    throw UsageError("config file '" + path + "' is not a JSON object");
  }
  for (const auto& [key, value] : config.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* option =
        name == "config" ? nullptr : sub->get_option_no_throw("--" + name);
    if (option == nullptr) {
      throw UsageError("config file '" + path + "': unknown key '" + key +
                       "' for '" + sub->get_name() + "'");
    }
    if (option->count() > 0) continue;
    try {
      if (value.is_array()) {
        for (const json& item : value) option->add_result(ConfigScalar(key, item));
      } else {
        option->add_result(ConfigScalar(key, value));
      }
      option->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config key '" + key + "': " + e.what());
    }
  }
}

void Require(bool present, const std::string& flag) {
  if (!present) throw UsageError("missing required option " + flag);
}

void SetupLogging() {
  static std::shared_ptr<spdlog::logger> logger = [] {
    auto l = std::make_shared<spdlog::logger>(
        "hncl", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    spdlog::set_default_logger(l);
    return l;
  }();
  const char* level = std::getenv("HNCL_LOG");
  const std::string name = level == nullptr ? "info" : level;
  if (name == "error") {
    logger->set_level(spdlog::level::err);
  } else if (name == "info") {
    logger->set_level(spdlog::level::info);
  } else if (name == "debug") {
    logger->set_level(spdlog::level::debug);
  } else {
    throw UsageError("HNCL_LOG must be one of error, info, debug; got '" + name + "'");
  }
}

// --- gen-corpus ------------------------------------------------------------

struct GenCorpusArgs {
  std::string out;
  std::string manifest;
  CorpusConfig corpus;
};

void AddCorpusOptions(CLI::App* sub, CorpusConfig& c) {
  sub->add_option("--n", c.n_samples, "Number of samples")->capture_default_str();
  sub->add_option("--object-vocab", c.object_vocab_size, "Objects in the scene palette")
      ->capture_default_str();
  sub->add_option("--binding-fraction", c.binding_critical_fraction,
                  "Probability of emitting an attribute-swapped pair")
      ->capture_default_str();
  sub->add_option("--sigma", c.noise_sigma, "Feature noise standard deviation")
      ->capture_default_str();
}

void GenCorpus(const GenCorpusArgs& args, const Common& common) {
  Require(!args.out.empty(), "--out");
  CorpusConfig config = args.corpus;
  config.seed = common.seed;
  const std::vector<PairedSample> samples = GenerateCorpus(config);
  const fs::path out(args.out);
  WriteJsonl(out, samples);
  fs::path manifest(args.manifest);
  if (manifest.empty()) manifest = fs::path(out).replace_extension(".manifest.json");
  WriteFile(manifest, CorpusManifestJson(config, out));
  spdlog::info("wrote {} samples to {} (manifest {})", samples.size(), out.string(),
               manifest.string());
}

// --- augment ---------------------------------------------------------------

struct AugmentArgs {
  std::string in;
  std::string out;
  std::string concept_name = "color";
  std::string lexicon = "builtin";
  std::size_t per_caption = 1;
};

void Augment(const AugmentArgs& args, const Common& common) {
  Require(!args.in.empty(), "--in");
  Require(!args.out.empty(), "--out");
  if (args.per_caption == 0) throw UsageError("--per-caption must be positive");
  const ConceptId concept_id = ParseConcept(args.concept_name);
  const ConceptLexicon lexicon = LoadLexicon(args.lexicon, concept_id);
  const std::vector<PairedSample> samples = IngestJsonl(args.in);

  std::string text;
  std::size_t written = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Rng rng = Rng::Derive(common.seed, i);
    for (std::size_t k = 0; k < args.per_caption; ++k) {
      const std::optional<Caption> negative =
          GenerateHardNegative(samples[i].caption, lexicon, rng);
      if (!negative) {
        ++skipped;
        break;
      }
      json row;
      row["id"] = samples[i].id;
      row["caption"] = Join(samples[i].caption);
      row["hard_negative"] = Join(*negative);
      row["concept"] = std::string(ConceptName(concept_id));
      text += row.dump() + "\n";
      ++written;
    }
  }
  WriteFile(args.out, text);
  spdlog::info("wrote {} hard negatives to {}; {} captions had no {} keyword", written,
               args.out, skipped, ConceptName(concept_id));
}

// --- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string corpus;
  std::string concept_name;
  std::string lexicon = "builtin";
};

void Stats(const StatsArgs& args) {
  Require(!args.corpus.empty(), "--corpus");
  const std::vector<PairedSample> samples = IngestJsonl(args.corpus);
  std::vector<ConceptLexicon> owned;
  if (args.concept_name.empty()) {
    if (args.lexicon != "builtin") {
      throw UsageError("--lexicon needs --concept");
    }
    for (ConceptId c : kAllConcepts) owned.push_back(BuiltinLexicon(c));
  } else {
    owned.push_back(LoadLexicon(args.lexicon, ParseConcept(args.concept_name)));
  }
  std::vector<const ConceptLexicon*> lexicons;
  for (const ConceptLexicon& l : owned) lexicons.push_back(&l);
  const std::map<ConceptId, std::size_t> counts = CorpusStats(samples, lexicons);
  std::cout << "total\t" << samples.size() << "\n";
  for (const auto& [c, n] : counts) std::cout << ConceptName(c) << "\t" << n << "\n";
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  CorpusConfig generated;
  std::string concept_name = "color";
  std::string lexicon = "builtin";
  std::string hn_mode = "append";
  std::string out;
  std::string run;
  TrainConfig train;
};

void TrainCommand(const TrainArgs& args, const Common& common) {
  TrainConfig config = args.train;
  config.seed = common.seed;
  config.concept_id = ParseConcept(args.concept_name);
  config.hn_mode = ParseHnMode(args.hn_mode);
  config.run_name = !args.run.empty() ? args.run
                    : config.hard_negatives == 0
                        ? std::string("clas")
                        : "hn" + std::to_string(config.hard_negatives);
  config.Validate();
  const ConceptLexicon lexicon = LoadLexicon(args.lexicon, config.concept_id);

  std::vector<PairedSample> corpus;
  if (args.corpus.empty()) {
    CorpusConfig generated = args.generated;
    generated.seed = common.seed;
    corpus = GenerateCorpus(generated);
    spdlog::info("generated a {}-sample synthetic corpus", corpus.size());
  } else {
    corpus = IngestJsonl(args.corpus);
  }

  const fs::path out = args.out.empty() ? fs::path("runs") / config.run_name
                                        : fs::path(args.out);
  const TrainResult result = Train(corpus, lexicon, config, out);
  WriteFile(out / "log.csv", result.log.ToCsv());
  WriteFile(out / "log.json", result.log.ToJson());
  spdlog::info("run '{}': {} steps, {} checkpoints in {}", config.run_name,
               result.log.steps.size(), result.log.checkpoints.size(), out.string());
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string checkpoint_dir;
  std::string eval_corpus;
  std::size_t eval_n = 2000;
  std::size_t object_vocab = CorpusConfig{}.object_vocab_size;
  double sigma = CorpusConfig{}.noise_sigma;
  std::string challenge;
  std::string concept_name;
  std::string lexicon = "builtin";
  std::size_t k = 5;
  std::string out;
  bool svg = false;
};

// ckpt_e{epoch}_p{percent}.bin files in training order.
std::vector<fs::path> ListCheckpoints(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw DataError("checkpoint directory '" + dir.string() + "' does not exist");
  }
  static const std::regex kName(R"(ckpt_e(\d+)_p(\d+)\.bin)");
  std::vector<std::tuple<unsigned long, unsigned long, fs::path>> found;
  for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && std::regex_match(name, m, kName)) {
      found.emplace_back(std::stoul(m[1]), std::stoul(m[2]), entry.path());
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<fs::path> paths;
  for (auto& f : found) paths.push_back(std::get<2>(f));
  if (paths.empty()) {
    throw DataError("no checkpoints in '" + dir.string() + "'");
  }
  return paths;
}

void EvalCommand(const EvalArgs& args, const Common& common) {
  Require(!args.out.empty(), "--out");
  std::vector<fs::path> paths(args.checkpoints.begin(), args.checkpoints.end());
  if (!args.checkpoint_dir.empty()) {
    for (fs::path& p : ListCheckpoints(args.checkpoint_dir)) paths.push_back(std::move(p));
  }
  if (paths.empty()) throw UsageError("give --ckpt or --ckpt-dir");

  std::vector<ChallengePair> pairs;
  if (!args.challenge.empty()) pairs = ReadChallengeJsonl(args.challenge);

  std::vector<PairedSample> samples;
  if (!args.eval_corpus.empty()) {
    samples = IngestJsonl(args.eval_corpus);
  } else {
    CorpusConfig held_out;
    held_out.n_samples = args.eval_n;
    held_out.object_vocab_size = args.object_vocab;
    held_out.noise_sigma = args.sigma;
    held_out.seed = common.seed;
    samples = GenerateCorpus(held_out);
  }

  std::vector<EvalReport> reports;
  for (const fs::path& path : paths) {
    const LoadedCheckpoint ckpt = LoadCheckpoint(path);
    const ConceptId concept_id = ParseConcept(
        args.concept_name.empty() ? ckpt.info.concept_id : args.concept_name);
    const ConceptLexicon lexicon = LoadLexicon(args.lexicon, concept_id);
    std::vector<ChallengePair> matching;
    for (const ChallengePair& p : pairs) {
      if (p.concept_id == concept_id) matching.push_back(p);
    }
    reports.push_back(Evaluate(ckpt.model, ckpt.info.run, path.stem().string(), lexicon,
                               {samples, matching, args.k}));
    spdlog::info("{} {}: fine-grained {:.4f}, recall@{} {:.4f}", ckpt.info.run,
                 path.filename().string(), reports.back().fine_grained_top1, args.k,
                 reports.back().recall_at_5);
  }
  EmitReport(reports, args.out, args.svg);
}

// --- challenge-gen ---------------------------------------------------------

struct ChallengeArgs {
  std::string concept_name = "color";
  std::size_t n = 465;
  std::size_t object_vocab = CorpusConfig{}.object_vocab_size;
  double sigma = CorpusConfig{}.noise_sigma;
  std::string out;
};

void ChallengeGen(const ChallengeArgs& args, const Common& common) {
  Require(!args.out.empty(), "--out");
  CorpusConfig corpus;
  corpus.object_vocab_size = args.object_vocab;
  corpus.noise_sigma = args.sigma;
  corpus.seed = common.seed;
  Rng rng(common.seed);
  const std::vector<ChallengePair> pairs =
      GenerateChallengePairs(corpus, ParseConcept(args.concept_name), args.n, rng);
  WriteChallengeJsonl(args.out, pairs);
  spdlog::info("wrote {} {} challenge pairs to {}", pairs.size(), args.concept_name,
               args.out);
}

// --- report ----------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
  bool no_svg = false;
};

void Report(const ReportArgs& args) {
  Require(!args.inputs.empty(), "--in");
  Require(!args.out.empty(), "--out");
  std::vector<EvalReport> merged;
  for (const std::string& in : args.inputs) {
    std::vector<EvalReport> part;
    try {
      part = ReportsFromJson(ReadFile(in));
    } catch (const DataError& e) {
      throw DataError(in + ": " + e.what());
    }
    merged.insert(merged.end(), part.begin(), part.end());
  }
  EmitReport(merged, args.out, !args.no_svg);
}

}  // namespace

int Run(int argc, const char* const* argv) {
  CLI::App app{"Hard-negative contrastive training for a micro dual encoder", "hncl"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common common;

  GenCorpusArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic paired corpus");
  AddCommon(gen_cmd, common);
  gen_cmd->add_option("--out", gen.out, "Corpus JSONL path");
  gen_cmd->add_option("--manifest", gen.manifest,
                      "Manifest path (default: <out> with .manifest.json)");
  AddCorpusOptions(gen_cmd, gen.corpus);

  AugmentArgs aug;
  CLI::App* aug_cmd =
      app.add_subcommand("augment", "Write keyword-substituted hard negatives for captions");
  AddCommon(aug_cmd, common);
  aug_cmd->add_option("--in", aug.in, "Input JSONL");
  aug_cmd->add_option("--out", aug.out, "Output JSONL");
  aug_cmd->add_option("--concept", aug.concept_name, "color, object, location or size")
      ->capture_default_str();
  aug_cmd->add_option("--lexicon", aug.lexicon, "\"builtin\" or a lexicon file")
      ->capture_default_str();
  aug_cmd->add_option("--per-caption", aug.per_caption, "Negatives per caption")
      ->capture_default_str();

  StatsArgs stats;
  CLI::App* stats_cmd = app.add_subcommand("stats", "Count captions per concept");
  AddCommon(stats_cmd, common);
  stats_cmd->add_option("--corpus", stats.corpus, "Corpus JSONL");
  stats_cmd->add_option("--concept", stats.concept_name, "Only this concept");
  stats_cmd->add_option("--lexicon", stats.lexicon, "\"builtin\" or a lexicon file")
      ->capture_default_str();

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a dual encoder");
  AddCommon(train_cmd, common);
  train_cmd->add_option("--corpus", train.corpus,
                        "Corpus JSONL (default: generate a synthetic corpus)");
  AddCorpusOptions(train_cmd, train.generated);
  train_cmd->add_option("--concept", train.concept_name, "Concept to train on")
      ->capture_default_str();
  train_cmd->add_option("--lexicon", train.lexicon, "\"builtin\" or a lexicon file")
      ->capture_default_str();
  train_cmd->add_option("--hn", train.train.hard_negatives, "Hard negatives per batch")
      ->check(CLI::Range(0, 3))
      ->capture_default_str();
  train_cmd->add_option("--hn-mode", train.hn_mode, "append or replace")
      ->capture_default_str();
  train_cmd->add_option("--batch-size", train.train.batch_size)->capture_default_str();
  train_cmd->add_option("--epochs", train.train.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.train.learning_rate)->capture_default_str();
  train_cmd->add_option("--weight-decay", train.train.weight_decay)->capture_default_str();
  train_cmd->add_option("--beta1", train.train.beta1)->capture_default_str();
  train_cmd->add_option("--beta2", train.train.beta2)->capture_default_str();
  train_cmd->add_option("--eps", train.train.epsilon)->capture_default_str();
  train_cmd->add_option("--ckpt-every", train.train.checkpoint_every_fraction,
                        "Checkpoint interval as a fraction of an epoch")
      ->capture_default_str();
  train_cmd->add_option("--token-dim", train.train.token_dim)->capture_default_str();
  train_cmd->add_option("--embed-dim", train.train.embed_dim)->capture_default_str();
  train_cmd->add_option("--hidden-dim", train.train.hidden_dim)->capture_default_str();
  train_cmd->add_option("--run", train.run, "Run name (default: clas or hn<H>)");
  train_cmd->add_option("--out", train.out, "Output directory (default: runs/<run>)");

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints");
  AddCommon(eval_cmd, common);
  eval_cmd->add_option("--ckpt", eval.checkpoints, "Checkpoint file (repeatable)");
  eval_cmd->add_option("--ckpt-dir", eval.checkpoint_dir,
                       "Evaluate every ckpt_e*_p*.bin in this directory");
  eval_cmd->add_option("--eval", eval.eval_corpus,
                       "Evaluation JSONL (default: generate a held-out corpus)");
  eval_cmd->add_option("--eval-n", eval.eval_n, "Size of a generated held-out corpus")
      ->capture_default_str();
  eval_cmd->add_option("--object-vocab", eval.object_vocab)->capture_default_str();
  eval_cmd->add_option("--sigma", eval.sigma)->capture_default_str();
  eval_cmd->add_option("--challenge", eval.challenge, "Challenge pair JSONL");
  eval_cmd->add_option("--concept", eval.concept_name,
                       "Concept (default: the checkpoint's)");
  eval_cmd->add_option("--lexicon", eval.lexicon, "\"builtin\" or a lexicon file")
      ->capture_default_str();
  eval_cmd->add_option("--k", eval.k, "Recall cutoff")->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Report prefix");
  eval_cmd->add_flag("--svg", eval.svg, "Also write <out>.svg");

  ChallengeArgs chal;
  CLI::App* chal_cmd =
      app.add_subcommand("challenge-gen", "Generate minimally differing challenge pairs");
  AddCommon(chal_cmd, common);
  chal_cmd->add_option("--concept", chal.concept_name, "color, object or size")
      ->capture_default_str();
  chal_cmd->add_option("--n", chal.n, "Number of pairs")->capture_default_str();
  chal_cmd->add_option("--object-vocab", chal.object_vocab)->capture_default_str();
  chal_cmd->add_option("--sigma", chal.sigma)->capture_default_str();
  chal_cmd->add_option("--out", chal.out, "Output JSONL");

  ReportArgs rep;
  CLI::App* rep_cmd = app.add_subcommand("report", "Merge report JSON files");
  AddCommon(rep_cmd, common);
  rep_cmd->add_option("--in", rep.inputs, "Report JSON (repeatable)");
  rep_cmd->add_option("--out", rep.out, "Output prefix");
  rep_cmd->add_flag("--no-svg", rep.no_svg, "Skip the SVG plot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    SetupLogging();
    CLI::App* sub = app.get_subcommands().front();
    ApplyConfig(sub, common.config);
    omp_set_num_threads(common.threads > 0 ? common.threads : omp_get_num_procs());

    if (sub == gen_cmd) {
      GenCorpus(gen, common);
    } else if (sub == aug_cmd) {
      Augment(aug, common);
    } else if (sub == stats_cmd) {
      Stats(stats);
    } else if (sub == train_cmd) {
      TrainCommand(train, common);
    } else if (sub == eval_cmd) {
      EvalCommand(eval, common);
    } else if (sub == chal_cmd) {
      ChallengeGen(chal, common);
    } else {
      Report(rep);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int Run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"hncl"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return Run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace hncl::cli
