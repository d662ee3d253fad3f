//
// Copyright 2026 The UDG Authors
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

// Experiment configuration and the commands behind the CLI. Every command is
// a deterministic function of (config, seed) and writes its artifacts, a
// copy of the effective config and a manifest into an output directory.

#ifndef UDG_EXPERIMENT_HPP_
#define UDG_EXPERIMENT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "udg/fewshot.hpp"
#include "udg/http_lm.hpp"
#include "udg/lm.hpp"
#include "udg/pipeline.hpp"
#include "udg/prompt.hpp"
#include "udg/toy_world.hpp"

namespace udg {

inline constexpr const char* kVersion = "0.1.0";

enum class BackendKind { kReference, kHttp };

enum class SweepKind { kKContext, kNPerClass, kMuFinal };

const char* to_string(SweepKind kind);

struct SweepSpec {
  SweepKind kind = SweepKind::kKContext;
  // For kMuFinal, nullopt means NLA disabled ("none").
  std::vector<std::optional<double>> values;
};

struct ExperimentConfig {
  std::string task;
  std::filesystem::path template_path;
  std::optional<std::string> world;
  std::filesystem::path world_path;
  std::optional<std::filesystem::path> pool_path;
  std::optional<std::filesystem::path> eval_path;
  std::optional<std::filesystem::path> labeled_path;

  BackendKind backend = BackendKind::kReference;
  std::uint64_t seed = 1;
  std::size_t num_seeds = 5;
  std::size_t parallelism = 1;

  PipelineSettings pipeline;
  InferenceConfig inference;
  ReferenceLmOptions reference_lm;
  HttpLmOptions http;
  std::optional<SweepSpec> ablation;

  std::vector<std::uint64_t> sweep_seeds() const;
};

/// Parses a config object. Relative paths resolve against `base_dir`;
/// fixtures default to `fixtures_dir` (or the built-in fixture directory).
/// Throws ConfigError carrying the dotted key path.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Effective config with every default filled in; stable key order.
nlohmann::json config_to_json(const ExperimentConfig& config);
std::string config_hash(const ExperimentConfig& config);

std::filesystem::path default_fixture_dir();

/// Loaded inputs for a config: template, optional world, backend and data.
struct Workspace {
  PromptTemplate tmpl;
  std::optional<ToyWorld> world;
  std::unique_ptr<LanguageModel> backend;
  std::vector<Example> pool;
  std::vector<Example> eval;
  std::vector<Example> labeled;
};

Workspace open_workspace(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Commands.

struct SweepRecord {
  std::string setting;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::size_t dataset_size = 0;
  std::size_t removed = 0;
  std::size_t removed_flipped = 0;
};

struct SweepSummary {
  std::string setting;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 0;
};

struct SweepReport {
  SweepKind kind = SweepKind::kKContext;
  std::vector<SweepRecord> records;  // setting-major, then seed
  std::vector<SweepSummary> summary;  // one per setting, in sweep order
};

struct ParadigmReport {
  std::vector<ParadigmResult> per_seed;
  double few_shot = 0.0;
  double udg = 0.0;
  double udg_nla = 0.0;
  std::size_t n = 0;
};

void cmd_generate(const ExperimentConfig& config,
                  const std::filesystem::path& out_dir);
void cmd_train(const ExperimentConfig& config,
               const std::filesystem::path& dataset,
               const std::filesystem::path& out_dir);
void cmd_infer(const ExperimentConfig& config,
               const std::filesystem::path& input,
               const std::optional<std::filesystem::path>& checkpoint,
               const std::filesystem::path& out_dir);
SweepReport cmd_ablate(const ExperimentConfig& config,
                       const std::filesystem::path& out_dir);
ParadigmReport cmd_compare(const ExperimentConfig& config,
                           const std::filesystem::path& out_dir);

/// In-memory sweep used by cmd_ablate.
SweepReport run_sweep(const ExperimentConfig& config, const Workspace& ws);
ParadigmReport run_compare(const ExperimentConfig& config, const Workspace& ws);

nlohmann::json sweep_to_json(const SweepReport& report);
std::string sweep_to_table(const SweepReport& report);
nlohmann::json paradigms_to_json(const ParadigmReport& report,
                                 std::uint64_t base_seed);
std::string paradigms_to_table(const ParadigmReport& report);

}  // namespace udg

#endif  // UDG_EXPERIMENT_HPP_
