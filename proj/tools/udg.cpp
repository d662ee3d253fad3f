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

// Command-line front end: generate | train | infer | ablate | compare.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "udg/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitProvider = 3;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string backend;
  bool refill = false;
  bool revisit = false;
  std::optional<std::size_t> seeds;
  std::optional<std::size_t> parallelism;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "base seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--backend", o.backend, "model backend")
      ->check(CLI::IsMember({"reference", "http"}));
  cmd->add_flag("--refill", o.refill, "top classes up after filtering");
  cmd->add_flag("--revisit", o.revisit, "re-admit removed examples each epoch");
  cmd->add_option("--seeds", o.seeds, "number of seeds for ablate/compare");
  cmd->add_option("--parallelism", o.parallelism, "worker threads")
      ->check(CLI::PositiveNumber);
}

udg::ExperimentConfig resolve(const Overrides& o) {
  udg::ExperimentConfig c = udg::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.backend == "reference") c.backend = udg::BackendKind::kReference;
  if (o.backend == "http") c.backend = udg::BackendKind::kHttp;
  if (o.refill) c.pipeline.generation.refill = true;
  if (o.revisit) c.pipeline.training.revisit = true;
  if (o.seeds) {
    if (*o.seeds == 0) throw udg::ConfigError("seeds", "must be >= 1");
    c.num_seeds = *o.seeds;
  }
  if (o.parallelism) {
    c.parallelism = *o.parallelism;
    c.pipeline.generation.parallelism = c.parallelism;
    c.pipeline.training.parallelism = c.parallelism;
  }
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised data generation for text classification"};
  app.set_version_flag("--version", std::string(udg::kVersion));
  app.require_subcommand(1);

  Overrides o;
  std::string dataset;
  std::string input;
  std::string checkpoint;

  auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(gen, o);
  auto* train = app.add_subcommand("train", "train a classifier on a dataset");
  add_common(train, o);
  train->add_option("--dataset", dataset, "dataset.jsonl from generate")
      ->required()
      ->check(CLI::ExistingFile);
  auto* infer = app.add_subcommand("infer", "label texts");
  add_common(infer, o);
  infer->add_option("--input", input, "JSONL with a text field per line")
      ->required()
      ->check(CLI::ExistingFile);
  infer->add_option("--checkpoint", checkpoint,
                    "classifier checkpoint; few-shot inference when absent")
      ->check(CLI::ExistingFile);
  auto* ablate = app.add_subcommand("ablate", "run the configured sweep");
  add_common(ablate, o);
  auto* compare = app.add_subcommand("compare", "compare the three paradigms");
  add_common(compare, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    const udg::ExperimentConfig config = resolve(o);
    const std::filesystem::path out(o.out);
    if (gen->parsed()) {
      udg::cmd_generate(config, out);
    } else if (train->parsed()) {
      udg::cmd_train(config, dataset, out);
    } else if (infer->parsed()) {
      std::optional<std::filesystem::path> ckpt;
      if (!checkpoint.empty()) ckpt = checkpoint;
      udg::cmd_infer(config, input, ckpt, out);
    } else if (ablate->parsed()) {
      std::cout << udg::sweep_to_table(udg::cmd_ablate(config, out));
    } else if (compare->parsed()) {
      std::cout << udg::paradigms_to_table(udg::cmd_compare(config, out));
    }
  } catch (const udg::ConfigError& e) {
    std::cerr << "config error: " << e.key() << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const udg::FixtureError& e) {
    std::cerr << "fixture error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const udg::TemplateError& e) {
    std::cerr << "template error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const udg::ProviderUnavailable& e) {
    std::cerr << "provider unavailable: " << e.what() << "\n";
    return kExitProvider;
  } catch (const udg::GenerationAborted& e) {
    std::cerr << "generation aborted: " << e.what() << "\n";
    return kExitProvider;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
