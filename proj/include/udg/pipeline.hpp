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

// End-to-end UDG run: generate a synthetic dataset, optionally corrupt its
// labels, train the classifier (with or without NLA) and score it.

#ifndef UDG_PIPELINE_HPP_
#define UDG_PIPELINE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "udg/classifier.hpp"
#include "udg/generator.hpp"
#include "udg/nla.hpp"

namespace udg {

struct NlaSettings {
  bool enabled = true;
  double mu_initial = 0.9;
  std::optional<double> mu_final;  // default 1 / num_classes
  AnnealShape shape = AnnealShape::kLinear;

  std::optional<AnnealingSchedule> schedule(int num_classes,
                                            std::size_t epochs) const;
};

struct PipelineSettings {
  GenerationConfig generation;
  TrainParams training;
  NlaSettings nla;
  std::uint32_t dims = kDefaultFeatureDims;
  // Probability of replacing a pseudo label by a uniformly drawn other class.
  double noise_rate = 0.0;
};

/// Flips each label with probability `rate` to a different class chosen
/// uniformly. Returns the ground-truth flip mask.
std::vector<bool> inject_label_noise(std::vector<SyntheticExample>& data,
                                     double rate, int num_classes, Rng& rng);

struct UdgRun {
  GenerationResult generation;
  std::vector<bool> flipped;
  TrainingReport training;
  ClassifierModel<double> model;
  double accuracy = 0.0;  // on the eval set; 0 when it is empty
};

/// Stream seeds for generation, noise and training are derived from `seed`.
UdgRun run_udg(const PromptTemplate& tmpl, const LanguageModel& backend,
               std::span<const Example> pool, std::span<const Example> eval,
               const PipelineSettings& settings, std::uint64_t seed);

/// Trains on an existing dataset (no generation, no noise injection).
UdgRun train_on_dataset(std::vector<SyntheticExample> data, int num_classes,
                        std::span<const Example> eval,
                        const PipelineSettings& settings, std::uint64_t seed);

std::vector<LabeledFeatures<double>> featurize_examples(
    std::span<const Example> examples, std::uint32_t dims);

}  // namespace udg

#endif  // UDG_PIPELINE_HPP_
