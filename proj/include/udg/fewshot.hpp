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

// Few-shot inference baseline: the predicted label is the verbalization the
// language model finds most probable after [task, labeled shots, query].

#ifndef UDG_FEWSHOT_HPP_
#define UDG_FEWSHOT_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "udg/lm.hpp"
#include "udg/pipeline.hpp"
#include "udg/prompt.hpp"

namespace udg {

struct InferenceConfig {
  std::size_t k_shots = 4;
  // Indexed by class id. Empty: take verbalizers from the template.
  std::vector<std::string> label_verbalizations;
  bool length_normalize = false;

  void validate(std::size_t num_classes) const;  // throws InvalidParams
};

struct InferenceResult {
  ClassId label = 0;
  std::vector<double> scores;  // per class; log-prob (or per-token mean)
};

std::vector<std::string> resolve_verbalizations(const PromptTemplate& tmpl,
                                                const InferenceConfig& config);

InferenceResult infer_label(const LanguageModel& backend,
                            const PromptTemplate& tmpl,
                            std::span<const Example> few_shot,
                            std::string_view query,
                            const InferenceConfig& config);

/// Few-shot inference over an eval set; shots for query i are drawn from
/// `labeled_pool` with a stream derived from (seed, i).
double few_shot_accuracy(const LanguageModel& backend,
                         const PromptTemplate& tmpl,
                         std::span<const Example> labeled_pool,
                         std::span<const Example> eval,
                         const InferenceConfig& config, std::uint64_t seed,
                         std::size_t parallelism = 1);

struct ParadigmInputs {
  const PromptTemplate& tmpl;
  const LanguageModel& backend;
  std::span<const Example> unlabeled_pool;
  std::span<const Example> labeled_pool;
  std::span<const Example> eval;
};

struct ParadigmResult {
  std::uint64_t seed = 0;
  std::size_t n = 0;  // eval size
  double few_shot = 0.0;
  double udg = 0.0;
  double udg_nla = 0.0;
};

/// Accuracy of (a) few-shot inference, (b) a classifier trained on UDG
/// data, (c) the same with NLA. (b) and (c) share the generated dataset and
/// its injected noise.
ParadigmResult evaluate_paradigms(const ParadigmInputs& inputs,
                                  const PipelineSettings& settings,
                                  const InferenceConfig& inference,
                                  std::uint64_t seed);

}  // namespace udg

#endif  // UDG_FEWSHOT_HPP_
