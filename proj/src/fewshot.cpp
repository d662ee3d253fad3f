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

#include "udg/fewshot.hpp"

#include <set>

#include "udg/parallel.hpp"

namespace udg {

void InferenceConfig::validate(std::size_t num_classes) const {
  if (label_verbalizations.empty()) return;
  if (label_verbalizations.size() != num_classes) {
    throw InvalidParams("need one verbalization per class");
  }
  std::set<std::string> seen;
  for (const auto& v : label_verbalizations) {
    if (count_tokens(v) == 0) throw InvalidParams("empty verbalization");
    if (!seen.insert(v).second) {
      throw InvalidParams("duplicate verbalization '" + v + "'");
    }
  }
}

std::vector<std::string> resolve_verbalizations(const PromptTemplate& tmpl,
                                                const InferenceConfig& config) {
  config.validate(tmpl.num_classes());
  if (!config.label_verbalizations.empty()) return config.label_verbalizations;
  std::vector<std::string> out;
  for (std::size_t c = 0; c < tmpl.num_classes(); ++c) {
    out.push_back(verbalize_label(tmpl.labels, static_cast<ClassId>(c)));
  }
  InferenceConfig check;
  check.label_verbalizations = out;
  check.validate(tmpl.num_classes());
  return out;
}

InferenceResult infer_label(const LanguageModel& backend,
                            const PromptTemplate& tmpl,
                            std::span<const Example> few_shot,
                            std::string_view query,
                            const InferenceConfig& config) {
  if (!backend.supports_scoring()) {
    throw ScoringUnsupported(backend.name() +
                             " backend cannot score label verbalizations");
  }
  const auto verbal = resolve_verbalizations(tmpl, config);
  const std::string prompt = build_inference_prompt(
      tmpl, few_shot, query, [&](ClassId c) { return verbal.at(c); });

  InferenceResult out;
  out.scores.reserve(verbal.size());
  for (const auto& v : verbal) {
    double s = score_continuation(backend, prompt, v);
    if (config.length_normalize) s /= static_cast<double>(count_tokens(v));
    out.scores.push_back(s);
  }
  for (std::size_t c = 1; c < out.scores.size(); ++c) {
    if (out.scores[c] > out.scores[out.label]) out.label = static_cast<ClassId>(c);
  }
  return out;
}

double few_shot_accuracy(const LanguageModel& backend,
                         const PromptTemplate& tmpl,
                         std::span<const Example> labeled_pool,
                         std::span<const Example> eval,
                         const InferenceConfig& config, std::uint64_t seed,
                         std::size_t parallelism) {
  if (eval.empty()) return 0.0;
  std::vector<char> hit(eval.size(), 0);
  parallel_for(eval.size(), parallelism, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    const auto shots = sample_context(labeled_pool, config.k_shots, rng);
    const auto r = infer_label(backend, tmpl, shots, eval[i].text, config);
    hit[i] = eval[i].label && r.label == *eval[i].label;
  });
  std::size_t hits = 0;
  for (char h : hit) hits += h;
  return static_cast<double>(hits) / static_cast<double>(eval.size());
}

ParadigmResult evaluate_paradigms(const ParadigmInputs& inputs,
                                  const PipelineSettings& settings,
                                  const InferenceConfig& inference,
                                  std::uint64_t seed) {
  ParadigmResult out;
  out.seed = seed;
  out.n = inputs.eval.size();
  out.few_shot = few_shot_accuracy(
      inputs.backend, inputs.tmpl, inputs.labeled_pool, inputs.eval, inference,
      derive_seed(seed, {4}), settings.generation.parallelism);

  PipelineSettings plain = settings;
  plain.nla.enabled = false;
  UdgRun base = run_udg(inputs.tmpl, inputs.backend, inputs.unlabeled_pool,
                        inputs.eval, plain, seed);
  out.udg = base.accuracy;

  PipelineSettings with_nla = settings;
  with_nla.nla.enabled = true;
  // Same generated (and corrupted) data as the plain run.
  std::vector<SyntheticExample> data = base.generation.examples;
  UdgRun nla = train_on_dataset(std::move(data),
                                static_cast<int>(inputs.tmpl.num_classes()),
                                inputs.eval, with_nla, seed);
  out.udg_nla = nla.accuracy;
  return out;
}

}  // namespace udg
