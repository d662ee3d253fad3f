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

#include "udg/pipeline.hpp"

namespace udg {

std::optional<AnnealingSchedule> NlaSettings::schedule(
    int num_classes, std::size_t epochs) const {
  if (!enabled) return std::nullopt;
  AnnealingSchedule s = AnnealingSchedule::standard(num_classes, epochs);
  s.mu_initial = mu_initial;
  if (mu_final) s.mu_final = *mu_final;
  s.shape = shape;
  return s;
}

std::vector<bool> inject_label_noise(std::vector<SyntheticExample>& data,
                                     double rate, int num_classes, Rng& rng) {
  std::vector<bool> flipped(data.size(), false);
  if (rate <= 0.0 || num_classes < 2) return flipped;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (uniform01(rng) >= rate) continue;
    const auto k = static_cast<int>(uniform_index(rng, num_classes - 1));
    data[i].pseudo_label = k < data[i].pseudo_label ? k : k + 1;
    flipped[i] = true;
  }
  return flipped;
}

std::vector<LabeledFeatures<double>> featurize_examples(
    std::span<const Example> examples, std::uint32_t dims) {
  std::vector<LabeledFeatures<double>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    out.push_back({featurize<double>(ex.text, dims), ex.label.value_or(0)});
  }
  return out;
}

UdgRun train_on_dataset(std::vector<SyntheticExample> data, int num_classes,
                        std::span<const Example> eval,
                        const PipelineSettings& settings, std::uint64_t seed) {
  UdgRun run;
  run.flipped.assign(data.size(), false);
  run.generation.examples = std::move(data);
  TrainParams params = settings.training;
  params.seed = derive_seed(seed, {3});
  const auto features =
      featurize_dataset(run.generation.examples, settings.dims);
  run.model = ClassifierModel<double>(settings.dims, num_classes);
  run.training = train_with_nla(run.model, features, {},
                                settings.nla.schedule(num_classes, params.epochs),
                                params);
  if (!eval.empty()) {
    run.accuracy = accuracy(run.model, featurize_examples(eval, settings.dims));
  }
  return run;
}

UdgRun run_udg(const PromptTemplate& tmpl, const LanguageModel& backend,
               std::span<const Example> pool, std::span<const Example> eval,
               const PipelineSettings& settings, std::uint64_t seed) {
  GenerationConfig gen = settings.generation;
  gen.seed = derive_seed(seed, {1});
  GenerationResult generated = generate_dataset(gen, tmpl, pool, backend);

  const int num_classes = static_cast<int>(tmpl.num_classes());
  Rng noise_rng(derive_seed(seed, {2}));
  auto flipped = inject_label_noise(generated.examples, settings.noise_rate,
                                    num_classes, noise_rng);
  const GenerationStats stats = generated.stats;
  UdgRun run = train_on_dataset(std::move(generated.examples), num_classes,
                                eval, settings, seed);
  run.generation.stats = stats;
  run.flipped = std::move(flipped);
  return run;
}

}  // namespace udg
