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

// Training with Noisy Label Annealing: after each epoch, synthetic examples
// whose label the model contradicts with confidence above an annealed
// threshold are dropped from the training set.

#ifndef UDG_NLA_HPP_
#define UDG_NLA_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "udg/classifier.hpp"
#include "udg/generator.hpp"

namespace udg {

enum class AnnealShape { kLinear, kCosine };

struct AnnealingSchedule {
  double mu_initial = 0.9;
  double mu_final = 0.5;
  std::size_t total_steps = 1;
  AnnealShape shape = AnnealShape::kLinear;

  /// mu_initial = 0.9 annealed to 1 / num_classes.
  static AnnealingSchedule standard(int num_classes, std::size_t total_steps);
  /// Threshold pinned above 1: no prediction can exceed it.
  static AnnealingSchedule disabled(std::size_t total_steps);

  void validate(int num_classes) const;  // throws ScheduleError
};

/// mu_t for 0 <= step <= total_steps; both endpoints are returned exactly.
double threshold_at(const AnnealingSchedule& schedule, std::size_t step);

struct FilterDecision {
  std::size_t example_id = 0;
  int predicted = 0;
  double confidence = 0.0;
  double mu_at_decision = 0.0;
  bool removed = false;
  std::size_t step = 0;
};

struct FilterPassResult {
  std::vector<std::size_t> retained;
  std::vector<FilterDecision> decisions;  // one per candidate, input order
};

/// Removes candidate i iff argmax P(y|x_i) != label_i and max P(y|x_i) > mu.
FilterPassResult filter_pass(const ClassifierModel<double>& model,
                             std::span<const LabeledFeatures<double>> data,
                             std::span<const std::size_t> candidates, double mu,
                             std::size_t step, std::size_t parallelism = 1);

struct TrainParams {
  std::size_t epochs = 10;
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  double l2 = 1e-4;
  std::uint64_t seed = 1;
  // Re-test removed examples each epoch and re-admit those no longer
  // contradicted.
  bool revisit = false;
  std::size_t parallelism = 1;

  void validate() const;  // throws InvalidParams
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::optional<double> mu;  // absent without a schedule
  double loss = 0.0;
  std::size_t removed_count = 0;
  std::size_t readmitted_count = 0;
  std::size_t active_size = 0;
};

struct TrainingReport {
  std::vector<EpochRecord> epochs;
  std::vector<FilterDecision> removals;  // audit log, in decision order
  std::vector<bool> removed;             // final state per synthetic example
  std::size_t final_active_size = 0;
};

/// Trains on synthetic + labeled data. With a schedule, filter_pass runs at
/// the end of every epoch e (step e of total_steps == epochs) over the active
/// synthetic examples; labeled examples are never filtered. Without a
/// schedule this is plain minibatch SGD with the same shuffling.
TrainingReport train_with_nla(ClassifierModel<double>& model,
                              std::span<const LabeledFeatures<double>> synthetic,
                              std::span<const LabeledFeatures<double>> labeled,
                              const std::optional<AnnealingSchedule>& schedule,
                              const TrainParams& params);

std::vector<LabeledFeatures<double>> featurize_dataset(
    std::span<const SyntheticExample> data, std::uint32_t dims);

double accuracy(const ClassifierModel<double>& model,
                std::span<const LabeledFeatures<double>> data);

/// JSON-lines: {"epoch", "mu", "loss", "removed_count", "active_size"}.
std::string report_to_jsonl(const TrainingReport& report);
/// JSON-lines of FilterDecision records.
std::string removals_to_jsonl(const TrainingReport& report);

}  // namespace udg

#endif  // UDG_NLA_HPP_
