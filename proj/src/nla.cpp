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

#include "udg/nla.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "udg/parallel.hpp"

namespace udg {

AnnealingSchedule AnnealingSchedule::standard(int num_classes,
                                              std::size_t total_steps) {
  return {0.9, 1.0 / num_classes, total_steps, AnnealShape::kLinear};
}

AnnealingSchedule AnnealingSchedule::disabled(std::size_t total_steps) {
  return {1.01, 1.01, total_steps, AnnealShape::kLinear};
}

void AnnealingSchedule::validate(int num_classes) const {
  if (!(mu_initial > 0.0) || !(mu_final > 0.0)) {
    throw ScheduleError("thresholds must be positive");
  }
  if (mu_initial < mu_final) {
    throw ScheduleError("mu_initial must be >= mu_final");
  }
  if (mu_final < 1.0 / num_classes - 1e-12) {
    throw ScheduleError("mu_final must be >= 1/num_classes");
  }
}

double threshold_at(const AnnealingSchedule& schedule, std::size_t step) {
  if (step > schedule.total_steps) {
    throw ScheduleError("step " + std::to_string(step) + " beyond schedule of " +
                        std::to_string(schedule.total_steps));
  }
  if (schedule.total_steps == 0) return schedule.mu_final;
  double t = static_cast<double>(step) /
             static_cast<double>(schedule.total_steps);
  if (schedule.shape == AnnealShape::kCosine) {
    t = step == schedule.total_steps
            ? 1.0
            : 0.5 * (1.0 - std::cos(std::numbers::pi * t));
  }
  // Convex combination: exact at t = 0 and t = 1.
  return (1.0 - t) * schedule.mu_initial + t * schedule.mu_final;
}

FilterPassResult filter_pass(const ClassifierModel<double>& model,
                             std::span<const LabeledFeatures<double>> data,
                             std::span<const std::size_t> candidates, double mu,
                             std::size_t step, std::size_t parallelism) {
  FilterPassResult out;
  out.decisions.resize(candidates.size());
  parallel_for(candidates.size(), parallelism, [&](std::size_t i) {
    const std::size_t id = candidates[i];
    const auto p = predict_proba(model, data[id].features);
    FilterDecision& d = out.decisions[i];
    d.example_id = id;
    d.predicted = argmax(p);
    d.confidence = p[d.predicted];
    d.mu_at_decision = mu;
    d.step = step;
    d.removed = d.predicted != data[id].label && d.confidence > mu;
  });
  for (const auto& d : out.decisions) {
    if (!d.removed) out.retained.push_back(d.example_id);
  }
  return out;
}

void TrainParams::validate() const {
  if (epochs < 1) throw InvalidParams("epochs must be >= 1");
  if (batch_size < 1) throw InvalidParams("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidParams("learning_rate must be > 0");
  if (l2 < 0.0 || learning_rate * l2 >= 1.0) {
    throw InvalidParams("l2 must satisfy 0 <= learning_rate * l2 < 1");
  }
}

TrainingReport train_with_nla(ClassifierModel<double>& model,
                              std::span<const LabeledFeatures<double>> synthetic,
                              std::span<const LabeledFeatures<double>> labeled,
                              const std::optional<AnnealingSchedule>& schedule,
                              const TrainParams& params) {
  params.validate();
  if (synthetic.empty()) throw InvalidParams("synthetic data is empty");
  if (schedule) {
    schedule->validate(model.num_classes());
    if (schedule->total_steps != params.epochs) {
      throw ScheduleError("schedule total_steps must equal the epoch count");
    }
  }

  const std::size_t n_syn = synthetic.size();
  TrainingReport report;
  report.removed.assign(n_syn, false);
  std::vector<std::size_t> active(n_syn);
  std::iota(active.begin(), active.end(), std::size_t{0});

  // Ids >= n_syn address the labeled set.
  auto example = [&](std::size_t id) -> const LabeledFeatures<double>* {
    return id < n_syn ? &synthetic[id] : &labeled[id - n_syn];
  };

  std::vector<std::size_t> order;
  std::vector<const LabeledFeatures<double>*> batch;
  for (std::size_t epoch = 1; epoch <= params.epochs; ++epoch) {
    order = active;
    for (std::size_t j = 0; j < labeled.size(); ++j) order.push_back(n_syn + j);
    Rng rng(derive_seed(params.seed, {epoch}));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }

    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size();
         start += params.batch_size) {
      const std::size_t end = std::min(order.size(), start + params.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(example(order[i]));
      loss_sum += train_step<double>(model, batch, params.learning_rate,
                                     params.l2);
      ++steps;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(steps);
    if (schedule) {
      const double mu = threshold_at(*schedule, epoch);
      rec.mu = mu;
      const auto pass =
          filter_pass(model, synthetic, active, mu, epoch, params.parallelism);
      for (const auto& d : pass.decisions) {
        if (d.removed) {
          report.removed[d.example_id] = true;
          report.removals.push_back(d);
          ++rec.removed_count;
        }
      }
      active = pass.retained;
      if (params.revisit) {
        std::vector<std::size_t> dropped;
        for (std::size_t id = 0; id < n_syn; ++id) {
          if (report.removed[id]) dropped.push_back(id);
        }
        const auto again =
            filter_pass(model, synthetic, dropped, mu, epoch, params.parallelism);
        for (std::size_t id : again.retained) {
          report.removed[id] = false;
          ++rec.readmitted_count;
        }
        if (rec.readmitted_count > 0) {
          active.insert(active.end(), again.retained.begin(),
                        again.retained.end());
          std::sort(active.begin(), active.end());
        }
      }
      if (active.empty()) {
        throw AllExamplesRemoved("noisy label annealing removed every example");
      }
    }
    rec.active_size = active.size();
    report.epochs.push_back(rec);
  }
  report.final_active_size = active.size();
  model.normalize();
  return report;
}

std::vector<LabeledFeatures<double>> featurize_dataset(
    std::span<const SyntheticExample> data, std::uint32_t dims) {
  std::vector<LabeledFeatures<double>> out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    out.push_back({featurize<double>(ex.text, dims), ex.pseudo_label});
  }
  return out;
}

double accuracy(const ClassifierModel<double>& model,
                std::span<const LabeledFeatures<double>> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& ex : data) {
    if (predict(model, ex.features) == ex.label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

std::string report_to_jsonl(const TrainingReport& report) {
  std::string out;
  for (const auto& r : report.epochs) {
    nlohmann::json j;
    j["epoch"] = r.epoch;
    j["mu"] = r.mu ? nlohmann::json(*r.mu) : nlohmann::json(nullptr);
    j["loss"] = r.loss;
    j["removed_count"] = r.removed_count;
    j["active_size"] = r.active_size;
    if (r.readmitted_count) j["readmitted_count"] = r.readmitted_count;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string removals_to_jsonl(const TrainingReport& report) {
  std::string out;
  for (const auto& d : report.removals) {
    nlohmann::json j;
    j["example_id"] = d.example_id;
    j["predicted"] = d.predicted;
    j["confidence"] = d.confidence;
    j["mu"] = d.mu_at_decision;
    j["removed"] = d.removed;
    j["step"] = d.step;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace udg
