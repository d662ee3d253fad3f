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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "udg/pipeline.hpp"

namespace udg {
namespace {

using Ex = LabeledFeatures<double>;
constexpr std::uint32_t kDims = 1024;

// Two or three topics, each with its own marker words plus shared filler.
std::vector<Ex> separable(std::size_t n, int classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Ex> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % classes);
    std::string s;
    for (int t = 0; t < 8; ++t) {
      if (uniform01(rng) < 0.5) {
        s += "c" + std::to_string(y) + "w" + std::to_string(uniform_index(rng, 5));
      } else {
        s += "f" + std::to_string(uniform_index(rng, 20));
      }
      s += ' ';
    }
    out.push_back({featurize(s, kDims), y});
  }
  return out;
}

TrainParams params(std::size_t epochs) {
  TrainParams p;
  p.epochs = epochs;
  p.learning_rate = 0.5;
  p.batch_size = 16;
  p.l2 = 1e-4;
  p.seed = 3;
  return p;
}

TEST(ScheduleTest, EndpointsAreExact) {
  for (int c : {2, 3, 5, 14}) {
    for (std::size_t steps : {1u, 7u, 20u}) {
      const auto s = AnnealingSchedule::standard(c, steps);
      EXPECT_EQ(threshold_at(s, 0), 0.9);
      EXPECT_EQ(threshold_at(s, steps), 1.0 / c);
    }
  }
  auto cos = AnnealingSchedule::standard(5, 9);
  cos.shape = AnnealShape::kCosine;
  EXPECT_EQ(threshold_at(cos, 0), 0.9);
  EXPECT_EQ(threshold_at(cos, 9), 0.2);
}

TEST(ScheduleTest, LinearMidpoint) {
  const AnnealingSchedule s{0.9, 0.5, 10, AnnealShape::kLinear};
  EXPECT_NEAR(threshold_at(s, 5), 0.7, 1e-15);
}

TEST(ScheduleTest, MonotoneNonIncreasing) {
  for (auto shape : {AnnealShape::kLinear, AnnealShape::kCosine}) {
    auto s = AnnealingSchedule::standard(3, 50);
    s.shape = shape;
    double prev = threshold_at(s, 0);
    for (std::size_t t = 1; t <= 50; ++t) {
      const double mu = threshold_at(s, t);
      EXPECT_LE(mu, prev);
      prev = mu;
    }
  }
}

TEST(ScheduleTest, Errors) {
  const auto s = AnnealingSchedule::standard(2, 10);
  EXPECT_THROW(threshold_at(s, 11), ScheduleError);
  EXPECT_THROW((AnnealingSchedule{0.5, 0.9, 10}).validate(2), ScheduleError);
  EXPECT_THROW((AnnealingSchedule{0.9, 0.2, 10}).validate(2), ScheduleError);
  EXPECT_THROW((AnnealingSchedule{0.0, 0.0, 10}).validate(2), ScheduleError);
  EXPECT_NO_THROW(AnnealingSchedule::disabled(10).validate(2));
}

ClassifierModel<double> confident_model() {
  // Feature 0 votes class 0, feature 1 votes class 1.
  ClassifierModel<double> m(4, 2);
  DenseMatrix<double> w = DenseMatrix<double>::Zero(4, 2);
  w(0, 0) = 3.0;
  w(1, 1) = 3.0;
  m.set_weights(w);
  return m;
}

Ex point(std::uint32_t idx, int label) {
  FeatureVector<double> f;
  f.dims = 4;
  f.indices = {idx};
  f.values = {1.0};
  return {f, label};
}

TEST(FilterPassTest, RemovesOnlyConfidentContradictions) {
  const auto m = confident_model();
  // p = sigmoid(3) ~ 0.9526 for the voted class.
  std::vector<Ex> data = {point(0, 0), point(0, 1), point(1, 0), point(2, 1)};
  std::vector<std::size_t> all = {0, 1, 2, 3};
  const auto r = filter_pass(m, data, all, 0.9, 4);
  EXPECT_EQ(r.retained, (std::vector<std::size_t>{0, 3}));
  ASSERT_EQ(r.decisions.size(), 4u);
  EXPECT_TRUE(r.decisions[1].removed);
  EXPECT_EQ(r.decisions[1].predicted, 0);
  EXPECT_NEAR(r.decisions[1].confidence, 1 / (1 + std::exp(-3.0)), 1e-15);
  EXPECT_EQ(r.decisions[1].step, 4u);
  // Uniform prediction on an unseen feature: predicted 0 at 0.5, not > 0.5.
  EXPECT_FALSE(r.decisions[3].removed);

  const auto none = filter_pass(m, data, all, 0.96, 4);
  EXPECT_EQ(none.retained.size(), 4u);
}

TEST(FilterPassTest, LowerThresholdRemovesSuperset) {
  const auto data = separable(200, 3, 5);
  ClassifierModel<double> m(kDims, 3);
  auto p = params(2);
  train_with_nla(m, data, {}, std::nullopt, p);
  std::vector<Ex> noisy = data;
  for (std::size_t i = 0; i < noisy.size(); i += 3) {
    noisy[i].label = (noisy[i].label + 1) % 3;
  }
  std::vector<std::size_t> all(noisy.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::size_t prev = 0;
  std::vector<bool> prev_removed(noisy.size(), false);
  for (double mu : {0.95, 0.8, 0.6, 0.4, 1.0 / 3}) {
    const auto r = filter_pass(m, noisy, all, mu, 0);
    std::size_t removed = 0;
    for (const auto& d : r.decisions) {
      if (prev_removed[d.example_id]) EXPECT_TRUE(d.removed);
      prev_removed[d.example_id] = d.removed;
      removed += d.removed;
    }
    EXPECT_GE(removed, prev);
    prev = removed;
  }
  EXPECT_GT(prev, 0u);
}

TEST(FilterPassTest, ParallelMatchesSerial) {
  const auto data = separable(300, 2, 8);
  ClassifierModel<double> m(kDims, 2);
  train_with_nla(m, data, {}, std::nullopt, params(1));
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto a = filter_pass(m, data, all, 0.5, 1, 1);
  const auto b = filter_pass(m, data, all, 0.5, 1, 8);
  EXPECT_EQ(a.retained, b.retained);
}

TEST(TrainNlaTest, DisabledScheduleEqualsPlainTraining) {
  const auto data = separable(300, 2, 1);
  std::vector<Ex> noisy = data;
  for (std::size_t i = 0; i < noisy.size(); i += 4) noisy[i].label ^= 1;
  ClassifierModel<double> a(kDims, 2), b(kDims, 2);
  const auto ra =
      train_with_nla(a, noisy, {}, AnnealingSchedule::disabled(6), params(6));
  const auto rb = train_with_nla(b, noisy, {}, std::nullopt, params(6));
  EXPECT_TRUE(ra.removals.empty());
  EXPECT_EQ(ra.final_active_size, noisy.size());
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(rb.epochs[0].mu.has_value());
  ASSERT_TRUE(ra.epochs[0].mu.has_value());
  EXPECT_DOUBLE_EQ(*ra.epochs[0].mu, 1.01);
}

TEST(TrainNlaTest, RemovalsArePermanent) {
  auto data = separable(400, 2, 2);
  for (std::size_t i = 0; i < data.size(); i += 5) data[i].label ^= 1;
  ClassifierModel<double> m(kDims, 2);
  const auto r = train_with_nla(m, data, {},
                                AnnealingSchedule::standard(2, 8), params(8));
  std::vector<int> times(data.size(), 0);
  std::size_t prev_active = data.size();
  for (const auto& d : r.removals) ++times[d.example_id];
  for (int t : times) EXPECT_LE(t, 1);
  std::size_t total = 0;
  for (const auto& e : r.epochs) {
    EXPECT_EQ(e.active_size, prev_active - e.removed_count);
    prev_active = e.active_size;
    total += e.removed_count;
    EXPECT_EQ(e.readmitted_count, 0u);
  }
  EXPECT_EQ(total, r.removals.size());
  EXPECT_GT(total, 0u);
  // Each removal was decided at its epoch's threshold.
  for (const auto& d : r.removals) {
    EXPECT_EQ(d.mu_at_decision, *r.epochs[d.step - 1].mu);
    EXPECT_GT(d.confidence, d.mu_at_decision);
  }
}

TEST(TrainNlaTest, FlippedLabelsAreTheOnesRemoved) {
  auto data = separable(600, 2, 4);
  std::vector<bool> flipped(data.size(), false);
  for (std::size_t i = 0; i < data.size(); i += 5) {
    data[i].label ^= 1;
    flipped[i] = true;
  }
  ClassifierModel<double> m(kDims, 2);
  const auto r = train_with_nla(m, data, {},
                                AnnealingSchedule::standard(2, 10), params(10));
  std::size_t hits = 0;
  for (const auto& d : r.removals) hits += flipped[d.example_id];
  ASSERT_GT(r.removals.size(), 0u);
  EXPECT_GT(hits / double(r.removals.size()), 0.8);
}

TEST(TrainNlaTest, CleanDataKeepsMostExamples) {
  const auto data = separable(600, 2, 6);
  ClassifierModel<double> m(kDims, 2);
  const auto r = train_with_nla(m, data, {},
                                AnnealingSchedule::standard(2, 10), params(10));
  EXPECT_LT(r.removals.size(), data.size() / 20);
  EXPECT_GT(accuracy(m, data), 0.95);
}

TEST(TrainNlaTest, LabeledExamplesAreNeverFiltered) {
  auto syn = separable(200, 2, 7);
  auto lab = separable(50, 2, 8);
  for (auto& e : lab) e.label ^= 1;  // all contradicted
  ClassifierModel<double> m(kDims, 2);
  const auto r = train_with_nla(m, syn, lab,
                                AnnealingSchedule::standard(2, 5), params(5));
  for (const auto& d : r.removals) EXPECT_LT(d.example_id, syn.size());
  EXPECT_EQ(r.removed.size(), syn.size());
}

TEST(TrainNlaTest, RevisitReadmits) {
  auto data = separable(300, 2, 9);
  for (std::size_t i = 0; i < data.size(); i += 3) data[i].label ^= 1;
  ClassifierModel<double> m(kDims, 2);
  auto p = params(10);
  p.revisit = true;
  const auto r =
      train_with_nla(m, data, {}, AnnealingSchedule::standard(2, 10), p);
  std::size_t active = 0;
  for (bool gone : r.removed) active += !gone;
  EXPECT_EQ(active, r.final_active_size);
}

TEST(TrainNlaTest, AllExamplesRemoved) {
  // Every label contradicts a fixed, confident model direction.
  std::vector<Ex> data;
  for (int i = 0; i < 20; ++i) data.push_back(point(0, 1));
  std::vector<Ex> anchor;
  for (int i = 0; i < 200; ++i) anchor.push_back(point(0, 0));
  ClassifierModel<double> m(4, 2);
  auto p = params(3);
  p.batch_size = 256;
  EXPECT_THROW(train_with_nla(m, data, anchor,
                              AnnealingSchedule{0.6, 0.5, 3}, p),
               AllExamplesRemoved);
}

TEST(TrainNlaTest, InputValidation) {
  const auto data = separable(10, 2, 1);
  ClassifierModel<double> m(kDims, 2);
  EXPECT_THROW(train_with_nla(m, {}, {}, std::nullopt, params(2)),
               InvalidParams);
  EXPECT_THROW(train_with_nla(m, data, {}, AnnealingSchedule::standard(2, 3),
                              params(2)),
               ScheduleError);
  auto p = params(2);
  p.batch_size = 0;
  EXPECT_THROW(train_with_nla(m, data, {}, std::nullopt, p), InvalidParams);
}

TEST(NoiseTest, FlipsToOtherClassesAtRate) {
  std::vector<SyntheticExample> data(20000);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i].text = "x";
    data[i].pseudo_label = static_cast<ClassId>(i % 5);
  }
  const auto orig = data;
  Rng rng(1);
  const auto mask = inject_label_noise(data, 0.2, 5, rng);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(mask[i], data[i].pseudo_label != orig[i].pseudo_label);
    flips += mask[i];
  }
  EXPECT_NEAR(flips / double(data.size()), 0.2, 0.01);
}

}  // namespace
}  // namespace udg
