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

#include "udg/lm.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

namespace udg {
namespace {

using testing::tiny_lm;

// Ids in the tiny vocabulary.
enum { EOS = 0, UNK, RED, BLUE, CAT, DOG, RUNS, SLEEPS, BIG, SMALL };

TEST(ReferenceLmTest, VocabularyLayout) {
  const auto lm = tiny_lm();
  EXPECT_EQ(lm.vocab_size(), 10);
  EXPECT_EQ(lm.bos_context(), 10);
  EXPECT_EQ(lm.token_id("</s>"), EOS);
  EXPECT_EQ(lm.token_id("CAT"), CAT);
  EXPECT_EQ(lm.token_id("zebra"), UNK);
  EXPECT_FALSE(lm.in_vocab("zebra"));
}

// Generic unigrams (with </s>): cat 2, dog 1, runs 1, sleeps 2, big 1,
// </s> 3; N = 10, V = 10, base = (c + 1) / 20. Row "cat" holds runs 1 and
// sleeps 1, so P(w | cat) = (c + 2 base) / 4.
TEST(ReferenceLmTest, GenericRowByHand) {
  const auto lm = tiny_lm();
  const auto row = lm.generic_table().row(CAT);
  const double want[10] = {0.1,  0.025, 0.025, 0.025, 0.075,
                           0.05, 0.3,   0.325, 0.05,  0.025};
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(row[i], want[i], 1e-15) << i;
}

// Class 0 corpus "red cat": unigrams red, cat, </s> once each, base
// (c + 1) / 13; row "cat" has one </s>.
TEST(ReferenceLmTest, ClassRowByHand) {
  const auto lm = tiny_lm();
  const auto row = lm.class_table(0).row(CAT);
  EXPECT_NEAR(row[EOS], 17.0 / 39, 1e-15);
  EXPECT_NEAR(row[RED], 4.0 / 39, 1e-15);
  EXPECT_NEAR(row[CAT], 4.0 / 39, 1e-15);
  EXPECT_NEAR(row[DOG], 2.0 / 39, 1e-15);
  EXPECT_NEAR(row[UNK], 2.0 / 39, 1e-15);
}

TEST(ReferenceLmTest, RowsAreDistributions) {
  const auto lm = tiny_lm();
  for (int r = 0; r <= lm.vocab_size(); ++r) {
    EXPECT_NEAR(lm.generic_table().row(r).sum(), 1.0, 1e-12);
    EXPECT_NEAR(lm.class_table(1).row(r).sum(), 1.0, 1e-12);
    EXPECT_GT(lm.generic_table().row(r).minCoeff(), 0.0);
  }
}

TEST(ReferenceLmTest, MixtureWeights) {
  const auto lm = tiny_lm();
  // One example segment, keyword in the active one.
  auto s = lm.analyze("big dog\n\nLabel A: cat");
  EXPECT_EQ(s.examples, 1u);
  EXPECT_EQ(s.active_class, 0);
  EXPECT_EQ(s.context, CAT);
  auto w = lm.weights(s);
  EXPECT_NEAR(w.cls, 0.3, 1e-15);
  EXPECT_NEAR(w.cache, 0.7 * 0.2, 1e-15);
  EXPECT_NEAR(w.generic, 0.7 * 0.8, 1e-15);

  // Four examples: lambda = 4 / (4 + 4).
  s = lm.analyze("cat\n\ndog\n\nbig\n\nsmall\n\n");
  EXPECT_EQ(s.examples, 4u);
  w = lm.weights(s);
  EXPECT_DOUBLE_EQ(w.cache, 0.5);
  EXPECT_DOUBLE_EQ(w.generic, 0.5);
  EXPECT_EQ(w.cls, 0.0);
}

TEST(ReferenceLmTest, PureGenericWithoutContext) {
  const auto lm = tiny_lm();
  const Vector p = lm.next_token_distribution("cat");
  const Vector g = lm.generic_table().row(CAT).transpose();
  EXPECT_EQ(p, g);
}

TEST(ReferenceLmTest, FullConditionalByHand) {
  const auto lm = tiny_lm();
  const Vector p = lm.next_token_distribution("big dog\n\nLabel A: cat");
  // The cache row for "cat" is empty, so the cache falls back to its unigram:
  // big, dog, </s> each 1/3.
  const double g = 0.56, c = 0.3, k = 0.14;
  EXPECT_NEAR(p[EOS], g * 0.1 + c * 17.0 / 39 + k / 3, 1e-15);
  EXPECT_NEAR(p[DOG], g * 0.05 + c * 2.0 / 39 + k / 3, 1e-15);
  EXPECT_NEAR(p[RUNS], g * 0.3 + c * 2.0 / 39, 1e-15);
  EXPECT_NEAR(p[RED], g * 0.025 + c * 4.0 / 39, 1e-15);
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

TEST(ReferenceLmTest, ScoreByHand) {
  const auto lm = tiny_lm();
  const double g = 0.56, c = 0.3;
  const double want = std::log(g * 0.26 + c * 4.0 / 39) +
                      std::log(g * 0.3 + c * 2.0 / 39) +
                      std::log(g * 0.1 + c / 13.0);
  EXPECT_NEAR(lm.score("big dog\n\nLabel A:", "cat runs sleeps"), want, 1e-12);
}

TEST(ReferenceLmTest, ScoreIsAdditive) {
  const auto lm = tiny_lm();
  const std::string prompt = "red cat\n\nLabel B:";
  const double whole = lm.score(prompt, "dog sleeps big");
  const double split = lm.score(prompt, "dog") +
                       lm.score(prompt + " dog", "sleeps big");
  EXPECT_NEAR(whole, split, 1e-12);
}

TEST(SamplerTest, TopKKeepsLargestAndBreaksTiesLow) {
  Vector p(5);
  p << 0.1, 0.3, 0.2, 0.2, 0.2;
  const Vector q = top_k_truncate(p, 3);
  EXPECT_EQ(q[0], 0.0);
  EXPECT_EQ(q[4], 0.0);
  EXPECT_NEAR(q[1], 0.3 / 0.7, 1e-15);
  EXPECT_NEAR(q[2], 0.2 / 0.7, 1e-15);
  EXPECT_NEAR(q[3], 0.2 / 0.7, 1e-15);
  EXPECT_EQ(top_k_truncate(p, 100).size(), 5);
}

TEST(SamplerTest, TemperatureOneIsIdentity) {
  Vector p(4);
  p << 0.1, 0.2, 0.3, 0.4;
  const Vector t = top_k_truncate(p, 3);
  const Vector u = apply_temperature(t, 1.0);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(u[i], t[i]);
}

TEST(SamplerTest, TemperatureScaling) {
  Vector p(2);
  p << 0.25, 0.75;
  const Vector half = apply_temperature(p, 0.5);
  // q^2 renormalized: 1/16 and 9/16 over 10/16.
  EXPECT_NEAR(half[0], 0.1, 1e-15);
  EXPECT_NEAR(half[1], 0.9, 1e-15);
  const Vector cold = apply_temperature(p, 1e-3);
  EXPECT_NEAR(cold[1], 1.0, 1e-12);
}

TEST(SamplerTest, GreedyWithTopKOne) {
  const auto lm = tiny_lm();
  DecodingParams d;
  d.top_k = 1;
  d.max_new_tokens = 5;
  Rng a(1), b(99);
  const auto x = lm.sample("dog", d, a);
  const auto y = lm.sample("dog", d, b);
  EXPECT_EQ(x.text, y.text);
  // Argmax after "dog" is "sleeps", then </s>.
  EXPECT_EQ(x.text, "sleeps");
  EXPECT_EQ(x.finish_reason, FinishReason::kStop);
}

TEST(SamplerTest, MinNewTokensSuppressesEos) {
  const auto lm = tiny_lm();
  DecodingParams d;
  d.top_k = 1;
  d.max_new_tokens = 3;
  d.min_new_tokens = 3;
  Rng rng(1);
  const auto c = lm.sample("dog", d, rng);
  EXPECT_EQ(count_tokens(c.text), 3u);
  EXPECT_EQ(c.finish_reason, FinishReason::kLength);
  EXPECT_EQ(c.token_logprobs.size(), 3u);
}

TEST(SamplerTest, DrawMatchesDistribution) {
  Vector p(4);
  p << 0.1, 0.0, 0.6, 0.3;
  Rng rng(17);
  std::vector<int> hits(4, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++hits[draw_index(p, rng)];
  EXPECT_EQ(hits[1], 0);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(hits[i] / double(n), p[i], 0.005);
}

TEST(SamplerTest, DecodingParamsValidate) {
  DecodingParams d;
  d.temperature = 0.0;
  EXPECT_THROW(d.validate(), InvalidParams);
  d = {};
  d.top_k = 0;
  EXPECT_THROW(d.validate(), InvalidParams);
}

class NoScore final : public LanguageModel {
 public:
  Completion sample(std::string_view, const DecodingParams&,
                    Rng&) const override {
    return {};
  }
  std::string name() const override { return "noscore"; }
};

TEST(BackendTest, ScoringUnsupported) {
  NoScore m;
  EXPECT_THROW(score_continuation(m, "a", "b"), ScoringUnsupported);
}

}  // namespace
}  // namespace udg
