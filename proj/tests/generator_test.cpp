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

#include "udg/generator.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace udg {
namespace {

using testing::scratch_dir;

// Emits 3..10 random words from a small alphabet; fails a request when a
// draw from the item stream falls under `fail_rate`.
class FakeLm final : public LanguageModel {
 public:
  explicit FakeLm(double fail_rate = 0.0, std::size_t alphabet = 50)
      : fail_rate_(fail_rate), alphabet_(alphabet) {}
  Completion sample(std::string_view, const DecodingParams&,
                    Rng& rng) const override {
    if (uniform01(rng) < fail_rate_) throw ProviderUnavailable("flaky");
    Completion c;
    const std::size_t n = 3 + uniform_index(rng, 8);
    for (std::size_t i = 0; i < n; ++i) {
      if (i) c.text += ' ';
      c.text += "w" + std::to_string(uniform_index(rng, alphabet_));
    }
    c.finish_reason = FinishReason::kStop;
    return c;
  }
  std::string name() const override { return "fake"; }

 private:
  double fail_rate_;
  std::size_t alphabet_;
};

std::vector<Example> pool() {
  std::vector<Example> p;
  for (int i = 0; i < 40; ++i) {
    p.push_back({"pool text number " + std::to_string(i), std::nullopt, ""});
  }
  return p;
}

GenerationConfig small_config() {
  GenerationConfig c;
  c.k_context = 4;
  c.n_per_class = 50;
  c.min_len = 5;
  c.max_len = 8;
  c.seed = 11;
  return c;
}

TEST(PostFilterTest, LengthAndDuplicates) {
  std::unordered_set<std::string> seen;
  EXPECT_EQ(post_filter("a b", 3, 5, seen).reason, DropReason::kTooShort);
  EXPECT_EQ(post_filter("a b c d e f", 3, 5, seen).reason,
            DropReason::kTooLong);
  EXPECT_TRUE(post_filter("a b c", 3, 5, seen).keep);
  EXPECT_TRUE(post_filter("a b c d e", 3, 5, seen).keep);
  EXPECT_EQ(post_filter("A  b\tC", 3, 5, seen).reason, DropReason::kDuplicate);
  EXPECT_EQ(seen.size(), 2u);
  // Filtering a kept set again drops nothing new but flags every entry.
  std::unordered_set<std::string> again;
  for (const char* t : {"x y z", "x y w"}) {
    EXPECT_TRUE(post_filter(t, 1, 5, again).keep);
  }
  for (const char* t : {"x y z", "x y w"}) {
    EXPECT_EQ(post_filter(t, 1, 5, again).reason, DropReason::kDuplicate);
  }
}

TEST(GenerateTest, CountsBoundedAndLabelled) {
  const auto tmpl = testing::tiny_template();
  const auto p = pool();
  const auto r = generate_dataset(small_config(), tmpl, p, FakeLm());
  ASSERT_EQ(r.stats.kept_per_class.size(), 2u);
  EXPECT_LE(r.stats.kept_per_class[0], 50u);
  EXPECT_LE(r.stats.kept_per_class[1], 50u);
  EXPECT_EQ(r.stats.attempted, 100u);
  EXPECT_EQ(r.stats.kept + r.stats.too_short + r.stats.too_long +
                r.stats.duplicate + r.stats.failed,
            r.stats.attempted);
  EXPECT_GT(r.stats.too_short, 0u);
  EXPECT_GT(r.stats.too_long, 0u);
  ClassId prev = 0;
  for (const auto& ex : r.examples) {
    EXPECT_GE(ex.pseudo_label, prev);
    prev = ex.pseudo_label;
    EXPECT_GE(ex.token_count, 5u);
    EXPECT_LE(ex.token_count, 8u);
    EXPECT_EQ(ex.prompt_digest.size(), 16u);
    EXPECT_TRUE(ex.seed_index.has_value());
  }
}

TEST(GenerateTest, IndependentOfParallelism) {
  const auto tmpl = testing::tiny_template();
  const auto p = pool();
  auto cfg = small_config();
  cfg.parallelism = 1;
  const auto a = generate_dataset(cfg, tmpl, p, FakeLm(0.2));
  cfg.parallelism = 8;
  const auto b = generate_dataset(cfg, tmpl, p, FakeLm(0.2));
  EXPECT_EQ(dataset_to_jsonl(a.examples), dataset_to_jsonl(b.examples));
  EXPECT_EQ(a.stats.failed, b.stats.failed);
}

TEST(GenerateTest, SeedChangesOutput) {
  const auto tmpl = testing::tiny_template();
  const auto p = pool();
  auto cfg = small_config();
  const auto a = generate_dataset(cfg, tmpl, p, FakeLm());
  cfg.seed = 12;
  const auto b = generate_dataset(cfg, tmpl, p, FakeLm());
  EXPECT_NE(dataset_to_jsonl(a.examples), dataset_to_jsonl(b.examples));
}

TEST(GenerateTest, PartialFailuresAreRecorded) {
  const auto tmpl = testing::tiny_template();
  const auto p = pool();
  const auto r = generate_dataset(small_config(), tmpl, p, FakeLm(0.3));
  EXPECT_GT(r.stats.failed, 0u);
  EXPECT_LT(2 * r.stats.failed, r.stats.attempted);
}

TEST(GenerateTest, MajorityFailureAborts) {
  const auto tmpl = testing::tiny_template();
  const auto p = pool();
  EXPECT_THROW(generate_dataset(small_config(), tmpl, p, FakeLm(0.8)),
               GenerationAborted);
}

TEST(GenerateTest, RefillTopsUpClasses) {
  const auto tmpl = testing::tiny_template();
  const auto p = pool();
  auto cfg = small_config();
  cfg.max_len = 10;
  cfg.refill = true;
  cfg.max_refill_rounds = 20;
  const auto r = generate_dataset(cfg, tmpl, p, FakeLm());
  EXPECT_EQ(r.stats.kept_per_class[0], 50u);
  EXPECT_EQ(r.stats.kept_per_class[1], 50u);
  EXPECT_GT(r.stats.attempted, 100u);
}

TEST(GenerateTest, EmptyPoolNeedsZeroContext) {
  const auto tmpl = testing::tiny_template();
  std::vector<Example> none;
  EXPECT_THROW(generate_dataset(small_config(), tmpl, none, FakeLm()),
               EmptyPool);
  auto cfg = small_config();
  cfg.k_context = 0;
  EXPECT_NO_THROW(generate_dataset(cfg, tmpl, none, FakeLm()));
}

TEST(DatasetIoTest, RoundTrip) {
  std::vector<SyntheticExample> data(3);
  data[0] = {"plain text", 0, "00000000000000ab", 4, 2};
  data[1] = {"caf\xc3\xa9 \"quoted\" \\ tab\t", 1, "0000000000000001", 9, 4};
  data[2] = {"human labelled", 1, "", std::nullopt, 2};
  const auto dir = scratch_dir("dataset_io");
  write_dataset(data, dir / "d.jsonl");
  const auto back = read_dataset(dir / "d.jsonl");
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back[0].text, data[0].text);
  EXPECT_EQ(back[1].text, data[1].text);
  EXPECT_EQ(back[1].seed_index, data[1].seed_index);
  EXPECT_EQ(back[2].prompt_digest, "");
  EXPECT_FALSE(back[2].seed_index.has_value());
  EXPECT_EQ(dataset_to_jsonl(back), dataset_to_jsonl(data));
  EXPECT_TRUE(back == data);

  write_dataset({}, dir / "empty.jsonl");
  EXPECT_TRUE(read_dataset(dir / "empty.jsonl").empty());
}

TEST(DatasetIoTest, TruncatedLineNamesLine) {
  const std::string good = R"({"text": "a b c", "label": 0})";
  try {
    parse_dataset(good + "\n" + good + "\n" + R"({"text": "a b)");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  try {
    parse_dataset(good + "\n" + R"({"label": 0})" + "\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(DatasetIoTest, ExamplesFile) {
  std::vector<Example> ex = {{"one", 1, "a"}, {"two", std::nullopt, "b"}};
  const auto dir = scratch_dir("examples_io");
  write_examples(ex, dir / "e.jsonl");
  const auto back = read_examples(dir / "e.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].label, 1);
  EXPECT_FALSE(back[1].label.has_value());
  EXPECT_EQ(back[1].source_id, "b");
}

}  // namespace
}  // namespace udg
