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

#include "udg/common.hpp"

#include <gtest/gtest.h>

#include <set>

namespace udg {
namespace {

TEST(TextTest, SplitsOnAnyWhitespaceRun) {
  const auto toks = split_whitespace("  a\tb \n\nc  ");
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[0], "a");
  EXPECT_EQ(toks[2], "c");
  EXPECT_EQ(count_tokens(""), 0u);
  EXPECT_EQ(count_tokens("\n\n"), 0u);
}

TEST(TextTest, NormalizeCollapsesAndLowercases) {
  EXPECT_EQ(normalize_text("  Good\t\tMOVIE \n"), "good movie");
  EXPECT_EQ(to_lower_ascii("AbC"), "abc");
}

TEST(HashTest, Fnv1aKnownVectors) {
  // Published FNV-1a 64 test vectors.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(SeedTest, DeriveSeedSeparatesKeys) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t c = 0; c < 4; ++c) {
    for (std::uint64_t i = 0; i < 256; ++i) {
      seen.insert(derive_seed(7, {c, i}));
    }
  }
  EXPECT_EQ(seen.size(), 4u * 256u);
  EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
  EXPECT_NE(derive_seed(7, {1}), derive_seed(8, {1}));
}

TEST(RngTest, UniformHelpersStayInRange) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(uniform_index(rng, 7), 7u);
  }
  EXPECT_EQ(uniform_index(rng, 1), 0u);
}

}  // namespace
}  // namespace udg
