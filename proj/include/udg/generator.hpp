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

#ifndef UDG_GENERATOR_HPP_
#define UDG_GENERATOR_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "udg/lm.hpp"
#include "udg/prompt.hpp"

namespace udg {

struct GenerationConfig {
  std::size_t k_context = 32;
  std::size_t n_per_class = 1000;  // n_c
  DecodingParams decoding;
  std::size_t min_len = 5;
  std::size_t max_len = 512;
  PromptBudget budget;
  std::uint64_t seed = 1;
  std::size_t parallelism = 1;
  // Re-sample filtered or failed slots with fresh seed indices.
  bool refill = false;
  std::size_t max_refill_rounds = 4;

  void validate() const;  // throws InvalidParams
};

struct SyntheticExample {
  std::string text;
  ClassId pseudo_label = 0;
  std::string prompt_digest;              // empty for human-labeled data
  std::optional<std::uint64_t> seed_index;  // absent for human-labeled data
  std::size_t token_count = 0;

  bool operator==(const SyntheticExample&) const = default;
};

enum class DropReason { kNone, kTooShort, kTooLong, kDuplicate };

const char* to_string(DropReason r);

struct FilterVerdict {
  bool keep = true;
  DropReason reason = DropReason::kNone;
};

/// Length and exact-duplicate filter. Duplicates are compared after
/// lowercasing and whitespace collapse; kept texts are recorded in `seen`.
FilterVerdict post_filter(std::string_view text, std::size_t min_len,
                          std::size_t max_len,
                          std::unordered_set<std::string>& seen);

struct GenerationStats {
  std::size_t attempted = 0;
  std::size_t kept = 0;
  std::size_t failed = 0;
  std::size_t too_short = 0;
  std::size_t too_long = 0;
  std::size_t duplicate = 0;
  std::vector<std::size_t> kept_per_class;
};

struct GenerationResult {
  std::vector<SyntheticExample> examples;
  GenerationStats stats;
};

/// Generates n_per_class completions per label class. The rng of item
/// (class c, index i) is derived from (seed, c, i), and filtering runs in
/// (class, index) order after all items finish, so the output does not depend
/// on `parallelism`.
GenerationResult generate_dataset(const GenerationConfig& config,
                                  const PromptTemplate& tmpl,
                                  std::span<const Example> pool,
                                  const LanguageModel& backend);

// ---------------------------------------------------------------------------
// JSON-lines persistence:
//   {"text": str, "label": int, "prompt_digest": str, "seed_index": int}
// prompt_digest and seed_index are omitted for human-labeled data.

void write_dataset(std::span<const SyntheticExample> examples,
                   const std::filesystem::path& path);
std::string dataset_to_jsonl(std::span<const SyntheticExample> examples);

/// Throws ParseError naming the 1-based line of the first malformed record.
std::vector<SyntheticExample> read_dataset(const std::filesystem::path& path);
std::vector<SyntheticExample> parse_dataset(std::string_view jsonl);

/// Reads {"text", optional "label", optional "id"} lines into examples.
std::vector<Example> read_examples(const std::filesystem::path& path);
void write_examples(std::span<const Example> examples,
                    const std::filesystem::path& path);

std::vector<Example> to_examples(std::span<const SyntheticExample> data);

}  // namespace udg

#endif  // UDG_GENERATOR_HPP_
