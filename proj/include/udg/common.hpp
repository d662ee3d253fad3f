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

#ifndef UDG_COMMON_HPP_
#define UDG_COMMON_HPP_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace udg {

using ClassId = int;

// Error hierarchy. Every failure mode surfaced by the library derives from
// udg::Error so callers can catch the whole family at the CLI boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define UDG_DEFINE_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

UDG_DEFINE_ERROR(EmptyPool);
UDG_DEFINE_ERROR(UnknownLabel);
UDG_DEFINE_ERROR(BudgetTooSmall);
UDG_DEFINE_ERROR(MissingLabel);
UDG_DEFINE_ERROR(TemplateError);
UDG_DEFINE_ERROR(ProviderUnavailable);
UDG_DEFINE_ERROR(ScoringUnsupported);
UDG_DEFINE_ERROR(InvalidParams);
UDG_DEFINE_ERROR(GenerationAborted);
UDG_DEFINE_ERROR(EmptyInput);
UDG_DEFINE_ERROR(ShapeError);
UDG_DEFINE_ERROR(DivergenceError);
UDG_DEFINE_ERROR(ScheduleError);
UDG_DEFINE_ERROR(AllExamplesRemoved);
UDG_DEFINE_ERROR(FixtureError);

#undef UDG_DEFINE_ERROR

/// Malformed persisted data. `line()` is 1-based; 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Invalid experiment configuration. `key()` is the dotted path of the
/// offending key, e.g. "generation.decoding.top_k".
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// ---------------------------------------------------------------------------
// Text helpers. Whitespace tokenization is the token unit everywhere: prompt
// budgets, length filters, the reference LM and the classifier features.

std::vector<std::string_view> split_whitespace(std::string_view text);
std::size_t count_tokens(std::string_view text);
std::string to_lower_ascii(std::string_view text);
/// Lowercase and collapse every whitespace run to one space, trimmed.
std::string normalize_text(std::string_view text);
std::string join(const std::vector<std::string_view>& parts,
                 std::string_view sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// ---------------------------------------------------------------------------
// Hashing and seeding.

std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// One round of splitmix64; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> keys);

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) with 53 random bits. Portable across standard
/// libraries, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling; portable.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

}  // namespace udg

#endif  // UDG_COMMON_HPP_
