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

// Desk-scale stand-in for a real text classification corpus. A world is a
// set of word categories plus first-order "role" chains:
//
//   document chain  - how a labeled document of class y is written
//   generic chain   - the general corpus the reference LM is counted on
//   class chain     - per-class corpora giving the LM its notion of a label
//
// Every word belongs to exactly one category, so the class likelihood of a
// document is exact and the Bayes posterior can be computed directly.

#ifndef UDG_TOY_WORLD_HPP_
#define UDG_TOY_WORLD_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "udg/lm.hpp"
#include "udg/prompt.hpp"

namespace udg {

enum class Role : int {
  kNeutral,
  kOffdomain,
  kOwnShared,
  kOwnDomain,
  kOtherShared,
  kOtherDomain,
  kAnyShared,
  kAnyDomain,
  kEnd,
};
inline constexpr int kNumRoles = 9;
inline constexpr int kStartRow = kNumRoles;  // transition row for doc start

/// Row-stochastic role transitions; rows 0..kNumRoles-1 plus the start row.
struct RoleChain {
  std::array<std::array<double, kNumRoles>, kNumRoles + 1> p{};
};

struct ToyWorldSizes {
  std::size_t eval = 1000;
  std::size_t unlabeled_pool = 2000;
  std::size_t labeled_pool = 200;
  std::size_t generic_corpus = 4000;
  std::size_t class_corpus = 1000;
  std::size_t max_doc_tokens = 120;
};

class ToyWorld {
 public:
  static ToyWorld parse(std::string_view json_text);
  static ToyWorld load(const std::filesystem::path& path);

  const std::string& name() const { return name_; }
  int num_classes() const { return static_cast<int>(shared_.size()); }
  const ToyWorldSizes& sizes() const { return sizes_; }

  /// All words, in a fixed order: neutral, offdomain, then per class shared
  /// and domain words.
  std::vector<std::string> vocabulary() const;

  TokenDoc sample_document(ClassId label, Rng& rng) const;

  /// Fixed splits derived from the world's data seed.
  std::vector<Example> eval_set() const;
  std::vector<Example> unlabeled_pool() const;
  std::vector<Example> labeled_pool() const;

  /// log P(doc | class) under the document chain (-inf if impossible).
  double log_likelihood(std::span<const std::string> doc, ClassId label) const;
  /// Bayes argmax with a uniform prior; ties to the lowest class.
  ClassId bayes_label(std::string_view text) const;

  /// Counts the reference LM from the generic and class chains. Keywords
  /// are the template's label descriptions.
  ReferenceLm build_reference_lm(const PromptTemplate& tmpl,
                                 const ReferenceLmOptions& options = {}) const;

 private:
  TokenDoc sample_chain(const RoleChain& chain, ClassId label, Rng& rng) const;
  const std::string& emit(Role role, ClassId label, Rng& rng) const;
  std::vector<Example> sample_split(std::uint64_t split, std::size_t n,
                                    bool keep_labels) const;

  std::string name_;
  std::uint64_t data_seed_ = 1;
  std::uint64_t lm_seed_ = 2;
  ToyWorldSizes sizes_;
  std::vector<std::string> neutral_;
  std::vector<std::string> offdomain_;
  std::vector<std::vector<std::string>> shared_;
  std::vector<std::vector<std::string>> domain_;
  RoleChain document_;
  RoleChain generic_;
  RoleChain class_;

  struct WordInfo {
    Role category;  // kNeutral, kOffdomain, kAnyShared or kAnyDomain
    int owner = -1;
  };
  std::unordered_map<std::string, WordInfo> words_;
};

}  // namespace udg

#endif  // UDG_TOY_WORLD_HPP_
