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

#ifndef UDG_LM_HPP_
#define UDG_LM_HPP_

#include <Eigen/Core>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "udg/common.hpp"

namespace udg {

using Vector = Eigen::VectorXd;
using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DecodingParams {
  std::size_t top_k = 40;
  double temperature = 1.0;
  std::size_t max_new_tokens = 128;
  std::size_t min_new_tokens = 0;
  std::vector<std::string> stop_sequences{"\n\n"};

  void validate() const;  // throws InvalidParams
};

enum class FinishReason { kStop, kLength };

const char* to_string(FinishReason r);

struct Completion {
  std::string text;
  std::vector<double> token_logprobs;  // empty when the backend has none
  FinishReason finish_reason = FinishReason::kLength;
};

/// A generative model M. Implementations are read-only after construction
/// and may be called concurrently; randomness comes only from the caller's
/// stream.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual Completion sample(std::string_view prompt,
                            const DecodingParams& params, Rng& rng) const = 0;

  virtual bool supports_scoring() const { return false; }

  /// log P(continuation | prompt). Only called when supports_scoring().
  virtual double score(std::string_view prompt,
                       std::string_view continuation) const;

  virtual std::string name() const = 0;
};

Completion sample_completion(const LanguageModel& backend,
                             std::string_view prompt,
                             const DecodingParams& params, Rng& rng);

double score_continuation(const LanguageModel& backend, std::string_view prompt,
                          std::string_view continuation);

// ---------------------------------------------------------------------------
// Decoding primitives, exposed for the sampler checks.

/// Keeps the `top_k` most probable entries (ties: lower index wins), zeroes
/// the rest and renormalizes.
Vector top_k_truncate(const Eigen::Ref<const Vector>& probs, std::size_t top_k);

/// q^(1/T) renormalized. T == 1 returns q unchanged, bit for bit.
Vector apply_temperature(const Eigen::Ref<const Vector>& probs,
                         double temperature);

inline Vector sampling_distribution(const Eigen::Ref<const Vector>& probs,
                                    std::size_t top_k, double temperature) {
  return apply_temperature(top_k_truncate(probs, top_k), temperature);
}

/// Inverse-CDF draw from a normalized vector.
Eigen::Index draw_index(const Eigen::Ref<const Vector>& probs, Rng& rng);

// ---------------------------------------------------------------------------
// Reference backend: a deterministic word-level model.
//
//   P(w | prefix) = mu * class_c(w | prev)
//                 + (1 - mu) * lambda * cache(w | prev)
//                 + (1 - mu) * (1 - lambda) * generic(w | prev)
//
// lambda = m / (m + cache_alpha) with m the number of in-context example
// segments in the prompt; mu = class_weight when a label description of
// class c appears in the active (last) segment, else 0. `prev` is the last
// in-vocabulary token of the active segment, or the start symbol.

struct ReferenceLmOptions {
  double cache_alpha = 4.0;
  double class_weight = 0.3;
  // Dirichlet prior strength for backing bigrams off to add-one unigrams.
  double backoff_strength = 2.0;
  std::string segment_separator = "\n\n";
};

using TokenDoc = std::vector<std::string>;

class ReferenceLm final : public LanguageModel {
 public:
  static constexpr int kEos = 0;
  static constexpr int kUnk = 1;
  static constexpr const char* kEosToken = "</s>";
  static constexpr const char* kUnkToken = "<unk>";

  struct Keyword {
    std::string text;
    ClassId class_id;
  };

  /// Parsed prompt: cache counts from the in-context examples plus the state
  /// of the segment being generated.
  struct State {
    std::size_t examples = 0;  // m
    std::vector<std::vector<std::pair<int, int>>> cache_rows;
    std::vector<int> cache_row_totals;
    std::vector<int> cache_unigram;
    int cache_total = 0;
    int context = 0;  // token id, or vocab_size() for the start symbol
    int active_class = -1;
    std::string active_text;
  };

  struct Weights {
    double generic = 1.0;
    double cache = 0.0;
    double cls = 0.0;
  };

  /// Builds count tables. `words` excludes the reserved tokens, which take
  /// ids 0 and 1. Corpus tokens outside the vocabulary are skipped.
  ReferenceLm(std::vector<std::string> words,
              std::span<const TokenDoc> generic_corpus,
              std::span<const std::vector<TokenDoc>> class_corpora,
              std::vector<Keyword> class_keywords,
              ReferenceLmOptions options = {});

  int vocab_size() const { return static_cast<int>(vocab_.size()); }
  int bos_context() const { return vocab_size(); }
  const std::vector<std::string>& vocab() const { return vocab_; }
  int num_classes() const { return static_cast<int>(class_tables_.size()); }
  const ReferenceLmOptions& options() const { return options_; }

  /// Id of a (case-insensitive) token; kUnk when absent.
  int token_id(std::string_view token) const;
  bool in_vocab(std::string_view token) const;

  State analyze(std::string_view prefix) const;
  void append(State& state, std::string_view token) const;
  Weights weights(const State& state) const;

  Vector next_token_distribution(const State& state) const;
  Vector next_token_distribution(std::string_view prefix) const {
    return next_token_distribution(analyze(prefix));
  }

  /// Component conditionals, rows indexed by context id (bos last).
  const RowMatrix& generic_table() const { return generic_; }
  const RowMatrix& class_table(ClassId c) const { return class_tables_.at(c); }
  /// Cache conditional for the state's current context.
  Vector cache_distribution(const State& state) const;

  Completion sample(std::string_view prompt, const DecodingParams& params,
                    Rng& rng) const override;
  bool supports_scoring() const override { return true; }
  double score(std::string_view prompt,
               std::string_view continuation) const override;
  std::string name() const override { return "reference"; }

 private:
  RowMatrix build_table(std::span<const TokenDoc> corpus) const;
  void detect_class(State& state) const;

  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  RowMatrix generic_;
  std::vector<RowMatrix> class_tables_;
  std::vector<Keyword> keywords_;
  ReferenceLmOptions options_;
};

}  // namespace udg

#endif  // UDG_LM_HPP_
