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

#include <algorithm>
#include <cmath>
#include <numeric>

namespace udg {

void DecodingParams::validate() const {
  if (top_k < 1) throw InvalidParams("top_k must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidParams("temperature must be positive");
  }
  if (min_new_tokens > max_new_tokens) {
    throw InvalidParams("min_new_tokens exceeds max_new_tokens");
  }
}

const char* to_string(FinishReason r) {
  return r == FinishReason::kStop ? "stop" : "length";
}

double LanguageModel::score(std::string_view, std::string_view) const {
  throw ScoringUnsupported(name() + " backend cannot score continuations");
}

Completion sample_completion(const LanguageModel& backend,
                             std::string_view prompt,
                             const DecodingParams& params, Rng& rng) {
  params.validate();
  return backend.sample(prompt, params, rng);
}

double score_continuation(const LanguageModel& backend, std::string_view prompt,
                          std::string_view continuation) {
  if (count_tokens(continuation) == 0) {
    throw InvalidParams("continuation must be non-empty");
  }
  if (!backend.supports_scoring()) {
    throw ScoringUnsupported(backend.name() +
                             " backend cannot score continuations");
  }
  return backend.score(prompt, continuation);
}

Vector top_k_truncate(const Eigen::Ref<const Vector>& probs,
                      std::size_t top_k) {
  const Eigen::Index n = probs.size();
  const auto k = static_cast<Eigen::Index>(
      std::min<std::size_t>(top_k, static_cast<std::size_t>(n)));
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  Vector out = Vector::Zero(n);
  double total = 0.0;
  // Sum in index order so the result is independent of the sort internals.
  std::sort(order.begin(), order.begin() + k);
  for (Eigen::Index i = 0; i < k; ++i) total += probs[order[i]];
  for (Eigen::Index i = 0; i < k; ++i) {
    out[order[i]] = probs[order[i]] / total;
  }
  return out;
}

Vector apply_temperature(const Eigen::Ref<const Vector>& probs,
                         double temperature) {
  if (temperature == 1.0) return probs;
  const double peak = probs.maxCoeff();
  Vector out(probs.size());
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    out[i] = probs[i] > 0.0 ? std::pow(probs[i] / peak, 1.0 / temperature)
                            : 0.0;
  }
  return out / out.sum();
}

Eigen::Index draw_index(const Eigen::Ref<const Vector>& probs, Rng& rng) {
  const double u = uniform01(rng) * probs.sum();
  double acc = 0.0;
  Eigen::Index last = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

// ---------------------------------------------------------------------------

ReferenceLm::ReferenceLm(std::vector<std::string> words,
                         std::span<const TokenDoc> generic_corpus,
                         std::span<const std::vector<TokenDoc>> class_corpora,
                         std::vector<Keyword> class_keywords,
                         ReferenceLmOptions options)
    : keywords_(std::move(class_keywords)), options_(std::move(options)) {
  if (!(options_.cache_alpha > 0.0)) {
    throw InvalidParams("cache_alpha must be positive");
  }
  if (options_.class_weight < 0.0 || options_.class_weight >= 1.0) {
    throw InvalidParams("class_weight must lie in [0, 1)");
  }
  vocab_.push_back(kEosToken);
  vocab_.push_back(kUnkToken);
  for (auto& w : words) {
    std::string lw = to_lower_ascii(w);
    if (lw.empty() || index_.count(lw) || lw == kEosToken || lw == kUnkToken) {
      continue;
    }
    vocab_.push_back(std::move(lw));
  }
  for (int i = 0; i < static_cast<int>(vocab_.size()); ++i) index_[vocab_[i]] = i;

  generic_ = build_table(generic_corpus);
  for (const auto& corpus : class_corpora) {
    class_tables_.push_back(build_table(corpus));
  }
  for (const auto& kw : keywords_) {
    if (kw.class_id < 0 || kw.class_id >= num_classes()) {
      throw InvalidParams("keyword '" + kw.text + "' names unknown class");
    }
  }
}

int ReferenceLm::token_id(std::string_view token) const {
  const auto it = index_.find(to_lower_ascii(token));
  return it == index_.end() ? kUnk : it->second;
}

bool ReferenceLm::in_vocab(std::string_view token) const {
  const int id = token_id(token);
  return id != kUnk && id != kEos;
}

RowMatrix ReferenceLm::build_table(std::span<const TokenDoc> corpus) const {
  const int v = vocab_size();
  RowMatrix counts = RowMatrix::Zero(v + 1, v);
  Vector unigram = Vector::Zero(v);
  for (const auto& doc : corpus) {
    int prev = bos_context();
    for (const auto& tok : doc) {
      if (!in_vocab(tok)) continue;
      const int id = token_id(tok);
      counts(prev, id) += 1.0;
      unigram[id] += 1.0;
      prev = id;
    }
    counts(prev, kEos) += 1.0;
    unigram[kEos] += 1.0;
  }
  // Add-one unigram keeps every token reachable.
  const Vector base = (unigram.array() + 1.0) / (unigram.sum() + v);
  const double beta = options_.backoff_strength;
  RowMatrix table(v + 1, v);
  for (int r = 0; r <= v; ++r) {
    const double total = counts.row(r).sum();
    table.row(r) = (counts.row(r) + beta * base.transpose()) / (total + beta);
  }
  return table;
}

void ReferenceLm::detect_class(State& state) const {
  state.active_class = -1;
  std::size_t best_end = 0;
  std::size_t best_len = 0;
  for (const auto& kw : keywords_) {
    if (kw.text.empty()) continue;
    const std::size_t pos = state.active_text.rfind(kw.text);
    if (pos == std::string::npos) continue;
    const std::size_t end = pos + kw.text.size();
    if (state.active_class < 0 || end > best_end ||
        (end == best_end && kw.text.size() > best_len)) {
      state.active_class = kw.class_id;
      best_end = end;
      best_len = kw.text.size();
    }
  }
}

ReferenceLm::State ReferenceLm::analyze(std::string_view prefix) const {
  const int v = vocab_size();
  State s;
  s.cache_rows.resize(v + 1);
  s.cache_row_totals.assign(v + 1, 0);
  s.cache_unigram.assign(v, 0);

  auto bump = [&](int row, int col) {
    auto& r = s.cache_rows[row];
    auto it = std::find_if(r.begin(), r.end(),
                           [col](const auto& p) { return p.first == col; });
    if (it == r.end()) {
      r.emplace_back(col, 1);
    } else {
      ++it->second;
    }
    ++s.cache_row_totals[row];
    ++s.cache_unigram[col];
    ++s.cache_total;
  };

  const std::string& sep = options_.segment_separator;
  std::size_t start = 0;
  while (true) {
    const std::size_t hit = sep.empty() ? std::string_view::npos
                                        : prefix.find(sep, start);
    if (hit == std::string_view::npos) break;
    const auto tokens = split_whitespace(prefix.substr(start, hit - start));
    int prev = bos_context();
    bool any = false;
    for (auto tok : tokens) {
      if (!in_vocab(tok)) continue;
      const int id = token_id(tok);
      bump(prev, id);
      prev = id;
      any = true;
    }
    if (any) {
      bump(prev, kEos);
      ++s.examples;
    }
    start = hit + sep.size();
  }

  s.active_text = std::string(prefix.substr(start));
  s.context = bos_context();
  for (auto tok : split_whitespace(s.active_text)) {
    if (in_vocab(tok)) s.context = token_id(tok);
  }
  detect_class(s);
  return s;
}

void ReferenceLm::append(State& state, std::string_view token) const {
  state.active_text.push_back(' ');
  state.active_text.append(token);
  if (in_vocab(token)) state.context = token_id(token);
  detect_class(state);
}

ReferenceLm::Weights ReferenceLm::weights(const State& state) const {
  Weights w;
  w.cls = state.active_class >= 0 ? options_.class_weight : 0.0;
  const double m = static_cast<double>(state.examples);
  const double lambda = m / (m + options_.cache_alpha);
  w.cache = (1.0 - w.cls) * lambda;
  w.generic = (1.0 - w.cls) * (1.0 - lambda);
  return w;
}

Vector ReferenceLm::cache_distribution(const State& state) const {
  const int v = vocab_size();
  Vector out = Vector::Zero(v);
  if (state.cache_total == 0) return out;
  const int row_total = state.cache_row_totals[state.context];
  if (row_total > 0) {
    for (const auto& [col, n] : state.cache_rows[state.context]) {
      out[col] = static_cast<double>(n) / row_total;
    }
  } else {
    for (int i = 0; i < v; ++i) {
      out[i] = static_cast<double>(state.cache_unigram[i]) / state.cache_total;
    }
  }
  return out;
}

Vector ReferenceLm::next_token_distribution(const State& state) const {
  const Weights w = weights(state);
  Vector out = w.generic * generic_.row(state.context).transpose();
  if (w.cls > 0.0) {
    out += w.cls * class_tables_[state.active_class].row(state.context).transpose();
  }
  if (w.cache > 0.0) out += w.cache * cache_distribution(state);
  return out;
}

Completion ReferenceLm::sample(std::string_view prompt,
                               const DecodingParams& params, Rng& rng) const {
  State state = analyze(prompt);
  Completion out;
  std::size_t generated = 0;
  while (generated < params.max_new_tokens) {
    Vector p = next_token_distribution(state);
    if (generated < params.min_new_tokens) {
      p[kEos] = 0.0;
      p /= p.sum();
    }
    const Vector q = sampling_distribution(p, params.top_k, params.temperature);
    const auto idx = static_cast<int>(draw_index(q, rng));
    if (idx == kEos) {
      out.finish_reason = FinishReason::kStop;
      return out;
    }
    const std::string& tok = vocab_[idx];
    if (!out.text.empty()) out.text.push_back(' ');
    out.text += tok;
    out.token_logprobs.push_back(std::log(p[idx]));
    append(state, tok);
    ++generated;
    for (const auto& stop : params.stop_sequences) {
      if (stop.empty()) continue;
      const std::size_t hit = out.text.find(stop);
      if (hit != std::string::npos) {
        out.text.resize(hit);
        out.finish_reason = FinishReason::kStop;
        return out;
      }
    }
  }
  out.finish_reason = FinishReason::kLength;
  return out;
}

double ReferenceLm::score(std::string_view prompt,
                          std::string_view continuation) const {
  State state = analyze(prompt);
  double total = 0.0;
  for (auto tok : split_whitespace(continuation)) {
    const Vector p = next_token_distribution(state);
    total += std::log(p[token_id(tok)]);
    append(state, tok);
  }
  return total;
}

}  // namespace udg
