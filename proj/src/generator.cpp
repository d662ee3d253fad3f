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

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "udg/parallel.hpp"

namespace udg {
namespace {

using json = nlohmann::json;

struct Item {
  ClassId label = 0;
  std::uint64_t index = 0;
};

struct ItemResult {
  bool failed = false;
  std::string text;
  std::string digest;
};

std::string trim(std::string_view s) {
  const auto tokens = split_whitespace(s);
  if (tokens.empty()) return {};
  const char* b = tokens.front().data();
  const char* e = tokens.back().data() + tokens.back().size();
  return std::string(b, e);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FixtureError("cannot write " + path.string());
  out << data;
}

template <class Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) fn(line, line_no);
    pos = end + 1;
  }
}

}  // namespace

void GenerationConfig::validate() const {
  if (n_per_class < 1) throw InvalidParams("n_per_class must be >= 1");
  if (min_len >= max_len) throw InvalidParams("min_len must be < max_len");
  decoding.validate();
  budget.validate();
}

const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::kNone: return "none";
    case DropReason::kTooShort: return "too_short";
    case DropReason::kTooLong: return "too_long";
    case DropReason::kDuplicate: return "duplicate";
  }
  return "unknown";
}

FilterVerdict post_filter(std::string_view text, std::size_t min_len,
                          std::size_t max_len,
                          std::unordered_set<std::string>& seen) {
  const std::size_t n = count_tokens(text);
  if (n < min_len) return {false, DropReason::kTooShort};
  if (n > max_len) return {false, DropReason::kTooLong};
  if (!seen.insert(normalize_text(text)).second) {
    return {false, DropReason::kDuplicate};
  }
  return {};
}

GenerationResult generate_dataset(const GenerationConfig& config,
                                  const PromptTemplate& tmpl,
                                  std::span<const Example> pool,
                                  const LanguageModel& backend) {
  config.validate();
  if (pool.empty() && config.k_context > 0) {
    throw EmptyPool("unlabeled pool is empty but k_context > 0");
  }
  const std::size_t num_classes = tmpl.num_classes();

  GenerationResult result;
  result.stats.kept_per_class.assign(num_classes, 0);
  std::unordered_set<std::string> seen;
  std::vector<std::uint64_t> next_index(num_classes, 0);
  std::vector<std::size_t> wanted(num_classes, config.n_per_class);

  const std::size_t rounds = config.refill ? 1 + config.max_refill_rounds : 1;
  for (std::size_t round = 0; round < rounds; ++round) {
    std::vector<Item> items;
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t j = 0; j < wanted[c]; ++j) {
        items.push_back({static_cast<ClassId>(c), next_index[c]++});
      }
    }
    if (items.empty()) break;

    std::vector<ItemResult> out(items.size());
    parallel_for(items.size(), config.parallelism, [&](std::size_t n) {
      const Item& item = items[n];
      Rng rng(derive_seed(config.seed,
                          {static_cast<std::uint64_t>(item.label), item.index}));
      const auto context = sample_context(pool, config.k_context, rng);
      const std::string prompt = build_generation_prompt(
          tmpl, context, describe_label(tmpl.labels, item.label),
          config.budget);
      out[n].digest = hex64(fnv1a64(prompt));
      try {
        out[n].text = trim(
            sample_completion(backend, prompt, config.decoding, rng).text);
      } catch (const ProviderUnavailable&) {
        out[n].failed = true;
      }
    });

    // Sequential merge in (class, index) order.
    for (std::size_t n = 0; n < items.size(); ++n) {
      const Item& item = items[n];
      ++result.stats.attempted;
      if (out[n].failed) {
        ++result.stats.failed;
        continue;
      }
      const auto verdict =
          post_filter(out[n].text, config.min_len, config.max_len, seen);
      switch (verdict.reason) {
        case DropReason::kTooShort: ++result.stats.too_short; continue;
        case DropReason::kTooLong: ++result.stats.too_long; continue;
        case DropReason::kDuplicate: ++result.stats.duplicate; continue;
        case DropReason::kNone: break;
      }
      SyntheticExample ex;
      ex.token_count = count_tokens(out[n].text);
      ex.text = std::move(out[n].text);
      ex.pseudo_label = item.label;
      ex.prompt_digest = std::move(out[n].digest);
      ex.seed_index = item.index;
      result.examples.push_back(std::move(ex));
      ++result.stats.kept_per_class[item.label];
      ++result.stats.kept;
    }
    if (2 * result.stats.failed > result.stats.attempted) {
      throw GenerationAborted(std::to_string(result.stats.failed) + " of " +
                              std::to_string(result.stats.attempted) +
                              " generation requests failed");
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      wanted[c] = config.n_per_class - result.stats.kept_per_class[c];
    }
  }

  // Refill rounds append per class; restore class-major order.
  std::stable_sort(result.examples.begin(), result.examples.end(),
                   [](const auto& a, const auto& b) {
                     return a.pseudo_label < b.pseudo_label;
                   });
  return result;
}

std::string dataset_to_jsonl(std::span<const SyntheticExample> examples) {
  std::string out;
  for (const auto& ex : examples) {
    json j;
    j["text"] = ex.text;
    j["label"] = ex.pseudo_label;
    if (!ex.prompt_digest.empty()) j["prompt_digest"] = ex.prompt_digest;
    if (ex.seed_index) j["seed_index"] = *ex.seed_index;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(std::span<const SyntheticExample> examples,
                   const std::filesystem::path& path) {
  spit(path, dataset_to_jsonl(examples));
}

std::vector<SyntheticExample> parse_dataset(std::string_view jsonl) {
  std::vector<SyntheticExample> out;
  for_each_line(jsonl, [&](std::string_view line, std::size_t line_no) {
    try {
      const json j = json::parse(line);
      SyntheticExample ex;
      ex.text = j.at("text").get<std::string>();
      ex.pseudo_label = j.at("label").get<int>();
      if (j.contains("prompt_digest")) {
        ex.prompt_digest = j["prompt_digest"].get<std::string>();
      }
      if (j.contains("seed_index")) {
        ex.seed_index = j["seed_index"].get<std::uint64_t>();
      }
      ex.token_count = count_tokens(ex.text);
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                       line_no);
    }
  });
  return out;
}

std::vector<SyntheticExample> read_dataset(const std::filesystem::path& path) {
  return parse_dataset(slurp(path));
}

std::vector<Example> read_examples(const std::filesystem::path& path) {
  const std::string data = slurp(path);
  std::vector<Example> out;
  for_each_line(data, [&](std::string_view line, std::size_t line_no) {
    try {
      const json j = json::parse(line);
      Example ex;
      ex.text = j.at("text").get<std::string>();
      if (j.contains("label") && !j["label"].is_null()) {
        ex.label = j["label"].get<int>();
      }
      ex.source_id = j.contains("id") ? j["id"].get<std::string>()
                                      : std::to_string(line_no);
      if (normalize_text(ex.text).empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": empty text",
                         line_no);
      }
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what(),
                       line_no);
    }
  });
  return out;
}

void write_examples(std::span<const Example> examples,
                    const std::filesystem::path& path) {
  std::string out;
  for (const auto& ex : examples) {
    json j;
    j["text"] = ex.text;
    if (ex.label) j["label"] = *ex.label;
    if (!ex.source_id.empty()) j["id"] = ex.source_id;
    out += j.dump();
    out += '\n';
  }
  spit(path, out);
}

std::vector<Example> to_examples(std::span<const SyntheticExample> data) {
  std::vector<Example> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.push_back({data[i].text, data[i].pseudo_label,
                   "syn-" + std::to_string(i)});
  }
  return out;
}

}  // namespace udg
