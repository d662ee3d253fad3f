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

#include "udg/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace udg {
namespace {

using json = nlohmann::json;

bool is_ident(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

// Placeholder names appearing as {name} in `format`.
std::vector<std::string> placeholders(std::string_view format) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < format.size(); ++i) {
    if (format[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < format.size() && is_ident(format[j])) ++j;
    if (j > i + 1 && j < format.size() && format[j] == '}') {
      names.emplace_back(format.substr(i + 1, j - i - 1));
      i = j;
    }
  }
  return names;
}

// Single pass, so values containing "{...}" are never re-expanded.
std::string render(std::string_view format, std::string_view name,
                   std::string_view value) {
  const std::string needle = "{" + std::string(name) + "}";
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t hit = format.find(needle, pos);
    if (hit == std::string_view::npos) break;
    out.append(format.substr(pos, hit - pos));
    out.append(value);
    pos = hit + needle.size();
  }
  out.append(format.substr(pos));
  return out;
}

void check_format(const std::string& field, std::string_view format,
                  std::string_view required) {
  const auto names = placeholders(format);
  if (std::find(names.begin(), names.end(), required) == names.end()) {
    throw TemplateError(field + " must contain {" + std::string(required) +
                        "}");
  }
  for (const auto& n : names) {
    if (n != required) {
      throw TemplateError(field + " has unbound placeholder {" + n + "}");
    }
  }
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\n' || s.back() == '\r')) {
    s.pop_back();
  }
  return s;
}

}  // namespace

void PromptBudget::validate() const {
  if (per_example_truncation == 0 || max_tokens < per_example_truncation) {
    throw InvalidParams(
        "prompt budget requires max_tokens >= per_example_truncation > 0");
  }
}

void validate_template(const PromptTemplate& tmpl) {
  check_format("example_block_format", tmpl.example_block_format, "text");
  check_format("label_line_format", tmpl.label_line_format, "label");
  check_format("inference_label_format", tmpl.inference_label_format, "label");
  if (tmpl.labels.empty()) throw TemplateError("template has no labels");
  std::vector<bool> seen(tmpl.labels.size(), false);
  for (const auto& d : tmpl.labels) {
    if (d.class_id < 0 ||
        static_cast<std::size_t>(d.class_id) >= tmpl.labels.size()) {
      throw TemplateError("class ids must be contiguous from 0; got " +
                          std::to_string(d.class_id));
    }
    if (seen[d.class_id]) {
      throw TemplateError("duplicate class id " + std::to_string(d.class_id));
    }
    seen[d.class_id] = true;
    if (d.description.empty()) {
      throw TemplateError("empty description for class " +
                          std::to_string(d.class_id));
    }
  }
}

PromptTemplate parse_template(std::string_view json_text, std::string id) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw TemplateError(std::string("template is not valid JSON: ") + e.what());
  }
  PromptTemplate t;
  t.id = std::move(id);
  try {
    t.task_description = j.value("task_description", std::string{});
    t.example_block_format = j.at("example_block_format").get<std::string>();
    t.label_line_format = j.at("label_line_format").get<std::string>();
    t.separator = j.value("separator", std::string("\n\n"));
    t.inference_label_format =
        j.value("inference_label_format", std::string("Label: {label}"));
    for (const auto& l : j.at("labels")) {
      LabelDescriptor d;
      d.class_id = l.at("class_id").get<int>();
      d.description = l.at("description").get<std::string>();
      d.verbalizer = l.value("verbalizer", std::string{});
      t.labels.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw TemplateError(std::string("template field error: ") + e.what());
  }
  std::sort(t.labels.begin(), t.labels.end(),
            [](const auto& a, const auto& b) { return a.class_id < b.class_id; });
  validate_template(t);
  return t;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot open template " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_template(buf.str(), path.stem().string());
}

std::vector<Example> sample_context(std::span<const Example> pool,
                                    std::size_t k, Rng& rng) {
  if (k == 0) return {};
  if (pool.empty()) throw EmptyPool("cannot sample context from an empty pool");
  const std::size_t take = std::min(k, pool.size());
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `take` slots are a uniform sample.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + uniform_index(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  std::vector<Example> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(pool[idx[i]]);
  return out;
}

const std::string& describe_label(std::span<const LabelDescriptor> descriptors,
                                  ClassId class_id) {
  for (const auto& d : descriptors) {
    if (d.class_id == class_id) return d.description;
  }
  throw UnknownLabel("unknown class id " + std::to_string(class_id));
}

const std::string& verbalize_label(std::span<const LabelDescriptor> descriptors,
                                   ClassId class_id) {
  for (const auto& d : descriptors) {
    if (d.class_id == class_id) {
      return d.verbalizer.empty() ? d.description : d.verbalizer;
    }
  }
  throw UnknownLabel("unknown class id " + std::to_string(class_id));
}

std::string truncate_keep_last(std::string_view text, std::size_t max_tokens) {
  const auto tokens = split_whitespace(text);
  if (tokens.size() <= max_tokens) return std::string(text);
  std::vector<std::string_view> tail(tokens.end() - max_tokens, tokens.end());
  return join(tail, " ");
}

GenerationPrompt pack_generation_prompt(const PromptTemplate& tmpl,
                                        std::span<const Example> context,
                                        std::string_view label_text,
                                        const PromptBudget& budget) {
  if (label_text.empty()) throw InvalidParams("label text must be non-empty");
  budget.validate();

  const std::size_t sep_tokens = count_tokens(tmpl.separator);
  const std::string label_line =
      render(tmpl.label_line_format, "label", label_text);

  std::vector<std::string> parts;
  std::size_t used = count_tokens(label_line);
  if (!tmpl.task_description.empty()) {
    parts.push_back(tmpl.task_description);
    used += count_tokens(tmpl.task_description) + sep_tokens;
  }
  if (used > budget.max_tokens) {
    throw BudgetTooSmall("label line needs " + std::to_string(used) +
                         " tokens; budget is " +
                         std::to_string(budget.max_tokens));
  }

  GenerationPrompt out;
  for (const auto& ex : context) {
    std::string block = render(
        tmpl.example_block_format, "text",
        truncate_keep_last(ex.text, budget.per_example_truncation));
    const std::size_t cost = count_tokens(block) + sep_tokens;
    if (used + cost > budget.max_tokens) break;
    used += cost;
    parts.push_back(std::move(block));
    ++out.examples_included;
  }
  parts.push_back(label_line);
  out.text = join(parts, tmpl.separator);
  out.token_count = used;
  return out;
}

std::string inference_cue(const PromptTemplate& tmpl) {
  return rtrim(render(tmpl.inference_label_format, "label", ""));
}

std::string build_inference_prompt(const PromptTemplate& tmpl,
                                   std::span<const Example> few_shot,
                                   std::string_view query_text,
                                   const LabelText& label_text) {
  std::vector<std::string> parts;
  if (!tmpl.task_description.empty()) parts.push_back(tmpl.task_description);
  for (const auto& ex : few_shot) {
    if (!ex.label) {
      throw MissingLabel("few-shot example '" + ex.source_id +
                         "' has no label");
    }
    const std::string label = label_text
                                  ? label_text(*ex.label)
                                  : verbalize_label(tmpl.labels, *ex.label);
    parts.push_back(render(tmpl.example_block_format, "text", ex.text) + "\n" +
                    render(tmpl.inference_label_format, "label", label));
  }
  parts.push_back(render(tmpl.example_block_format, "text", query_text) + "\n" +
                  inference_cue(tmpl));
  return join(parts, tmpl.separator);
}

}  // namespace udg
