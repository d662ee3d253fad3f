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

// Prompt assembly for few-shot generation ([task, unlabeled examples, label
// description]) and few-shot inference ([task, labeled examples, query]).
//
// All functions here are pure; templates are loaded from JSON data files so
// new tasks need no code.

#ifndef UDG_PROMPT_HPP_
#define UDG_PROMPT_HPP_

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "udg/common.hpp"

namespace udg {

struct LabelDescriptor {
  ClassId class_id = 0;
  std::string description;
  // Word scored as the label during few-shot inference. Empty means the
  // description itself is used.
  std::string verbalizer;
};

struct PromptTemplate {
  std::string id;
  std::string task_description;
  std::string example_block_format;  // binds {text}
  std::string label_line_format;     // binds {label}
  std::string separator = "\n\n";
  std::string inference_label_format = "Label: {label}";  // binds {label}
  std::vector<LabelDescriptor> labels;

  std::size_t num_classes() const { return labels.size(); }
};

struct Example {
  std::string text;
  std::optional<ClassId> label;
  std::string source_id;
};

struct PromptBudget {
  std::size_t max_tokens = 2048;
  std::size_t per_example_truncation = 512;

  void validate() const;
};

/// Checks placeholders and label descriptors; throws TemplateError.
void validate_template(const PromptTemplate& tmpl);

PromptTemplate parse_template(std::string_view json_text, std::string id = {});
PromptTemplate load_template(const std::filesystem::path& path);

/// Draws min(k, |pool|) distinct examples uniformly without replacement.
std::vector<Example> sample_context(std::span<const Example> pool,
                                    std::size_t k, Rng& rng);

const std::string& describe_label(std::span<const LabelDescriptor> descriptors,
                                  ClassId class_id);

/// Text scored for `class_id` during inference (verbalizer or description).
const std::string& verbalize_label(std::span<const LabelDescriptor> descriptors,
                                   ClassId class_id);

/// Keeps the last `max_tokens` whitespace tokens. Text that already fits is
/// returned unchanged; truncated text is re-joined with single spaces.
std::string truncate_keep_last(std::string_view text, std::size_t max_tokens);

/// Result of packing examples into a generation prompt.
struct GenerationPrompt {
  std::string text;
  std::size_t examples_included = 0;
  std::size_t token_count = 0;
};

GenerationPrompt pack_generation_prompt(const PromptTemplate& tmpl,
                                        std::span<const Example> context,
                                        std::string_view label_text,
                                        const PromptBudget& budget);

inline std::string build_generation_prompt(const PromptTemplate& tmpl,
                                           std::span<const Example> context,
                                           std::string_view label_text,
                                           const PromptBudget& budget) {
  return pack_generation_prompt(tmpl, context, label_text, budget).text;
}

using LabelText = std::function<std::string(ClassId)>;

/// Inference prompt: each labeled example as (input, label) block, then the
/// query block ending in an empty label cue. `label_text` defaults to the
/// template's verbalizers (descriptions where none is set).
std::string build_inference_prompt(const PromptTemplate& tmpl,
                                   std::span<const Example> few_shot,
                                   std::string_view query_text,
                                   const LabelText& label_text = {});

/// The dangling label cue that closes an inference prompt.
std::string inference_cue(const PromptTemplate& tmpl);

}  // namespace udg

#endif  // UDG_PROMPT_HPP_
