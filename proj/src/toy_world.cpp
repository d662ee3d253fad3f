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

#include "udg/toy_world.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace udg {
namespace {

using json = nlohmann::json;

constexpr std::array<const char*, kNumRoles> kRoleNames = {
    "neutral",      "offdomain",    "own_shared", "own_domain", "other_shared",
    "other_domain", "any_shared",   "any_domain", "end"};

int role_index(const std::string& name) {
  for (int i = 0; i < kNumRoles; ++i) {
    if (name == kRoleNames[i]) return i;
  }
  throw FixtureError("unknown role '" + name + "'");
}

RoleChain parse_chain(const json& j, const std::string& what) {
  RoleChain chain;
  for (const auto& [row_name, row] : j.items()) {
    const int r = row_name == "start" ? kStartRow : role_index(row_name);
    if (r == static_cast<int>(Role::kEnd)) {
      throw FixtureError(what + ": 'end' has no outgoing transitions");
    }
    double total = 0.0;
    for (const auto& [col_name, value] : row.items()) {
      const double v = value.get<double>();
      if (v < 0.0) throw FixtureError(what + ": negative probability");
      chain.p[r][role_index(col_name)] = v;
      total += v;
    }
    if (!(total > 0.0)) throw FixtureError(what + ": empty row " + row_name);
    for (double& v : chain.p[r]) v /= total;
  }
  double start = 0.0;
  for (double v : chain.p[kStartRow]) start += v;
  if (!(start > 0.0)) throw FixtureError(what + ": missing start row");
  return chain;
}

int draw_role(const std::array<double, kNumRoles>& row, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last = static_cast<int>(Role::kEnd);
  for (int i = 0; i < kNumRoles; ++i) {
    if (row[i] <= 0.0) continue;
    acc += row[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

bool uses(const RoleChain& chain, Role role) {
  for (const auto& row : chain.p) {
    if (row[static_cast<int>(role)] > 0.0) return true;
  }
  return false;
}

}  // namespace

ToyWorld ToyWorld::parse(std::string_view json_text) {
  ToyWorld w;
  try {
    const json j = json::parse(json_text);
    w.name_ = j.at("name").get<std::string>();
    w.data_seed_ = j.value("data_seed", std::uint64_t{1});
    w.lm_seed_ = j.value("lm_seed", std::uint64_t{2});
    if (j.contains("sizes")) {
      const auto& s = j["sizes"];
      w.sizes_.eval = s.value("eval", w.sizes_.eval);
      w.sizes_.unlabeled_pool = s.value("unlabeled_pool", w.sizes_.unlabeled_pool);
      w.sizes_.labeled_pool = s.value("labeled_pool", w.sizes_.labeled_pool);
      w.sizes_.generic_corpus = s.value("generic_corpus", w.sizes_.generic_corpus);
      w.sizes_.class_corpus = s.value("class_corpus", w.sizes_.class_corpus);
      w.sizes_.max_doc_tokens = s.value("max_doc_tokens", w.sizes_.max_doc_tokens);
    }
    const auto& words = j.at("words");
    w.neutral_ = words.at("neutral").get<std::vector<std::string>>();
    w.offdomain_ = words.at("offdomain").get<std::vector<std::string>>();
    for (const auto& c : words.at("classes")) {
      w.shared_.push_back(c.at("shared").get<std::vector<std::string>>());
      w.domain_.push_back(c.at("domain").get<std::vector<std::string>>());
    }
    const auto& chains = j.at("chains");
    w.document_ = parse_chain(chains.at("document"), "document chain");
    w.generic_ = parse_chain(chains.at("generic"), "generic chain");
    w.class_ = parse_chain(chains.at("class"), "class chain");
  } catch (const json::exception& e) {
    throw FixtureError(std::string("malformed world: ") + e.what());
  }

  if (w.shared_.empty()) throw FixtureError("world has no classes");
  if (w.neutral_.empty() || w.offdomain_.empty()) {
    throw FixtureError("world needs neutral and offdomain words");
  }
  auto add = [&](const std::string& word, Role cat, int owner) {
    if (word.empty() || to_lower_ascii(word) != word ||
        count_tokens(word) != 1) {
      throw FixtureError("world words must be single lowercase tokens: '" +
                         word + "'");
    }
    if (!w.words_.emplace(word, WordInfo{cat, owner}).second) {
      throw FixtureError("word '" + word + "' appears in two categories");
    }
  };
  for (const auto& s : w.neutral_) add(s, Role::kNeutral, -1);
  for (const auto& s : w.offdomain_) add(s, Role::kOffdomain, -1);
  for (int c = 0; c < w.num_classes(); ++c) {
    if (w.shared_[c].empty() || w.domain_[c].empty()) {
      throw FixtureError("every class needs shared and domain words");
    }
    for (const auto& s : w.shared_[c]) add(s, Role::kAnyShared, c);
    for (const auto& s : w.domain_[c]) add(s, Role::kAnyDomain, c);
  }
  // Roles are recoverable from words only without the any_* roles.
  if (uses(w.document_, Role::kAnyShared) || uses(w.document_, Role::kAnyDomain)) {
    throw FixtureError("document chain may not use any_shared/any_domain");
  }
  if (w.num_classes() == 1 &&
      (uses(w.document_, Role::kOtherShared) ||
       uses(w.document_, Role::kOtherDomain) ||
       uses(w.class_, Role::kOtherShared) || uses(w.class_, Role::kOtherDomain))) {
    throw FixtureError("single-class world cannot use other_* roles");
  }
  return w;
}

ToyWorld ToyWorld::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot open world " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<std::string> ToyWorld::vocabulary() const {
  std::vector<std::string> out(neutral_);
  out.insert(out.end(), offdomain_.begin(), offdomain_.end());
  for (int c = 0; c < num_classes(); ++c) {
    out.insert(out.end(), shared_[c].begin(), shared_[c].end());
    out.insert(out.end(), domain_[c].begin(), domain_[c].end());
  }
  return out;
}

const std::string& ToyWorld::emit(Role role, ClassId label, Rng& rng) const {
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
    return v[uniform_index(rng, v.size())];
  };
  auto other = [&]() {
    const auto k = static_cast<int>(uniform_index(rng, num_classes() - 1));
    return k < label ? k : k + 1;
  };
  switch (role) {
    case Role::kNeutral: return pick(neutral_);
    case Role::kOffdomain: return pick(offdomain_);
    case Role::kOwnShared: return pick(shared_[label]);
    case Role::kOwnDomain: return pick(domain_[label]);
    case Role::kOtherShared: return pick(shared_[other()]);
    case Role::kOtherDomain: return pick(domain_[other()]);
    case Role::kAnyShared:
      return pick(shared_[uniform_index(rng, num_classes())]);
    case Role::kAnyDomain:
      return pick(domain_[uniform_index(rng, num_classes())]);
    case Role::kEnd: break;
  }
  throw FixtureError("cannot emit a word for the end role");
}

TokenDoc ToyWorld::sample_chain(const RoleChain& chain, ClassId label,
                                Rng& rng) const {
  TokenDoc doc;
  int role = draw_role(chain.p[kStartRow], rng);
  while (role != static_cast<int>(Role::kEnd)) {
    doc.push_back(emit(static_cast<Role>(role), label, rng));
    if (doc.size() >= sizes_.max_doc_tokens) break;
    role = draw_role(chain.p[role], rng);
  }
  return doc;
}

TokenDoc ToyWorld::sample_document(ClassId label, Rng& rng) const {
  return sample_chain(document_, label, rng);
}

std::vector<Example> ToyWorld::sample_split(std::uint64_t split, std::size_t n,
                                            bool keep_labels) const {
  static constexpr const char* kSplitNames[] = {"", "eval", "pool", "shot"};
  std::vector<Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<ClassId>(i % num_classes());
    Rng rng(derive_seed(data_seed_, {split, i}));
    TokenDoc doc;
    // Empty documents are not valid examples; redraw from the same stream.
    while (doc.empty()) doc = sample_document(label, rng);
    Example ex;
    ex.text = join(doc, " ");
    if (keep_labels) ex.label = label;
    ex.source_id = std::string(kSplitNames[split]) + "-" + std::to_string(i);
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> ToyWorld::eval_set() const {
  return sample_split(1, sizes_.eval, true);
}

std::vector<Example> ToyWorld::unlabeled_pool() const {
  return sample_split(2, sizes_.unlabeled_pool, false);
}

std::vector<Example> ToyWorld::labeled_pool() const {
  return sample_split(3, sizes_.labeled_pool, true);
}

double ToyWorld::log_likelihood(std::span<const std::string> doc,
                                ClassId label) const {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const int c = num_classes();
  int prev = kStartRow;
  double lp = 0.0;
  for (const auto& word : doc) {
    const auto it = words_.find(word);
    if (it == words_.end()) return kNegInf;
    const WordInfo& info = it->second;
    Role role;
    double emission;
    switch (info.category) {
      case Role::kNeutral:
        role = Role::kNeutral;
        emission = 1.0 / neutral_.size();
        break;
      case Role::kOffdomain:
        role = Role::kOffdomain;
        emission = 1.0 / offdomain_.size();
        break;
      case Role::kAnyShared:
        role = info.owner == label ? Role::kOwnShared : Role::kOtherShared;
        emission = 1.0 / shared_[info.owner].size();
        if (info.owner != label) emission /= (c - 1);
        break;
      default:
        role = info.owner == label ? Role::kOwnDomain : Role::kOtherDomain;
        emission = 1.0 / domain_[info.owner].size();
        if (info.owner != label) emission /= (c - 1);
        break;
    }
    const double t = document_.p[prev][static_cast<int>(role)];
    if (t <= 0.0) return kNegInf;
    lp += std::log(t) + std::log(emission);
    prev = static_cast<int>(role);
  }
  if (doc.size() < sizes_.max_doc_tokens) {
    const double t = document_.p[prev][static_cast<int>(Role::kEnd)];
    if (t <= 0.0) return kNegInf;
    lp += std::log(t);
  }
  return lp;
}

ClassId ToyWorld::bayes_label(std::string_view text) const {
  std::vector<std::string> doc;
  for (auto tok : split_whitespace(text)) doc.push_back(to_lower_ascii(tok));
  ClassId best = 0;
  double best_lp = log_likelihood(doc, 0);
  for (ClassId c = 1; c < num_classes(); ++c) {
    const double lp = log_likelihood(doc, c);
    if (lp > best_lp) {
      best_lp = lp;
      best = c;
    }
  }
  return best;
}

ReferenceLm ToyWorld::build_reference_lm(
    const PromptTemplate& tmpl, const ReferenceLmOptions& options) const {
  if (static_cast<int>(tmpl.num_classes()) != num_classes()) {
    throw FixtureError("template '" + tmpl.id + "' has " +
                       std::to_string(tmpl.num_classes()) +
                       " labels; world has " + std::to_string(num_classes()));
  }
  std::vector<TokenDoc> generic;
  generic.reserve(sizes_.generic_corpus);
  for (std::size_t i = 0; i < sizes_.generic_corpus; ++i) {
    Rng rng(derive_seed(lm_seed_, {0, i}));
    generic.push_back(
        sample_chain(generic_, static_cast<ClassId>(i % num_classes()), rng));
  }
  std::vector<std::vector<TokenDoc>> per_class(num_classes());
  for (int c = 0; c < num_classes(); ++c) {
    for (std::size_t i = 0; i < sizes_.class_corpus; ++i) {
      Rng rng(derive_seed(lm_seed_, {1, static_cast<std::uint64_t>(c), i}));
      per_class[c].push_back(sample_chain(class_, c, rng));
    }
  }
  std::vector<ReferenceLm::Keyword> keywords;
  for (const auto& d : tmpl.labels) keywords.push_back({d.description, d.class_id});
  return ReferenceLm(vocabulary(), generic, per_class, std::move(keywords),
                     options);
}

}  // namespace udg
