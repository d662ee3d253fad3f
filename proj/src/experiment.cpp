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

#include "udg/experiment.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "udg/parallel.hpp"

#ifndef UDG_FIXTURE_DIR
#define UDG_FIXTURE_DIR "fixtures"
#endif

namespace udg {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Reads one JSON object, tracking consumed keys so unknown ones can be
// reported with their full path.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where(), "expected an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_[key].is_null();
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return convert<T>(j_[key], key_path(key));
  }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(key_path(key), "is required");
    return convert<T>(j_[key], key_path(key));
  }

  Reader child(const std::string& key) {
    used_.insert(key);
    return Reader(j_.contains(key) ? j_[key] : empty(), key_path(key));
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_[key];
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(key_path(k), "unknown key");
    }
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }

  std::string where() const { return path_.empty() ? "<root>" : path_; }

  template <class T>
  static T convert(const json& v, const std::string& path) {
    try {
      if constexpr (std::is_same_v<T, std::size_t> ||
                    std::is_same_v<T, std::uint64_t> ||
                    std::is_same_v<T, std::uint32_t> || std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
        if constexpr (!std::is_same_v<T, int>) {
          if (v.get<std::int64_t>() < 0) {
            throw ConfigError(path, "must be non-negative");
          }
        }
        return v.get<T>();
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(path, "expected a number");
        return v.get<double>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
        return v.get<bool>();
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path, "expected a string");
        return v.get<std::string>();
      } else {
        return v.get<T>();
      }
    } catch (const json::exception& e) {
      throw ConfigError(path, e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key, what);
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FixtureError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spit(const fs::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FixtureError("cannot write " + path.string());
  out << data;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Writes artifacts plus config.json and manifest.json.
void write_outputs(const fs::path& out_dir, const std::string& command,
                   const ExperimentConfig& config,
                   const std::vector<std::pair<std::string, std::string>>& files) {
  fs::create_directories(out_dir);
  json outputs = json::object();
  for (const auto& [name, content] : files) {
    spit(out_dir / name, content);
    outputs[name] = hex64(fnv1a64(content));
  }
  const std::string cfg = dump(config_to_json(config));
  spit(out_dir / "config.json", cfg);
  json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = config.seed;
  manifest["config_hash"] = config_hash(config);
  manifest["backend"] =
      config.backend == BackendKind::kReference ? "reference" : "http";
  manifest["outputs"] = outputs;
  spit(out_dir / "manifest.json", dump(manifest));
}

std::string format_setting(SweepKind kind, const std::optional<double>& v) {
  if (!v) return "none";
  std::ostringstream os;
  if (kind == SweepKind::kMuFinal) {
    os << *v;
  } else {
    os << static_cast<long long>(*v);
  }
  return os.str();
}

PipelineSettings apply_setting(PipelineSettings s, SweepKind kind,
                               const std::optional<double>& v) {
  switch (kind) {
    case SweepKind::kKContext:
      s.generation.k_context = static_cast<std::size_t>(*v);
      break;
    case SweepKind::kNPerClass:
      s.generation.n_per_class = static_cast<std::size_t>(*v);
      break;
    case SweepKind::kMuFinal:
      s.nla.enabled = v.has_value();
      if (v) s.nla.mu_final = *v;
      break;
  }
  return s;
}

std::size_t count_removed_flipped(const UdgRun& run) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < run.training.removed.size(); ++i) {
    if (run.training.removed[i] && run.flipped[i]) ++n;
  }
  return n;
}

std::size_t count_true(const std::vector<bool>& v) {
  std::size_t n = 0;
  for (bool b : v) n += b;
  return n;
}

}  // namespace

const char* to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::kKContext: return "k_context";
    case SweepKind::kNPerClass: return "n_per_class";
    case SweepKind::kMuFinal: return "mu_final";
  }
  return "unknown";
}

std::vector<std::uint64_t> ExperimentConfig::sweep_seeds() const {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < num_seeds; ++i) out.push_back(seed + i);
  return out;
}

fs::path default_fixture_dir() {
  if (const char* env = std::getenv("UDG_FIXTURES"); env && *env) return env;
  return UDG_FIXTURE_DIR;
}

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  Reader root(j, "");
  const fs::path fixtures =
      root.has("fixtures_dir")
          ? resolve(base_dir, root.require<std::string>("fixtures_dir"))
          : default_fixture_dir();

  c.task = root.require<std::string>("task");
  c.template_path =
      root.has("template_path")
          ? resolve(base_dir, root.require<std::string>("template_path"))
          : fixtures / "templates" / (c.task + ".json");
  if (root.has("world")) {
    c.world = root.require<std::string>("world");
    c.world_path = fixtures / "worlds" / (*c.world + ".json");
  }
  if (root.has("pool_path")) {
    c.pool_path = resolve(base_dir, root.require<std::string>("pool_path"));
  }
  if (root.has("eval_path")) {
    c.eval_path = resolve(base_dir, root.require<std::string>("eval_path"));
  }
  if (root.has("labeled_path")) {
    c.labeled_path = resolve(base_dir, root.require<std::string>("labeled_path"));
  }

  const std::string backend = root.get<std::string>("backend", "reference");
  if (backend == "reference") {
    c.backend = BackendKind::kReference;
  } else if (backend == "http") {
    c.backend = BackendKind::kHttp;
  } else {
    throw ConfigError("backend", "must be 'reference' or 'http'");
  }
  c.seed = root.get<std::uint64_t>("seed", 1);
  c.num_seeds = root.get<std::size_t>("seeds", 5);
  check(c.num_seeds >= 1, "seeds", "must be >= 1");
  c.parallelism = root.get<std::size_t>("parallelism", 1);
  check(c.parallelism >= 1, "parallelism", "must be >= 1");

  // Loaded here so the default stop sequence can follow the template.
  const PromptTemplate tmpl = load_template(c.template_path);

  {
    Reader g = root.child("generation");
    auto& gen = c.pipeline.generation;
    gen.k_context = g.get<std::size_t>("k_context", gen.k_context);
    gen.n_per_class = g.get<std::size_t>("n_per_class", gen.n_per_class);
    check(gen.n_per_class >= 1, g.key_path("n_per_class"), "must be >= 1");
    gen.min_len = g.get<std::size_t>("min_len", gen.min_len);
    gen.max_len = g.get<std::size_t>("max_len", gen.max_len);
    check(gen.min_len < gen.max_len, g.key_path("min_len"),
          "must be < max_len");
    gen.budget.max_tokens =
        g.get<std::size_t>("max_prompt_tokens", gen.budget.max_tokens);
    gen.budget.per_example_truncation = g.get<std::size_t>(
        "per_example_truncation", gen.budget.per_example_truncation);
    check(gen.budget.per_example_truncation > 0,
          g.key_path("per_example_truncation"), "must be > 0");
    check(gen.budget.max_tokens >= gen.budget.per_example_truncation,
          g.key_path("max_prompt_tokens"),
          "must be >= per_example_truncation");
    gen.refill = g.get<bool>("refill", gen.refill);
    gen.max_refill_rounds =
        g.get<std::size_t>("max_refill_rounds", gen.max_refill_rounds);
    gen.parallelism = c.parallelism;

    Reader d = g.child("decoding");
    auto& dec = gen.decoding;
    dec.top_k = d.get<std::size_t>("top_k", dec.top_k);
    check(dec.top_k >= 1, d.key_path("top_k"), "must be >= 1");
    dec.temperature = d.get<double>("temperature", dec.temperature);
    check(dec.temperature > 0.0, d.key_path("temperature"), "must be > 0");
    dec.max_new_tokens = d.get<std::size_t>("max_new_tokens", dec.max_new_tokens);
    dec.min_new_tokens = d.get<std::size_t>("min_new_tokens", dec.min_new_tokens);
    check(dec.min_new_tokens <= dec.max_new_tokens, d.key_path("min_new_tokens"),
          "must be <= max_new_tokens");
    dec.stop_sequences = d.has("stop")
                             ? d.require<std::vector<std::string>>("stop")
                             : std::vector<std::string>{tmpl.separator};
    d.finish();
    g.finish();
  }

  {
    Reader t = root.child("training");
    auto& tp = c.pipeline.training;
    tp.epochs = t.get<std::size_t>("epochs", tp.epochs);
    check(tp.epochs >= 1, t.key_path("epochs"), "must be >= 1");
    tp.learning_rate = t.get<double>("learning_rate", tp.learning_rate);
    check(tp.learning_rate > 0.0, t.key_path("learning_rate"), "must be > 0");
    tp.batch_size = t.get<std::size_t>("batch_size", tp.batch_size);
    check(tp.batch_size >= 1, t.key_path("batch_size"), "must be >= 1");
    tp.l2 = t.get<double>("l2", tp.l2);
    check(tp.l2 >= 0.0 && tp.l2 * tp.learning_rate < 1.0, t.key_path("l2"),
          "must satisfy 0 <= l2 * learning_rate < 1");
    tp.revisit = t.get<bool>("revisit", tp.revisit);
    tp.parallelism = c.parallelism;
    c.pipeline.dims = t.get<std::uint32_t>("dims", c.pipeline.dims);
    check(c.pipeline.dims > 0 && (c.pipeline.dims & (c.pipeline.dims - 1)) == 0,
          t.key_path("dims"), "must be a power of two");
    c.pipeline.noise_rate = t.get<double>("noise_rate", 0.0);
    check(c.pipeline.noise_rate >= 0.0 && c.pipeline.noise_rate <= 1.0,
          t.key_path("noise_rate"), "must lie in [0, 1]");

    Reader n = t.child("nla");
    auto& nla = c.pipeline.nla;
    nla.enabled = n.get<bool>("enabled", nla.enabled);
    nla.mu_initial = n.get<double>("mu_initial", nla.mu_initial);
    check(nla.mu_initial > 0.0, n.key_path("mu_initial"), "must be > 0");
    if (n.has("mu_final")) {
      nla.mu_final = n.require<double>("mu_final");
      check(*nla.mu_final > 0.0 && *nla.mu_final <= nla.mu_initial,
            n.key_path("mu_final"), "must lie in (0, mu_initial]");
      check(*nla.mu_final >= 1.0 / tmpl.num_classes() - 1e-12,
            n.key_path("mu_final"), "must be >= 1 / number of classes");
    }
    const std::string shape = n.get<std::string>("shape", "linear");
    if (shape == "linear") {
      nla.shape = AnnealShape::kLinear;
    } else if (shape == "cosine") {
      nla.shape = AnnealShape::kCosine;
    } else {
      throw ConfigError(n.key_path("shape"), "must be 'linear' or 'cosine'");
    }
    n.finish();
    t.finish();
  }

  {
    Reader i = root.child("inference");
    c.inference.k_shots = i.get<std::size_t>("k_shots", c.inference.k_shots);
    c.inference.length_normalize =
        i.get<bool>("length_normalize", c.inference.length_normalize);
    if (i.has("verbalizations")) {
      c.inference.label_verbalizations =
          i.require<std::vector<std::string>>("verbalizations");
      try {
        c.inference.validate(tmpl.num_classes());
      } catch (const InvalidParams& e) {
        throw ConfigError(i.key_path("verbalizations"), e.what());
      }
    }
    i.finish();
  }

  {
    Reader r = root.child("reference_lm");
    auto& o = c.reference_lm;
    o.cache_alpha = r.get<double>("cache_alpha", o.cache_alpha);
    check(o.cache_alpha > 0.0, r.key_path("cache_alpha"), "must be > 0");
    o.class_weight = r.get<double>("class_weight", o.class_weight);
    check(o.class_weight >= 0.0 && o.class_weight < 1.0,
          r.key_path("class_weight"), "must lie in [0, 1)");
    o.backoff_strength = r.get<double>("backoff_strength", o.backoff_strength);
    check(o.backoff_strength > 0.0, r.key_path("backoff_strength"),
          "must be > 0");
    o.segment_separator = tmpl.separator;
    r.finish();
  }

  {
    Reader h = root.child("http");
    c.http.attempts = h.get<int>("attempts", c.http.attempts);
    check(c.http.attempts >= 1, h.key_path("attempts"), "must be >= 1");
    c.http.initial_backoff = std::chrono::milliseconds(h.get<std::uint64_t>(
        "initial_backoff_ms",
        static_cast<std::uint64_t>(c.http.initial_backoff.count())));
    c.http.max_in_flight = h.get<int>("max_in_flight", c.http.max_in_flight);
    check(c.http.max_in_flight >= 1, h.key_path("max_in_flight"),
          "must be >= 1");
    c.http.timeout = std::chrono::seconds(h.get<std::uint64_t>(
        "timeout_s", static_cast<std::uint64_t>(c.http.timeout.count())));
    h.finish();
  }

  if (root.has("ablation")) {
    Reader a = root.child("ablation");
    SweepSpec spec;
    int kinds = 0;
    for (SweepKind kind : {SweepKind::kKContext, SweepKind::kNPerClass,
                           SweepKind::kMuFinal}) {
      const std::string key = to_string(kind);
      if (!a.has(key)) continue;
      ++kinds;
      spec.kind = kind;
      const json& list = a.raw(key);
      const std::string path = a.key_path(key);
      check(list.is_array() && !list.empty(), path, "must be a non-empty list");
      for (std::size_t idx = 0; idx < list.size(); ++idx) {
        const json& v = list[idx];
        const std::string item = path + "[" + std::to_string(idx) + "]";
        if (kind == SweepKind::kMuFinal &&
            (v.is_null() || (v.is_string() && v.get<std::string>() == "none"))) {
          spec.values.push_back(std::nullopt);
          continue;
        }
        if (kind == SweepKind::kMuFinal) {
          check(v.is_number(), item, "expected a number, null or \"none\"");
          const double mu = v.get<double>();
          check(mu > 0.0 && mu <= c.pipeline.nla.mu_initial, item,
                "must lie in (0, mu_initial]");
          check(mu >= 1.0 / tmpl.num_classes() - 1e-12, item,
                "must be >= 1 / number of classes");
          spec.values.push_back(mu);
        } else {
          check(v.is_number_integer() && v.get<std::int64_t>() >= 0, item,
                "expected a non-negative integer");
          check(kind != SweepKind::kNPerClass || v.get<std::int64_t>() >= 1,
                item, "must be >= 1");
          spec.values.push_back(static_cast<double>(v.get<std::int64_t>()));
        }
      }
    }
    check(kinds == 1, "ablation",
          "needs exactly one of k_context, n_per_class, mu_final");
    a.finish();
    c.ablation = std::move(spec);
  }
  root.finish();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(slurp(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path().empty() ? fs::path(".")
                                                    : path.parent_path());
}

json config_to_json(const ExperimentConfig& c) {
  const auto& g = c.pipeline.generation;
  const auto& t = c.pipeline.training;
  const auto& n = c.pipeline.nla;
  json j;
  j["task"] = c.task;
  j["template_path"] = c.template_path.string();
  if (c.world) j["world"] = *c.world;
  if (c.pool_path) j["pool_path"] = c.pool_path->string();
  if (c.eval_path) j["eval_path"] = c.eval_path->string();
  if (c.labeled_path) j["labeled_path"] = c.labeled_path->string();
  j["backend"] = c.backend == BackendKind::kReference ? "reference" : "http";
  j["seed"] = c.seed;
  j["seeds"] = c.num_seeds;
  j["generation"] = {
      {"k_context", g.k_context},
      {"n_per_class", g.n_per_class},
      {"min_len", g.min_len},
      {"max_len", g.max_len},
      {"max_prompt_tokens", g.budget.max_tokens},
      {"per_example_truncation", g.budget.per_example_truncation},
      {"refill", g.refill},
      {"max_refill_rounds", g.max_refill_rounds},
      {"decoding",
       {{"top_k", g.decoding.top_k},
        {"temperature", g.decoding.temperature},
        {"max_new_tokens", g.decoding.max_new_tokens},
        {"min_new_tokens", g.decoding.min_new_tokens},
        {"stop", g.decoding.stop_sequences}}}};
  j["training"] = {
      {"epochs", t.epochs},
      {"learning_rate", t.learning_rate},
      {"batch_size", t.batch_size},
      {"l2", t.l2},
      {"dims", c.pipeline.dims},
      {"noise_rate", c.pipeline.noise_rate},
      {"revisit", t.revisit},
      {"nla",
       {{"enabled", n.enabled},
        {"mu_initial", n.mu_initial},
        {"mu_final", n.mu_final ? json(*n.mu_final) : json(nullptr)},
        {"shape", n.shape == AnnealShape::kLinear ? "linear" : "cosine"}}}};
  j["inference"] = {{"k_shots", c.inference.k_shots},
                    {"length_normalize", c.inference.length_normalize},
                    {"verbalizations", c.inference.label_verbalizations}};
  j["reference_lm"] = {{"cache_alpha", c.reference_lm.cache_alpha},
                       {"class_weight", c.reference_lm.class_weight},
                       {"backoff_strength", c.reference_lm.backoff_strength}};
  j["http"] = {{"attempts", c.http.attempts},
               {"initial_backoff_ms", c.http.initial_backoff.count()},
               {"max_in_flight", c.http.max_in_flight},
               {"timeout_s", c.http.timeout.count()}};
  if (c.ablation) {
    json values = json::array();
    for (const auto& v : c.ablation->values) {
      values.push_back(v ? json(*v) : json(nullptr));
    }
    j["ablation"] = {{to_string(c.ablation->kind), values}};
  }
  // parallelism is deliberately excluded: outputs must not depend on it.
  return j;
}

std::string config_hash(const ExperimentConfig& config) {
  return hex64(fnv1a64(config_to_json(config).dump()));
}

Workspace open_workspace(const ExperimentConfig& config) {
  Workspace ws;
  ws.tmpl = load_template(config.template_path);
  if (config.world) ws.world = ToyWorld::load(config.world_path);

  if (config.backend == BackendKind::kReference) {
    if (!ws.world) {
      throw FixtureError("the reference backend needs a toy world ('world')");
    }
    ws.backend = std::make_unique<ReferenceLm>(
        ws.world->build_reference_lm(ws.tmpl, config.reference_lm));
  } else {
    ws.backend = HttpLm::from_env(config.http);
  }

  if (config.pool_path) {
    ws.pool = read_examples(*config.pool_path);
    for (auto& ex : ws.pool) ex.label.reset();
  } else if (ws.world) {
    ws.pool = ws.world->unlabeled_pool();
  }
  if (config.eval_path) {
    ws.eval = read_examples(*config.eval_path);
  } else if (ws.world) {
    ws.eval = ws.world->eval_set();
  }
  if (config.labeled_path) {
    ws.labeled = read_examples(*config.labeled_path);
  } else if (ws.world) {
    ws.labeled = ws.world->labeled_pool();
  }
  return ws;
}

// ---------------------------------------------------------------------------

void cmd_generate(const ExperimentConfig& config, const fs::path& out_dir) {
  const Workspace ws = open_workspace(config);
  GenerationConfig gen = config.pipeline.generation;
  gen.seed = derive_seed(config.seed, {1});
  const GenerationResult result =
      generate_dataset(gen, ws.tmpl, ws.pool, *ws.backend);

  json stats;
  stats["attempted"] = result.stats.attempted;
  stats["kept"] = result.stats.kept;
  stats["failed"] = result.stats.failed;
  stats["dropped"] = {{"too_short", result.stats.too_short},
                      {"too_long", result.stats.too_long},
                      {"duplicate", result.stats.duplicate}};
  stats["kept_per_class"] = result.stats.kept_per_class;
  write_outputs(out_dir, "generate", config,
                {{"dataset.jsonl", dataset_to_jsonl(result.examples)},
                 {"generation_stats.json", dump(stats)}});
}

void cmd_train(const ExperimentConfig& config, const fs::path& dataset,
               const fs::path& out_dir) {
  const Workspace ws = open_workspace(config);
  std::vector<SyntheticExample> data = read_dataset(dataset);
  if (data.empty()) throw FixtureError("dataset " + dataset.string() + " is empty");
  const int num_classes = static_cast<int>(ws.tmpl.num_classes());
  for (const auto& ex : data) {
    if (ex.pseudo_label < 0 || ex.pseudo_label >= num_classes) {
      throw FixtureError("dataset label " + std::to_string(ex.pseudo_label) +
                         " is outside the task's classes");
    }
  }
  Rng noise_rng(derive_seed(config.seed, {2}));
  auto flipped = inject_label_noise(data, config.pipeline.noise_rate,
                                    num_classes, noise_rng);
  UdgRun run = train_on_dataset(std::move(data), num_classes, ws.eval,
                                config.pipeline, config.seed);
  run.flipped = std::move(flipped);

  json metrics;
  metrics["eval_accuracy"] = ws.eval.empty() ? json(nullptr) : json(run.accuracy);
  metrics["eval_size"] = ws.eval.size();
  metrics["train_size"] = run.generation.examples.size();
  metrics["final_active_size"] = run.training.final_active_size;
  metrics["removed"] = count_true(run.training.removed);
  metrics["injected_flips"] = count_true(run.flipped);
  metrics["removed_flipped"] = count_removed_flipped(run);
  write_outputs(out_dir, "train", config,
                {{"model.json", checkpoint_json(run.model).dump() + "\n"},
                 {"training_report.jsonl", report_to_jsonl(run.training)},
                 {"removals.jsonl", removals_to_jsonl(run.training)},
                 {"metrics.json", dump(metrics)}});
}

void cmd_infer(const ExperimentConfig& config, const fs::path& input,
               const std::optional<fs::path>& checkpoint,
               const fs::path& out_dir) {
  const std::vector<Example> queries = read_examples(input);
  std::string predictions;
  std::size_t labeled = 0;
  std::size_t hits = 0;
  auto record = [&](const Example& q, int label, const std::vector<double>& s,
                    const char* field) {
    json j;
    j["id"] = q.source_id;
    j["label"] = label;
    j[field] = s;
    predictions += j.dump() + "\n";
    if (q.label) {
      ++labeled;
      hits += (*q.label == label);
    }
  };

  if (checkpoint) {
    const auto model = load_checkpoint<double>(*checkpoint);
    for (const auto& q : queries) {
      const auto p = predict_proba(model, featurize<double>(q.text, model.dims()));
      record(q, argmax(p), std::vector<double>(p.data(), p.data() + p.size()),
             "probs");
    }
  } else {
    const Workspace ws = open_workspace(config);
    std::vector<InferenceResult> results(queries.size());
    parallel_for(queries.size(), config.parallelism, [&](std::size_t i) {
      Rng rng(derive_seed(config.seed, {4, i}));
      const auto shots =
          sample_context(ws.labeled, config.inference.k_shots, rng);
      results[i] = infer_label(*ws.backend, ws.tmpl, shots, queries[i].text,
                               config.inference);
    });
    for (std::size_t i = 0; i < queries.size(); ++i) {
      record(queries[i], results[i].label, results[i].scores, "scores");
    }
  }
  json metrics;
  metrics["count"] = queries.size();
  metrics["mode"] = checkpoint ? "classifier" : "few_shot_inference";
  metrics["accuracy"] =
      labeled ? json(static_cast<double>(hits) / labeled) : json(nullptr);
  write_outputs(out_dir, "infer", config,
                {{"predictions.jsonl", predictions}, {"metrics.json", dump(metrics)}});
}

SweepReport run_sweep(const ExperimentConfig& config, const Workspace& ws) {
  if (!config.ablation) throw ConfigError("ablation", "is required for ablate");
  const SweepSpec& spec = *config.ablation;
  const auto seeds = config.sweep_seeds();

  SweepReport report;
  report.kind = spec.kind;
  report.records.resize(spec.values.size() * seeds.size());
  parallel_for(report.records.size(), config.parallelism, [&](std::size_t cell) {
    const auto& value = spec.values[cell / seeds.size()];
    const std::uint64_t seed = seeds[cell % seeds.size()];
    PipelineSettings s = apply_setting(config.pipeline, spec.kind, value);
    s.generation.parallelism = 1;
    s.training.parallelism = 1;
    const UdgRun run = run_udg(ws.tmpl, *ws.backend, ws.pool, ws.eval, s, seed);
    SweepRecord& r = report.records[cell];
    r.setting = format_setting(spec.kind, value);
    r.seed = seed;
    r.accuracy = run.accuracy;
    r.dataset_size = run.generation.examples.size();
    r.removed = count_true(run.training.removed);
    r.removed_flipped = count_removed_flipped(run);
  });

  for (std::size_t v = 0; v < spec.values.size(); ++v) {
    SweepSummary s;
    s.setting = format_setting(spec.kind, spec.values[v]);
    s.n = seeds.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      sum += report.records[v * seeds.size() + k].accuracy;
    }
    s.mean = sum / static_cast<double>(s.n);
    double sq = 0.0;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      const double d = report.records[v * seeds.size() + k].accuracy - s.mean;
      sq += d * d;
    }
    s.stddev = s.n > 1 ? std::sqrt(sq / static_cast<double>(s.n - 1)) : 0.0;
    report.summary.push_back(s);
  }
  return report;
}

json sweep_to_json(const SweepReport& report) {
  json j;
  j["sweep"] = to_string(report.kind);
  json records = json::array();
  for (const auto& r : report.records) {
    records.push_back({{"setting", r.setting},
                       {"seed", r.seed},
                       {"accuracy", r.accuracy},
                       {"dataset_size", r.dataset_size},
                       {"removed", r.removed},
                       {"removed_flipped", r.removed_flipped}});
  }
  j["records"] = records;
  json summary = json::array();
  for (const auto& s : report.summary) {
    summary.push_back({{"setting", s.setting},
                       {"mean_accuracy", s.mean},
                       {"stddev", s.stddev},
                       {"n", s.n}});
  }
  j["summary"] = summary;
  return j;
}

std::string sweep_to_table(const SweepReport& report) {
  std::ostringstream os;
  os << to_string(report.kind) << " sweep\n";
  os << "setting      mean_acc   stddev   seeds\n";
  for (const auto& s : report.summary) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-12s %8.2f %8.2f %7zu\n",
                  s.setting.c_str(), 100.0 * s.mean, 100.0 * s.stddev, s.n);
    os << line;
  }
  return os.str();
}

SweepReport cmd_ablate(const ExperimentConfig& config, const fs::path& out_dir) {
  const Workspace ws = open_workspace(config);
  SweepReport report = run_sweep(config, ws);
  write_outputs(out_dir, "ablate", config,
                {{"ablation_report.json", dump(sweep_to_json(report))},
                 {"ablation_report.txt", sweep_to_table(report)}});
  return report;
}

ParadigmReport run_compare(const ExperimentConfig& config, const Workspace& ws) {
  const auto seeds = config.sweep_seeds();
  ParadigmReport report;
  report.per_seed.resize(seeds.size());
  const ParadigmInputs inputs{ws.tmpl, *ws.backend, ws.pool, ws.labeled, ws.eval};
  parallel_for(seeds.size(), config.parallelism, [&](std::size_t i) {
    PipelineSettings s = config.pipeline;
    s.generation.parallelism = 1;
    s.training.parallelism = 1;
    report.per_seed[i] = evaluate_paradigms(inputs, s, config.inference, seeds[i]);
  });
  for (const auto& r : report.per_seed) {
    report.few_shot += r.few_shot;
    report.udg += r.udg;
    report.udg_nla += r.udg_nla;
  }
  const double n = static_cast<double>(seeds.size());
  report.few_shot /= n;
  report.udg /= n;
  report.udg_nla /= n;
  report.n = ws.eval.size();
  return report;
}

json paradigms_to_json(const ParadigmReport& report, std::uint64_t base_seed) {
  auto entry = [&](double mean, auto field) {
    json per_seed = json::array();
    for (const auto& r : report.per_seed) {
      per_seed.push_back({{"seed", r.seed}, {"accuracy", field(r)}});
    }
    return json{{"accuracy", mean},
                {"n", report.n},
                {"seed", base_seed},
                {"per_seed", per_seed}};
  };
  json j;
  j["few_shot_inference"] =
      entry(report.few_shot, [](const ParadigmResult& r) { return r.few_shot; });
  j["udg"] = entry(report.udg, [](const ParadigmResult& r) { return r.udg; });
  j["udg_nla"] =
      entry(report.udg_nla, [](const ParadigmResult& r) { return r.udg_nla; });
  return j;
}

std::string paradigms_to_table(const ParadigmReport& report) {
  std::ostringstream os;
  char line[96];
  os << "paradigm              accuracy   n\n";
  std::snprintf(line, sizeof(line), "%-20s %9.2f %5zu\n", "few-shot inference",
                100.0 * report.few_shot, report.n);
  os << line;
  std::snprintf(line, sizeof(line), "%-20s %9.2f %5zu\n", "UDG",
                100.0 * report.udg, report.n);
  os << line;
  std::snprintf(line, sizeof(line), "%-20s %9.2f %5zu\n", "UDG + NLA",
                100.0 * report.udg_nla, report.n);
  os << line;
  return os.str();
}

ParadigmReport cmd_compare(const ExperimentConfig& config,
                           const fs::path& out_dir) {
  const Workspace ws = open_workspace(config);
  ParadigmReport report = run_compare(config, ws);
  write_outputs(out_dir, "compare", config,
                {{"paradigm_report.json", dump(paradigms_to_json(report, config.seed))},
                 {"paradigm_report.txt", paradigms_to_table(report)}});
  return report;
}

}  // namespace udg
