// Copyright 2026 The cdnrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cdnrec/app/experiment.hpp>

#include <cdnrec/data/loaders.hpp>
#include <cdnrec/errors.hpp>

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <ostream>

namespace cdnrec::app {

using nlohmann::json;

namespace {

void check_object(const json& j, const std::string& where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) fail(ErrorCategory::Config, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (std::string_view a : allowed) ok = ok || key == a;
    if (!ok) fail(ErrorCategory::Config, "unknown key '" + where + "." + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail(ErrorCategory::Config, where + "." + key + " has the wrong type");
  }
}

void read_path(const json& j, const char* key, std::filesystem::path& out, const std::string& where) {
  std::string s;
  read(j, key, s, where);
  if (!s.empty()) out = s;
}

model::FeatureGroup parse_group(const std::string& s) {
  if (s == "memorization") return model::FeatureGroup::Memorization;
  if (s == "generalization") return model::FeatureGroup::Generalization;
  if (s == "all") return model::FeatureGroup::All;
  fail(ErrorCategory::Config, "unknown expert feature group '" + s + "'");
}

std::string_view group_name(model::FeatureGroup g) {
  switch (g) {
    case model::FeatureGroup::Memorization: return "memorization";
    case model::FeatureGroup::Generalization: return "generalization";
    case model::FeatureGroup::All: return "all";
  }
  return "all";
}

void parse_dataset(const json& j, DatasetSpec& d) {
  check_object(j, "dataset", {"source", "ratings", "items", "head_fraction", "split", "seed", "synthetic", "cache_dir"});
  read(j, "source", d.source, "dataset");
  read_path(j, "ratings", d.ratings, "dataset");
  read_path(j, "items", d.items, "dataset");
  double hf = 0.0;
  if (j.contains("head_fraction") && !j["head_fraction"].is_null()) {
    read(j, "head_fraction", hf, "dataset");
    d.head_fraction = hf;
  }
  read(j, "seed", d.seed, "dataset");
  read_path(j, "cache_dir", d.cache_dir, "dataset");
  if (j.contains("split")) {
    const json& s = j["split"];
    check_object(s, "dataset.split", {"train", "valid", "test"});
    read(s, "train", d.split.train, "dataset.split");
    read(s, "valid", d.split.valid, "dataset.split");
    read(s, "test", d.split.test, "dataset.split");
  }
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    check_object(s, "dataset.synthetic", {"n_users", "n_items", "exponent", "n_events", "n_genres", "seed",
                                          "genre_preference", "affinity", "latent_dim"});
    auto& z = d.synthetic;
    const std::string w = "dataset.synthetic";
    read(s, "n_users", z.n_users, w);
    read(s, "n_items", z.n_items, w);
    read(s, "exponent", z.exponent, w);
    read(s, "n_events", z.n_events, w);
    read(s, "n_genres", z.n_genres, w);
    read(s, "seed", z.seed, w);
    read(s, "genre_preference", z.genre_preference, w);
    read(s, "affinity", z.affinity, w);
    read(s, "latent_dim", z.latent_dim, w);
  }
}

void parse_model(const json& j, model::ModelConfig& m) {
  check_object(j, "model", {"item", "user", "output_dim"});
  Index out = m.item.output_dim;
  read(j, "output_dim", out, "model");
  m.item.output_dim = out;
  m.user.output_dim = out;
  if (j.contains("item")) {
    const json& i = j["item"];
    check_object(i, "model.item", {"experts", "expert_hidden_dims", "id_dim", "feature_dim", "freq_buckets"});
    if (i.contains("experts")) {
      std::vector<std::string> names;
      read(i, "experts", names, "model.item");
      m.item.experts.clear();
      for (const auto& n : names) m.item.experts.push_back(parse_group(n));
    }
    read(i, "expert_hidden_dims", m.item.expert_hidden_dims, "model.item");
    read(i, "id_dim", m.item.id_dim, "model.item");
    read(i, "feature_dim", m.item.feature_dim, "model.item");
    read(i, "freq_buckets", m.item.freq_buckets, "model.item");
  }
  if (j.contains("user")) {
    const json& u = j["user"];
    check_object(u, "model.user", {"embedding_dim", "shared_dims", "branch_hidden"});
    read(u, "embedding_dim", m.user.embedding_dim, "model.user");
    read(u, "shared_dims", m.user.shared_dims, "model.user");
    read(u, "branch_hidden", m.user.branch_hidden, "model.user");
  }
}

void parse_method(const json& j, baselines::MethodConfig& m) {
  check_object(j, "method", {"name", "beta", "gamma", "fixed_alpha", "stage2_epochs", "design", "logq_at_inference"});
  std::string name = std::string(baselines::to_string(m.method));
  read(j, "name", name, "method");
  m.method = baselines::parse_method(name);
  read(j, "beta", m.beta, "method");
  read(j, "gamma", m.gamma, "method");
  read(j, "fixed_alpha", m.fixed_alpha, "method");
  if (j.contains("stage2_epochs") && !j["stage2_epochs"].is_null()) {
    int s = 0;
    read(j, "stage2_epochs", s, "method");
    m.stage2_epochs = s;
  }
  std::string design = std::string(baselines::to_string(m.design));
  read(j, "design", design, "method");
  m.design = baselines::parse_expert_design(design);
  read(j, "logq_at_inference", m.logq_at_inference, "method");
}

void parse_train(const json& j, train::TrainConfig& t) {
  check_object(j, "train", {"batch_size", "epochs", "optimizer", "learning_rate", "beta1", "beta2", "epsilon", "seed",
                            "eval_every"});
  read(j, "batch_size", t.batch_size, "train");
  read(j, "epochs", t.epochs, "train");
  std::string opt = t.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
  read(j, "optimizer", opt, "train");
  if (opt == "adam") {
    t.optimizer = OptimizerKind::Adam;
  } else if (opt == "sgd") {
    t.optimizer = OptimizerKind::Sgd;
  } else {
    fail(ErrorCategory::Config, "unknown optimizer '" + opt + "'");
  }
  read(j, "learning_rate", t.adam.learning_rate, "train");
  read(j, "beta1", t.adam.beta1, "train");
  read(j, "beta2", t.adam.beta2, "train");
  read(j, "epsilon", t.adam.epsilon, "train");
  read(j, "seed", t.seed, "train");
  read(j, "eval_every", t.eval_every, "train");
}

void parse_eval(const json& j, EvalSpec& e) {
  check_object(j, "eval", {"k", "trials"});
  read(j, "k", e.k, "eval");
  read(j, "trials", e.trials, "eval");
}

}  // namespace

double DatasetSpec::effective_head_fraction() const {
  if (head_fraction) return *head_fraction;
  return source == "bookcrossing" ? 0.001 : 0.2;
}

void ExperimentConfig::validate() const {
  const auto& d = dataset;
  if (d.source != "synthetic" && d.source != "movielens" && d.source != "bookcrossing") {
    fail(ErrorCategory::Config, "dataset.source must be synthetic, movielens or bookcrossing");
  }
  if (d.source != "synthetic" && (d.ratings.empty() || d.items.empty())) {
    fail(ErrorCategory::Config, "dataset.ratings and dataset.items are required for " + d.source);
  }
  const double hf = d.effective_head_fraction();
  if (!(hf > 0.0 && hf < 1.0)) fail(ErrorCategory::Config, "dataset.head_fraction must lie strictly between 0 and 1");
  const auto& s = d.split;
  if (!(s.train > 0.0 && s.valid >= 0.0 && s.test > 0.0) || std::abs(s.train + s.valid + s.test - 1.0) > 1e-9) {
    fail(ErrorCategory::Config, "dataset.split ratios must be positive and sum to 1");
  }
  if (d.source == "synthetic") {
    const auto& z = d.synthetic;
    if (z.n_users == 0 || z.n_items == 0 || z.n_events == 0 || z.n_genres == 0 || z.latent_dim == 0) {
      fail(ErrorCategory::Config, "dataset.synthetic sizes must be positive");
    }
    if (!(z.exponent > 0.0)) fail(ErrorCategory::Config, "dataset.synthetic.exponent must be positive");
    if (!(z.genre_preference >= 0.0 && z.genre_preference <= 1.0)) {
      fail(ErrorCategory::Config, "dataset.synthetic.genre_preference must lie in [0, 1]");
    }
  }
  model.validate();
  method.validate();
  train.validate();
  if (eval.k.empty()) fail(ErrorCategory::Config, "eval.k must list at least one K");
  for (int k : eval.k) {
    if (k < 1) fail(ErrorCategory::Config, "eval.k values must be at least 1");
  }
  if (eval.trials < 1) fail(ErrorCategory::Config, "eval.trials must be at least 1");
  if (run_dir.empty()) fail(ErrorCategory::Config, "run_dir must not be empty");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_object(j, "config", {"dataset", "model", "method", "train", "eval", "run_dir"});
  ExperimentConfig c;
  if (j.contains("dataset")) parse_dataset(j["dataset"], c.dataset);
  if (j.contains("model")) parse_model(j["model"], c.model);
  if (j.contains("method")) parse_method(j["method"], c.method);
  if (j.contains("train")) parse_train(j["train"], c.train);
  if (j.contains("eval")) parse_eval(j["eval"], c.eval);
  read_path(j, "run_dir", c.run_dir, "config");
  c.train.eval_k = c.eval.k;
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  const auto& d = dataset;
  const auto& z = d.synthetic;
  j["dataset"] = {{"source", d.source},
                  {"ratings", d.ratings.string()},
                  {"items", d.items.string()},
                  {"head_fraction", d.effective_head_fraction()},
                  {"split", {{"train", d.split.train}, {"valid", d.split.valid}, {"test", d.split.test}}},
                  {"seed", d.seed},
                  {"cache_dir", d.cache_dir.string()}};
  if (d.source == "synthetic") {
    j["dataset"]["synthetic"] = {{"n_users", z.n_users},     {"n_items", z.n_items},
                                 {"exponent", z.exponent},   {"n_events", z.n_events},
                                 {"n_genres", z.n_genres},   {"seed", z.seed},
                                 {"genre_preference", z.genre_preference},
                                 {"affinity", z.affinity},   {"latent_dim", z.latent_dim}};
  }
  std::vector<std::string> experts;
  for (auto g : model.item.experts) experts.emplace_back(group_name(g));
  j["model"] = {{"output_dim", model.item.output_dim},
                {"item",
                 {{"experts", experts},
                  {"expert_hidden_dims", model.item.expert_hidden_dims},
                  {"id_dim", model.item.id_dim},
                  {"feature_dim", model.item.feature_dim},
                  {"freq_buckets", model.item.freq_buckets}}},
                {"user",
                 {{"embedding_dim", model.user.embedding_dim},
                  {"shared_dims", model.user.shared_dims},
                  {"branch_hidden", model.user.branch_hidden}}}};
  j["method"] = {{"name", baselines::to_string(method.method)},
                 {"beta", method.beta},
                 {"gamma", method.gamma},
                 {"fixed_alpha", method.fixed_alpha},
                 {"design", baselines::to_string(method.design)},
                 {"logq_at_inference", method.logq_at_inference}};
  j["method"]["stage2_epochs"] = method.stage2_epochs ? json(*method.stage2_epochs) : json(nullptr);
  j["train"] = {{"batch_size", train.batch_size},
                {"epochs", train.epochs},
                {"optimizer", train.optimizer == OptimizerKind::Adam ? "adam" : "sgd"},
                {"learning_rate", train.adam.learning_rate},
                {"beta1", train.adam.beta1},
                {"beta2", train.adam.beta2},
                {"epsilon", train.adam.epsilon},
                {"seed", train.seed},
                {"eval_every", train.eval_every}};
  j["eval"] = {{"k", eval.k}, {"trials", eval.trials}};
  j["run_dir"] = run_dir.string();
  return j;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCategory::Io, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    fail(ErrorCategory::Parse, path.string() + ": " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

std::string dataset_fingerprint(const DatasetSpec& spec) {
  ExperimentConfig c;
  c.dataset = spec;
  json d = c.to_json()["dataset"];
  d.erase("cache_dir");
  if (spec.source != "synthetic") {
    for (const char* key : {"ratings", "items"}) {
      const std::filesystem::path p = d[key].get<std::string>();
      std::error_code ec;
      d[std::string(key) + "_size"] = static_cast<std::uint64_t>(std::filesystem::file_size(p, ec));
    }
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : d.dump()) h = (h ^ ch) * 0x100000001b3ULL;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

data::PreparedDataset load_dataset(const DatasetSpec& spec, bool* reused, std::ostream* log) {
  const std::string fp = dataset_fingerprint(spec);
  if (reused) *reused = false;
  if (!spec.cache_dir.empty()) {
    const auto manifest = data::read_manifest(spec.cache_dir);
    if (manifest && manifest->value("fingerprint", std::string()) == fp) {
      if (reused) *reused = true;
      return data::read_cache(spec.cache_dir);
    }
  }
  data::InteractionLog raw;
  if (spec.source == "synthetic") {
    raw = data::synth_zipf(spec.synthetic);
  } else if (spec.source == "movielens") {
    raw = data::load_movielens(spec.ratings, spec.items);
  } else {
    auto bx = data::load_bookcrossing(spec.ratings, spec.items);
    if (log) *log << "bookcrossing: kept " << bx.kept << " ratings, dropped " << bx.dropped << " with unknown ISBN\n";
    raw = std::move(bx.log);
  }
  if (raw.empty()) fail(ErrorCategory::Data, "dataset has no interactions");
  data::PreparedDataset prepared = data::prepare_dataset(raw, spec.split, spec.effective_head_fraction(), spec.seed);
  prepared.manifest["fingerprint"] = fp;
  prepared.manifest["source"] = spec.source;
  if (!spec.cache_dir.empty()) data::write_cache(spec.cache_dir, prepared);
  return prepared;
}

train::TrainConfig trial_config(const ExperimentConfig& cfg, int trial, const std::filesystem::path& dir) {
  train::TrainConfig t = cfg.train;
  t.seed = cfg.train.seed + static_cast<std::uint64_t>(trial);
  t.eval_k = cfg.eval.k;
  t.checkpoint_dir = dir;
  return t;
}

}  // namespace cdnrec::app
