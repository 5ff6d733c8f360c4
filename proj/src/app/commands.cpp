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

#include <cdnrec/app/commands.hpp>

#include <cdnrec/evaluation/analysis.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>

namespace cdnrec::app {

using nlohmann::json;

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Io, "cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) fail(ErrorCategory::Io, "failed writing " + path.string());
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_report(const std::filesystem::path& dir, const std::string& stem, const eval::EvalReport& r) {
  write_json(dir / (stem + ".json"), r.to_json());
  write_text(dir / (stem + ".txt"), r.table());
}

void print_summary(const data::PreparedDataset& d, std::ostream& out) {
  const auto& m = d.manifest;
  out << "users " << m.value("n_users", 0) << ", items " << m.value("n_items", 0) << ", interactions "
      << d.split.train.size() + d.split.valid.size() + d.split.test.size() << "\n";
  out << "train " << d.split.train.size() << ", valid " << d.split.valid.size() << ", test " << d.split.test.size()
      << ", regularizer " << d.split.regularizer.size() << "\n";
  out << "imbalance factor " << d.stats.imbalance_factor << ", head items " << d.stats.head_count() << ", tail items "
      << d.stats.n_items() - d.stats.head_count() << "\n";
}

std::unique_ptr<train::Trainer> trainer_for_checkpoint(const ExperimentConfig& cfg, const data::PreparedDataset& data,
                                                       const std::filesystem::path& checkpoint) {
  auto t = std::make_unique<train::Trainer>(data, cfg.model, cfg.method, trial_config(cfg, 0, {}));
  t->load(checkpoint);
  return t;
}

std::string format_gamma(double g) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", g);
  return buf;
}

}  // namespace

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Parse:
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Io: return 4;
    case ErrorCategory::Numeric: return 5;
    case ErrorCategory::Shape: return 6;
  }
  return 1;
}

void cmd_prepare(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.dataset.cache_dir.empty()) fail(ErrorCategory::Config, "dataset.cache_dir is required for prepare");
  bool reused = false;
  const data::PreparedDataset d = load_dataset(cfg.dataset, &reused, &out);
  out << (reused ? "cache up to date: " : "wrote cache: ") << cfg.dataset.cache_dir.string() << "\n";
  print_summary(d, out);
}

eval::EvalReport cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts, std::ostream& out) {
  const int trials = opts.trials.value_or(cfg.eval.trials);
  if (trials < 1) fail(ErrorCategory::Config, "--trials must be at least 1");
  const data::PreparedDataset data = load_dataset(cfg.dataset, nullptr, &out);
  std::filesystem::create_directories(cfg.run_dir);

  std::vector<eval::EvalReport> reports;
  json trial_entries = json::array();
  for (int k = 0; k < trials; ++k) {
    const auto dir = cfg.run_dir / ("trial-" + std::to_string(k));
    train::TrainConfig tc = trial_config(cfg, k, dir);
    train::Trainer trainer(data, cfg.model, cfg.method, tc, cfg.to_json());
    if (opts.resume && std::filesystem::exists(dir / "last.ckpt")) {
      trainer.load(dir / "last.ckpt");
      out << "trial " << k << ": resuming after epoch " << trainer.completed_epochs() << "\n";
    }
    trainer.fit();
    for (const auto& e : trainer.history().epochs) {
      out << "trial " << k << " epoch " << e.epoch << " " << e.stage << " alpha " << e.alpha << " loss "
          << e.train_loss;
      if (e.valid && e.valid->slice(eval::EvalSlice::Overall).present()) {
        out << " valid HR@" << cfg.eval.k.front() << " "
            << e.valid->slice(eval::EvalSlice::Overall).hr.at(cfg.eval.k.front()).mean;
      }
      out << "\n";
    }
    if (trainer.completed_epochs() < tc.epochs) {
      out << "trial " << k << ": stopped after epoch " << trainer.completed_epochs() - 1 << "\n";
      continue;
    }
    const eval::EvalReport r = trainer.evaluate(data.split.test.interactions);
    write_report(dir, "report", r);
    reports.push_back(r);
    trial_entries.push_back({{"trial", k}, {"seed", tc.seed}, {"dir", dir.string()}});
  }

  json manifest{{"format", "cdnrec-run"},
                {"config", cfg.to_json()},
                {"dataset", data.manifest},
                {"trials", trial_entries}};
  write_json(cfg.run_dir / "manifest.json", manifest);
  if (reports.empty()) return {};
  const eval::EvalReport agg = eval::aggregate_trials(reports);
  write_report(cfg.run_dir, "report", agg);
  out << agg.table();
  return agg;
}

eval::EvalReport cmd_evaluate(const ExperimentConfig& cfg, const EvaluateOptions& opts, std::ostream& out) {
  const data::PreparedDataset data = load_dataset(cfg.dataset, nullptr, &out);
  auto trainer = trainer_for_checkpoint(cfg, data, opts.checkpoint);
  std::optional<eval::GateReport> gates;
  if (opts.gates) gates = eval::gate_report(trainer->model(), trainer->params(), data.stats);
  const eval::EvalReport r = trainer->evaluate(data.split.test.interactions);
  const auto dir = opts.out_dir.empty() ? opts.checkpoint.parent_path() : opts.out_dir;
  write_report(dir, "eval", r);
  if (gates) write_json(dir / "gates.json", gates->to_json());
  out << r.table();
  return r;
}

eval::GateReport cmd_gates(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                           const std::filesystem::path& out_path, std::ostream& out) {
  const data::PreparedDataset data = load_dataset(cfg.dataset, nullptr, &out);
  auto trainer = trainer_for_checkpoint(cfg, data, checkpoint);
  const eval::GateReport g = eval::gate_report(trainer->model(), trainer->params(), data.stats);
  const auto path = out_path.empty() ? checkpoint.parent_path() / "gates.json" : out_path;
  write_json(path, g.to_json());
  out << g.to_json().dump(2) << "\n";
  return g;
}

void cmd_export_embeddings(const ExperimentConfig& cfg, const ExportOptions& opts, std::ostream& out) {
  if (opts.subset != "all" && opts.subset != "head" && opts.subset != "tail") {
    fail(ErrorCategory::Config, "--subset must be all, head or tail");
  }
  if (opts.out_path.empty()) fail(ErrorCategory::Config, "an output path is required");
  const data::PreparedDataset data = load_dataset(cfg.dataset, nullptr, &out);
  auto trainer = trainer_for_checkpoint(cfg, data, opts.checkpoint);
  std::vector<Index> items;
  std::vector<std::string> labels;
  for (std::uint32_t i : data.stats.order) {
    if (opts.limit && items.size() >= *opts.limit) break;
    const bool head = data.stats.is_head(i);
    if ((opts.subset == "head" && !head) || (opts.subset == "tail" && head)) continue;
    items.push_back(i);
    labels.push_back(eval::primary_label(trainer->model().catalog(), i, opts.label_field));
  }
  if (opts.out_path.has_parent_path()) std::filesystem::create_directories(opts.out_path.parent_path());
  eval::export_embeddings(trainer->model(), trainer->params(), items, labels, opts.out_path);
  out << "wrote " << items.size() << " embeddings to " << opts.out_path.string() << "\n";
}

void cmd_sweep_gamma(const ExperimentConfig& cfg, const std::vector<double>& gammas,
                     const std::filesystem::path& csv_path, std::ostream& out) {
  if (gammas.empty()) fail(ErrorCategory::Config, "at least one gamma is required");
  for (double g : gammas) {
    if (!(g > 1.0)) fail(ErrorCategory::Config, "every gamma must be greater than 1");
  }
  if (cfg.method.method != baselines::Method::CDN) fail(ErrorCategory::Config, "sweep-gamma needs method cdn");
  std::string csv = "gamma,slice,metric,k,mean,sem\n";
  for (double g : gammas) {
    ExperimentConfig c = cfg;
    c.method.gamma = g;
    c.run_dir = cfg.run_dir / ("gamma-" + format_gamma(g));
    out << "gamma " << format_gamma(g) << "\n";
    const eval::EvalReport r = cmd_train(c, {}, out);
    for (eval::EvalSlice s : eval::kSlices) {
      const auto& sr = r.slice(s);
      for (int k : r.ks) {
        for (auto [name, field] : {std::pair{"hr", &eval::SliceReport::hr}, std::pair{"ndcg", &eval::SliceReport::ndcg}}) {
          char row[160];
          const auto it = (sr.*field).find(k);
          if (it == (sr.*field).end()) {
            std::snprintf(row, sizeof row, "%s,%s,%s,%d,,\n", format_gamma(g).c_str(),
                          std::string(eval::to_string(s)).c_str(), name, k);
          } else if (it->second.sem) {
            std::snprintf(row, sizeof row, "%s,%s,%s,%d,%.6f,%.6f\n", format_gamma(g).c_str(),
                          std::string(eval::to_string(s)).c_str(), name, k, it->second.mean, *it->second.sem);
          } else {
            std::snprintf(row, sizeof row, "%s,%s,%s,%d,%.6f,\n", format_gamma(g).c_str(),
                          std::string(eval::to_string(s)).c_str(), name, k, it->second.mean);
          }
          csv += row;
        }
      }
    }
  }
  write_text(csv_path.empty() ? cfg.run_dir / "gamma_sweep.csv" : csv_path, csv);
}

}  // namespace cdnrec::app
