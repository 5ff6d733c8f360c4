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

#pragma once

#include <cdnrec/baselines/methods.hpp>
#include <cdnrec/data/cache.hpp>
#include <cdnrec/evaluation/report.hpp>
#include <cdnrec/model/tower_model.hpp>
#include <cdnrec/numerics/optimizer.hpp>

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cdnrec::train {

struct TrainConfig {
  int batch_size = 256;
  int epochs = 10;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamHyper adam;  // learning_rate is also the SGD step size
  std::uint64_t seed = 1;
  int eval_every = 1;  // 0 disables validation
  std::vector<int> eval_k{50};
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
  /// Stop after this many completed epochs, as if interrupted.
  std::optional<int> stop_after;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 0-based; alpha is the schedule value at t = epoch
  std::string stage;
  double alpha = 1.0;
  double train_loss = 0.0;
  std::int64_t steps = 0;
  std::optional<eval::EvalReport> valid;
  double wall_seconds = 0.0;

  /// with_timing = false drops wall_seconds so the record is reproducible.
  nlohmann::json to_json(bool with_timing = true) const;
  static EpochRecord from_json(const nlohmann::json& j);
};

struct RunHistory {
  std::vector<EpochRecord> epochs;

  nlohmann::json to_json(bool with_timing = true) const;
  static RunHistory from_json(const nlohmann::json& j);
  /// One JSON object per line.
  void write_jsonl(const std::filesystem::path& path) const;
  static RunHistory read_jsonl(const std::filesystem::path& path);
};

/// Runs one method on one prepared dataset. Epoch t draws the main stream in
/// a permutation seeded by (seed, t) and pairs every main batch with the next
/// batch of the regularizer stream, which cycles through its own seeded
/// permutations across epochs. The stream positions depend only on (seed, t),
/// so a run resumed from an epoch checkpoint continues exactly as an
/// uninterrupted one.
class Trainer {
 public:
  Trainer(const data::PreparedDataset& data, model::ModelConfig base, baselines::MethodConfig method,
          TrainConfig config, nlohmann::json run_info = {});

  const model::TowerModel& model() const { return *model_; }
  const baselines::MethodConfig& method() const { return method_; }
  const TrainConfig& config() const { return config_; }
  const model::AdapterSchedule& schedule() const { return schedule_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const RunHistory& history() const { return history_; }
  int completed_epochs() const { return static_cast<int>(history_.epochs.size()); }
  const baselines::LossContext& loss_context() const { return ctx_; }

  /// "stage1" / "stage2" for NDP, "joint" otherwise.
  std::string stage_of(int epoch) const;
  std::int64_t steps_in_epoch(int epoch) const;

  EpochRecord run_epoch();
  /// Runs the remaining epochs (or up to stop_after), validating and writing
  /// last.ckpt after every epoch, best.ckpt on a new best validation HR, and
  /// final.ckpt plus history.jsonl at the end.
  const RunHistory& fit();

  void save(const std::filesystem::path& path) const;
  /// Restores parameters, optimizer state and history from a checkpoint
  /// written by a trainer with the same data and configuration.
  void load(const std::filesystem::path& path);

  /// Called with every (main, regularizer) batch before its optimizer step.
  /// The regularizer batch is empty when the epoch does not pair examples.
  using BatchObserver = std::function<void(const model::PairBatch&, const model::PairBatch&)>;
  void set_batch_observer(BatchObserver observer) { observer_ = std::move(observer); }

  /// Score offsets the method applies at serving time (possibly empty).
  std::vector<double> serving_offsets() const;
  eval::EvalReport evaluate(std::span<const data::Interaction> events) const;

 private:
  void apply_stage(int epoch);
  std::vector<std::size_t> permutation(std::size_t n, std::uint64_t a, std::uint64_t b) const;
  [[noreturn]] void abort_non_finite(int epoch, std::int64_t step, double alpha, const model::PairBatch& main,
                                     const std::string& what) const;

  const data::PreparedDataset* data_;
  baselines::MethodConfig method_;
  TrainConfig config_;
  nlohmann::json run_info_;
  std::unique_ptr<model::TowerModel> model_;
  model::AdapterSchedule schedule_;
  baselines::LossContext ctx_;
  ParamStore params_;
  std::unique_ptr<Optimizer> optimizer_;
  eval::ExclusionIndex exclusions_;
  RunHistory history_;
  std::string current_stage_;
  double best_valid_ = -1.0;
  BatchObserver observer_;
};

}  // namespace cdnrec::train
