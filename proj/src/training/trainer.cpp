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

#include <cdnrec/training/trainer.hpp>

#include <cdnrec/errors.hpp>
#include <cdnrec/numerics/checkpoint.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace cdnrec::train {

namespace {

constexpr std::uint64_t kMainStream = 0;
constexpr std::uint64_t kRegularizerStream = 1;
constexpr std::uint64_t kStageTwoStream = 2;

std::string_view optimizer_name(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) fail(ErrorCategory::Config, "batch_size must be at least 2");
  if (epochs < 1) fail(ErrorCategory::Config, "epochs must be at least 1");
  if (!(adam.learning_rate > 0.0)) fail(ErrorCategory::Config, "learning_rate must be positive");
  if (eval_every < 0) fail(ErrorCategory::Config, "eval_every must be non-negative");
  if (eval_k.empty()) fail(ErrorCategory::Config, "eval_k must list at least one K");
  for (int k : eval_k) {
    if (k < 1) fail(ErrorCategory::Config, "every K must be at least 1");
  }
  if (stop_after && *stop_after < 0) fail(ErrorCategory::Config, "stop_after must be non-negative");
}

nlohmann::json EpochRecord::to_json(bool with_timing) const {
  nlohmann::json j{{"epoch", epoch}, {"stage", stage}, {"alpha", alpha}, {"train_loss", train_loss}, {"steps", steps}};
  j["valid"] = valid ? valid->to_json() : nlohmann::json(nullptr);
  if (with_timing) j["wall_seconds"] = wall_seconds;
  return j;
}

EpochRecord EpochRecord::from_json(const nlohmann::json& j) {
  EpochRecord r;
  try {
    r.epoch = j.at("epoch").get<int>();
    r.stage = j.at("stage").get<std::string>();
    r.alpha = j.at("alpha").get<double>();
    r.train_loss = j.at("train_loss").get<double>();
    r.steps = j.at("steps").get<std::int64_t>();
    if (!j.at("valid").is_null()) r.valid = eval::EvalReport::from_json(j.at("valid"));
    r.wall_seconds = j.value("wall_seconds", 0.0);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::Parse, std::string("malformed epoch record: ") + e.what());
  }
  return r;
}

nlohmann::json RunHistory::to_json(bool with_timing) const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : epochs) j.push_back(e.to_json(with_timing));
  return j;
}

RunHistory RunHistory::from_json(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorCategory::Parse, "run history must be a JSON array");
  RunHistory h;
  for (const auto& e : j) h.epochs.push_back(EpochRecord::from_json(e));
  return h;
}

void RunHistory::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCategory::Io, "cannot open " + path.string() + " for writing");
  for (const auto& e : epochs) out << e.to_json().dump() << '\n';
  if (!out) fail(ErrorCategory::Io, "failed writing " + path.string());
}

RunHistory RunHistory::read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Io, "cannot open " + path.string());
  RunHistory h;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      h.epochs.push_back(EpochRecord::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCategory::Parse, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return h;
}

Trainer::Trainer(const data::PreparedDataset& data, model::ModelConfig base, baselines::MethodConfig method,
                 TrainConfig config, nlohmann::json run_info)
    : data_(&data),
      method_(method),
      config_(std::move(config)),
      run_info_(std::move(run_info)),
      ctx_(data.stats.freq),
      exclusions_(data.split.train.n_users(), data.split.train.interactions) {
  method_.validate();
  config_.validate();
  if (!data.split.train.catalog) fail(ErrorCategory::Data, "prepared dataset has no catalog");
  if (data.split.train.empty()) fail(ErrorCategory::Data, "training split is empty");
  if (data.stats.n_items() != data.split.train.n_items()) {
    fail(ErrorCategory::Data, "catalog statistics do not match the catalog");
  }
  const auto& catalog = data.split.train.catalog;
  model::ModelConfig arch = baselines::architecture_for(method_, base, catalog->item_features.size());
  auto side = model::ItemSideInfo::from_stats(data.stats, arch.item.freq_buckets);
  model_ = std::make_unique<model::TowerModel>(std::move(arch), catalog, std::move(side));
  schedule_ = baselines::schedule_for(method_, config_.epochs);
  if (baselines::uses_regularizer_stream(method_) && data.split.regularizer.empty()) {
    fail(ErrorCategory::Data, "method needs a non-empty regularizer stream");
  }
  if (method_.method == baselines::Method::NDP) {
    if (baselines::ndp_stage2_epochs(method_, config_.epochs) > 0 && data.split.regularizer.empty()) {
      fail(ErrorCategory::Data, "NDP stage 2 needs a non-empty regularizer stream");
    }
  }
  model_->init(params_, config_.seed);
  optimizer_ = make_optimizer(config_.optimizer, config_.adam);
}

std::string Trainer::stage_of(int epoch) const {
  if (method_.method != baselines::Method::NDP) return "joint";
  const int s2 = baselines::ndp_stage2_epochs(method_, config_.epochs);
  return epoch < config_.epochs - s2 ? "stage1" : "stage2";
}

std::int64_t Trainer::steps_in_epoch(int epoch) const {
  const std::size_t n =
      stage_of(epoch) == "stage2" ? data_->split.regularizer.size() : data_->split.train.size();
  const auto b = static_cast<std::size_t>(config_.batch_size);
  return static_cast<std::int64_t>((n + b - 1) / b);
}

std::vector<std::size_t> Trainer::permutation(std::size_t n, std::uint64_t a, std::uint64_t b) const {
  std::seed_seq seq{static_cast<std::uint32_t>(config_.seed), static_cast<std::uint32_t>(config_.seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> p(n);
  for (std::size_t k = 0; k < n; ++k) p[k] = k;
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

void Trainer::apply_stage(int epoch) {
  const std::string stage = stage_of(epoch);
  params_.set_frozen_prefix(model::TowerModel::kUserPrefix, stage == "stage2");
  if (stage == "stage2" && epoch == config_.epochs - baselines::ndp_stage2_epochs(method_, config_.epochs)) {
    optimizer_->reset();
  }
  current_stage_ = stage;
}

void Trainer::abort_non_finite(int epoch, std::int64_t step, double alpha, const model::PairBatch& main,
                               const std::string& what) const {
  std::ostringstream os;
  os << "non-finite loss at epoch " << epoch << " step " << step << " (alpha " << alpha << "): " << what;
  os << "\n  batch (user, item):";
  for (std::size_t k = 0; k < std::min<std::size_t>(main.size(), 8); ++k) {
    os << " (" << main.users[k] << ", " << main.items[k] << ")";
  }
  if (main.size() > 8) os << " ... " << main.size() << " rows";
  os << "\n  parameter norms:";
  for (const auto& [name, slot] : params_) {
    const double norm = slot.value.norm();
    os << "\n    " << name << " " << norm << (std::isfinite(norm) ? "" : "  <- non-finite");
  }
  fail(ErrorCategory::Numeric, os.str());
}

EpochRecord Trainer::run_epoch() {
  const int t = completed_epochs();
  if (t >= config_.epochs) fail(ErrorCategory::Config, "all epochs already completed");
  const auto start = std::chrono::steady_clock::now();
  apply_stage(t);

  EpochRecord rec;
  rec.epoch = t;
  rec.stage = current_stage_;
  rec.alpha = schedule_.alpha(t);

  const bool stage2 = current_stage_ == "stage2";
  const auto& stream = stage2 ? data_->split.regularizer.interactions : data_->split.train.interactions;
  const auto& reg = data_->split.regularizer.interactions;
  const bool paired = baselines::uses_regularizer_stream(method_) && rec.alpha < 1.0;
  const std::size_t n = stream.size();
  const auto b = static_cast<std::size_t>(config_.batch_size);
  const auto order = permutation(n, static_cast<std::uint64_t>(t), stage2 ? kStageTwoStream : kMainStream);

  std::uint64_t cached_pass = ~0ULL;
  std::vector<std::size_t> reg_order;
  model::PairBatch main, regb;
  double loss_sum = 0.0;
  std::int64_t step = 0;
  for (std::size_t begin = 0; begin < n; begin += b, ++step) {
    const std::size_t end = std::min(n, begin + b);
    main.users.clear();
    main.items.clear();
    regb.users.clear();
    regb.items.clear();
    for (std::size_t k = begin; k < end; ++k) {
      const auto& e = stream[order[k]];
      main.users.push_back(e.user);
      main.items.push_back(e.item);
      if (!paired) continue;
      // Regularizer position counts rows consumed since epoch 0.
      const std::uint64_t pos = static_cast<std::uint64_t>(t) * n + k;
      const std::uint64_t pass = pos / reg.size();
      if (pass != cached_pass) {
        reg_order = permutation(reg.size(), pass, kRegularizerStream);
        cached_pass = pass;
      }
      const auto& r = reg[reg_order[pos % reg.size()]];
      regb.users.push_back(r.user);
      regb.items.push_back(r.item);
    }

    if (observer_) observer_(main, regb);
    ad::Tape tape(params_);
    ad::Var loss;
    try {
      loss = baselines::method_loss(tape, *model_, method_, ctx_, main, regb, rec.alpha);
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::Numeric) throw;
      abort_non_finite(t, step, rec.alpha, main, e.what());
    }
    const double value = loss.scalar();
    if (!std::isfinite(value)) abort_non_finite(t, step, rec.alpha, main, "loss is not finite");
    tape.backward(loss);
    optimizer_->step(params_);
    loss_sum += value * static_cast<double>(end - begin);
  }
  rec.steps = step;
  rec.train_loss = n > 0 ? loss_sum / static_cast<double>(n) : 0.0;

  const bool last = t + 1 == config_.epochs;
  if (config_.eval_every > 0 && ((t + 1) % config_.eval_every == 0 || last) && !data_->split.valid.empty()) {
    rec.valid = evaluate(data_->split.valid.interactions);
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  history_.epochs.push_back(rec);
  return rec;
}

const RunHistory& Trainer::fit() {
  const auto& dir = config_.checkpoint_dir;
  if (!dir.empty()) std::filesystem::create_directories(dir);
  const int k0 = config_.eval_k.front();
  while (completed_epochs() < config_.epochs && (!config_.stop_after || completed_epochs() < *config_.stop_after)) {
    const EpochRecord rec = run_epoch();
    bool best = false;
    if (rec.valid && rec.valid->slice(eval::EvalSlice::Overall).present()) {
      const double hr = rec.valid->slice(eval::EvalSlice::Overall).hr.at(k0).mean;
      if (hr > best_valid_) {
        best_valid_ = hr;
        best = true;
      }
    }
    if (dir.empty()) continue;
    save(dir / "last.ckpt");
    if (best) save(dir / "best.ckpt");
  }
  if (!dir.empty()) {
    if (completed_epochs() == config_.epochs) save(dir / "final.ckpt");
    history_.write_jsonl(dir / "history.jsonl");
  }
  return history_;
}

void Trainer::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  export_params(params_, ckpt, "param/");
  const OptimizerState st = optimizer_->state();
  for (const auto& [name, m] : st.tensors) ckpt.tensors["opt/" + name] = m;
  nlohmann::json meta;
  meta["format"] = "cdnrec-checkpoint";
  meta["completed_epochs"] = completed_epochs();
  meta["optimizer"] = optimizer_name(config_.optimizer);
  meta["optimizer_step"] = st.step;
  meta["best_valid"] = best_valid_;
  meta["method"] = baselines::to_string(method_.method);
  meta["history"] = history_.to_json(false);
  meta["run"] = run_info_;
  ckpt.metadata = meta.dump();
  write_checkpoint(path, ckpt);
}

void Trainer::load(const std::filesystem::path& path) {
  const Checkpoint ckpt = read_checkpoint(path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(ckpt.metadata);
    if (meta.at("format") != "cdnrec-checkpoint") fail(ErrorCategory::Parse, "not a training checkpoint");
    if (meta.at("method") != baselines::to_string(method_.method)) {
      fail(ErrorCategory::Config, "checkpoint was trained with method '" + meta.at("method").get<std::string>() + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::Parse, path.string() + ": malformed checkpoint metadata: " + e.what());
  }
  ParamStore loaded = import_params(ckpt, "param/", &model::TowerModel::is_sparse_slot);
  if (loaded.size() != params_.size()) {
    fail(ErrorCategory::Config, path.string() + ": parameter set does not match the configured model");
  }
  for (const auto& [name, slot] : params_) {
    if (!loaded.contains(name) || loaded.at(name).value.rows() != slot.value.rows() ||
        loaded.at(name).value.cols() != slot.value.cols()) {
      fail(ErrorCategory::Config, path.string() + ": slot '" + name + "' missing or reshaped");
    }
  }
  OptimizerState st;
  st.step = meta.value("optimizer_step", std::int64_t{0});
  for (const auto& [name, m] : ckpt.tensors) {
    if (name.starts_with("opt/")) st.tensors[name.substr(4)] = m;
  }
  params_ = std::move(loaded);
  optimizer_->load_state(st);
  history_ = RunHistory::from_json(meta.at("history"));
  best_valid_ = meta.value("best_valid", -1.0);
}

std::vector<double> Trainer::serving_offsets() const { return baselines::serving_offsets(method_, ctx_); }

eval::EvalReport Trainer::evaluate(std::span<const data::Interaction> events) const {
  const auto offsets = serving_offsets();
  return eval::evaluate(*model_, params_, events, exclusions_, data_->stats, config_.eval_k, offsets);
}

}  // namespace cdnrec::train
