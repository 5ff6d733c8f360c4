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

#include <cdnrec/baselines/methods.hpp>

#include <cdnrec/errors.hpp>

#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <utility>

namespace cdnrec::baselines {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 10> kMethodNames{{
    {Method::TwoTower, "two_tower"},
    {Method::ClassBalance, "class_balance"},
    {Method::LogQ, "logq"},
    {Method::NDP, "ndp"},
    {Method::BBN, "bbn"},
    {Method::CDN, "cdn"},
    {Method::BDN, "bdn"},
    {Method::UDN, "udn"},
    {Method::IDN, "idn"},
    {Method::ExpertDesign, "expert_design"},
}};

constexpr std::array<std::pair<ExpertDesign, std::string_view>, 3> kDesignNames{{
    {ExpertDesign::UnbalancedBalanced, "unbalanced_balanced"},
    {ExpertDesign::HeadTail, "head_tail"},
    {ExpertDesign::MemGen, "mem_gen"},
}};

model::ItemTowerConfig plain_item_tower(const model::ItemTowerConfig& base) {
  model::ItemTowerConfig c = base;
  c.experts = {model::FeatureGroup::All};
  c.gate = model::GateKind::Constant;
  c.branch_routed = false;
  return c;
}

// Two full-feature experts whose hidden widths are scaled until the tower's
// parameter count is closest to the target.
model::ItemTowerConfig equal_size_pair(const model::ItemTowerConfig& base, model::GateKind gate, bool routed,
                                       std::size_t n_fields) {
  const std::int64_t target = item_tower_parameter_count(base, n_fields);
  model::ItemTowerConfig c = base;
  c.experts = {model::FeatureGroup::All, model::FeatureGroup::All};
  c.gate = gate;
  c.branch_routed = routed;
  if (base.expert_hidden_dims.empty()) return c;
  const Index h0 = base.expert_hidden_dims.front();
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<Index> best_dims = base.expert_hidden_dims;
  for (Index w = 1; w <= 4 * h0; ++w) {
    std::vector<Index> dims;
    for (Index h : base.expert_hidden_dims) {
      dims.push_back(std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(h * w) / h0))));
    }
    c.expert_hidden_dims = dims;
    const std::int64_t diff = std::llabs(item_tower_parameter_count(c, n_fields) - target);
    if (diff < best) {
      best = diff;
      best_dims = dims;
    }
  }
  c.expert_hidden_dims = best_dims;
  return c;
}

}  // namespace

std::string_view to_string(Method m) {
  for (const auto& [k, name] : kMethodNames) {
    if (k == m) return name;
  }
  return "unknown";
}

std::string_view to_string(ExpertDesign d) {
  for (const auto& [k, name] : kDesignNames) {
    if (k == d) return name;
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (const auto& [k, n] : kMethodNames) {
    if (n == name) return k;
  }
  fail(ErrorCategory::Config, "unknown method '" + std::string(name) + "'");
}

ExpertDesign parse_expert_design(std::string_view name) {
  for (const auto& [k, n] : kDesignNames) {
    if (n == name) return k;
  }
  fail(ErrorCategory::Config, "unknown expert design '" + std::string(name) + "'");
}

void MethodConfig::validate() const {
  if (!(beta >= 0.0 && beta < 1.0)) fail(ErrorCategory::Config, "class balance beta must lie in [0, 1)");
  if (!(fixed_alpha >= 0.0 && fixed_alpha <= 1.0)) fail(ErrorCategory::Config, "fixed alpha must lie in [0, 1]");
  if (stage2_epochs && *stage2_epochs < 0) fail(ErrorCategory::Config, "stage2_epochs must be non-negative");
  const bool gamma_used = method == Method::CDN || method == Method::UDN || method == Method::ExpertDesign;
  if (gamma_used && !(gamma > 1.0)) fail(ErrorCategory::Config, "gamma must be greater than 1");
}

bool uses_regularizer_stream(const MethodConfig& m) {
  switch (m.method) {
    case Method::BBN:
    case Method::CDN:
    case Method::BDN:
    case Method::UDN:
    case Method::ExpertDesign:
      return true;
    default:
      return false;
  }
}

model::ModelConfig architecture_for(const MethodConfig& m, const model::ModelConfig& base, std::size_t n_fields) {
  model::ModelConfig c = base;
  c.user.bilateral = uses_regularizer_stream(m);
  switch (m.method) {
    case Method::TwoTower:
    case Method::ClassBalance:
    case Method::LogQ:
    case Method::NDP:
    case Method::BBN:
    case Method::UDN:
      c.item = plain_item_tower(base.item);
      break;
    case Method::CDN:
    case Method::BDN:
    case Method::IDN:
      break;
    case Method::ExpertDesign:
      if (m.design == ExpertDesign::HeadTail) {
        c.item = equal_size_pair(base.item, model::GateKind::HeadTail, false, n_fields);
      } else if (m.design == ExpertDesign::UnbalancedBalanced) {
        c.item = equal_size_pair(base.item, model::GateKind::Frequency, true, n_fields);
      }
      break;
  }
  c.validate();
  return c;
}

model::AdapterSchedule schedule_for(const MethodConfig& m, int total_epochs) {
  switch (m.method) {
    case Method::CDN:
    case Method::UDN:
    case Method::ExpertDesign:
      return model::AdapterSchedule::cdn(m.gamma, total_epochs);
    case Method::BBN:
      return model::AdapterSchedule::bbn(total_epochs);
    case Method::BDN:
      return model::AdapterSchedule::fixed(m.fixed_alpha, total_epochs);
    default:
      return model::AdapterSchedule::fixed(1.0, total_epochs);
  }
}

int ndp_stage2_epochs(const MethodConfig& m, int total_epochs) {
  const int s = m.stage2_epochs.value_or(total_epochs / 2);
  if (s > total_epochs) fail(ErrorCategory::Config, "stage2_epochs exceeds the epoch budget");
  return s;
}

std::int64_t item_tower_parameter_count(const model::ItemTowerConfig& item, std::size_t n_fields) {
  const auto gen = static_cast<std::int64_t>(n_fields) * item.feature_dim;
  std::int64_t total = 0;
  for (model::FeatureGroup g : item.experts) {
    std::int64_t in = 0;
    switch (g) {
      case model::FeatureGroup::Memorization: in = item.id_dim; break;
      case model::FeatureGroup::Generalization: in = gen; break;
      case model::FeatureGroup::All: in = item.id_dim + gen; break;
    }
    std::vector<Index> widths = item.expert_hidden_dims;
    widths.push_back(item.output_dim);
    for (Index w : widths) {
      total += in * w + w;
      in = w;
    }
  }
  if (item.gate == model::GateKind::Frequency) {
    total += static_cast<std::int64_t>(item.freq_buckets) * static_cast<std::int64_t>(item.experts.size());
  }
  return total;
}

ad::Var two_tower_loss(ad::Tape& tape, const model::TowerModel& model, const model::PairBatch& batch,
                       std::span<const double> row_weights, std::span<const double> candidate_probs) {
  ad::Var logits = model::training_logits(tape, model, batch, batch, 1.0);
  if (!candidate_probs.empty()) logits = logq_correct(logits, candidate_probs);
  if (!row_weights.empty()) return ad::softmax_xent_inbatch(logits, row_weights);
  const std::vector<double> ones(batch.size(), 1.0);
  return ad::softmax_xent_inbatch(logits, ones);
}

double class_balance_raw_weight(std::int64_t n, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) fail(ErrorCategory::Config, "class balance beta must lie in [0, 1)");
  if (n < 1) fail(ErrorCategory::Data, "class balance weight needs a positive frequency");
  if (beta == 0.0) return 1.0;
  return (1.0 - beta) / -std::expm1(static_cast<double>(n) * std::log(beta));
}

std::vector<double> class_balance_weights(std::span<const std::int64_t> freqs, double beta) {
  std::vector<double> w;
  w.reserve(freqs.size());
  double sum = 0.0;
  for (std::int64_t n : freqs) {
    w.push_back(class_balance_raw_weight(n, beta));
    sum += w.back();
  }
  if (w.empty()) return w;
  const double mean = sum / static_cast<double>(w.size());
  for (double& x : w) x /= mean;
  return w;
}

Matrix logq_correct(const Matrix& logits, std::span<const double> candidate_probs) {
  if (static_cast<Index>(candidate_probs.size()) != logits.cols()) {
    fail(ErrorCategory::Shape, "logq_correct: " + std::to_string(candidate_probs.size()) +
                                   " probabilities for " + shape_string(logits));
  }
  Matrix out = logits;
  for (Index c = 0; c < logits.cols(); ++c) {
    const double q = candidate_probs[static_cast<std::size_t>(c)];
    if (!(q > 0.0)) fail(ErrorCategory::Data, "logq_correct: candidate " + std::to_string(c) + " has probability 0");
    out.col(c).array() -= std::log(q);
  }
  return out;
}

ad::Var logq_correct(ad::Var logits, std::span<const double> candidate_probs) {
  const Matrix zero = Matrix::Zero(logits.rows(), logits.cols());
  return ad::add(logits, logits.tape().constant(logq_correct(zero, candidate_probs)));
}

LossContext::LossContext(std::vector<std::int64_t> freq) : train_freq(std::move(freq)) {
  for (std::int64_t f : train_freq) total += f;
}

double LossContext::probability(Index item) const {
  if (item < 0 || static_cast<std::size_t>(item) >= train_freq.size()) {
    fail(ErrorCategory::Data, "unknown item index " + std::to_string(item));
  }
  if (total == 0) return 0.0;
  return static_cast<double>(train_freq[static_cast<std::size_t>(item)]) / static_cast<double>(total);
}

ad::Var method_loss(ad::Tape& tape, const model::TowerModel& model, const MethodConfig& m, const LossContext& ctx,
                    const model::PairBatch& main, const model::PairBatch& regularizer, double alpha) {
  switch (m.method) {
    case Method::ClassBalance: {
      std::vector<std::int64_t> freqs;
      for (Index i : main.items) freqs.push_back(ctx.train_freq.at(static_cast<std::size_t>(i)));
      return two_tower_loss(tape, model, main, class_balance_weights(freqs, m.beta));
    }
    case Method::LogQ: {
      std::vector<double> q;
      for (Index i : main.items) q.push_back(ctx.probability(i));
      return two_tower_loss(tape, model, main, {}, q);
    }
    case Method::TwoTower:
    case Method::NDP:
    case Method::IDN:
      return two_tower_loss(tape, model, main);
    default:
      return model::cdn_loss(tape, model, main, regularizer, alpha);
  }
}

std::vector<double> serving_offsets(const MethodConfig& m, const LossContext& ctx) {
  if (m.method != Method::LogQ || !m.logq_at_inference) return {};
  std::vector<double> off(ctx.train_freq.size());
  const double total = static_cast<double>(std::max<std::int64_t>(ctx.total, 1));
  for (std::size_t i = 0; i < off.size(); ++i) {
    off[i] = -std::log(static_cast<double>(std::max<std::int64_t>(ctx.train_freq[i], 1)) / total);
  }
  return off;
}

}  // namespace cdnrec::baselines
