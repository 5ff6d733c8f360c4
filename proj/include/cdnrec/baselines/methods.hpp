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

#include <cdnrec/model/cdn_loss.hpp>
#include <cdnrec/model/config.hpp>
#include <cdnrec/model/schedule.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace cdnrec::baselines {

enum class Method { TwoTower, ClassBalance, LogQ, NDP, BBN, CDN, BDN, UDN, IDN, ExpertDesign };

/// Item tower designs compared under the CDN training scheme.
///   MemGen              memorization + generalization experts, frequency gate
///   HeadTail            two full-feature experts, hard 0/1 gate by head/tail tag
///   UnbalancedBalanced  two full-feature experts, expert 0 trained by the main
///                       stream, expert 1 by the rebalanced stream, soft gate
enum class ExpertDesign { UnbalancedBalanced, HeadTail, MemGen };

std::string_view to_string(Method m);
std::string_view to_string(ExpertDesign d);
Method parse_method(std::string_view name);
ExpertDesign parse_expert_design(std::string_view name);

struct MethodConfig {
  Method method = Method::CDN;
  double beta = 0.999;        // ClassBalance
  double gamma = 4.0;         // CDN, UDN, ExpertDesign
  double fixed_alpha = 0.5;   // BDN
  std::optional<int> stage2_epochs;  // NDP; default half the epoch budget
  ExpertDesign design = ExpertDesign::MemGen;
  bool logq_at_inference = false;

  void validate() const;
};

/// Methods that draw a second batch from the rebalanced stream every step.
bool uses_regularizer_stream(const MethodConfig& m);

/// Tower architecture for a method, derived from the shared base dimensions.
/// Plain towers use one full-feature expert with a constant gate. Expert
/// design variants resize their expert hidden layers so the item tower keeps
/// the parameter count of the base design on a catalog with n_feature_fields.
model::ModelConfig architecture_for(const MethodConfig& m, const model::ModelConfig& base,
                                    std::size_t n_feature_fields);

model::AdapterSchedule schedule_for(const MethodConfig& m, int total_epochs);

/// NDP epochs spent in stage 2 (item tower retrained on the rebalanced stream).
int ndp_stage2_epochs(const MethodConfig& m, int total_epochs);

/// Trainable parameter count of the item tower's experts and gate (embedding
/// tables excluded), for an item catalog with n_feature_fields feature fields.
std::int64_t item_tower_parameter_count(const model::ItemTowerConfig& item, std::size_t n_feature_fields);

/// In-batch softmax loss of a single-branch model, optionally with per-row
/// weights and a per-column logQ correction (candidate_probs[c] for column c).
ad::Var two_tower_loss(ad::Tape& tape, const model::TowerModel& model, const model::PairBatch& batch,
                       std::span<const double> row_weights = {}, std::span<const double> candidate_probs = {});

/// (1 - beta) / (1 - beta^n); beta = 0 gives 1.
double class_balance_raw_weight(std::int64_t n, double beta);
/// Raw weights of a batch's positives, rescaled to mean 1.
std::vector<double> class_balance_weights(std::span<const std::int64_t> freqs, double beta);

/// logits[r][c] - log q[c].
Matrix logq_correct(const Matrix& logits, std::span<const double> candidate_probs);
ad::Var logq_correct(ad::Var logits, std::span<const double> candidate_probs);

/// Training-set statistics some losses need.
struct LossContext {
  std::vector<std::int64_t> train_freq;
  std::int64_t total = 0;

  explicit LossContext(std::vector<std::int64_t> freq);
  double probability(Index item) const;
};

/// Per-step loss of any method except NDP's stage 2, which is a plain
/// two-tower loss on the rebalanced batch.
ad::Var method_loss(ad::Tape& tape, const model::TowerModel& model, const MethodConfig& m, const LossContext& ctx,
                    const model::PairBatch& main, const model::PairBatch& regularizer, double alpha);

/// Additive per-item serving offsets (-log q for logQ inference correction),
/// empty when the method scores with the plain dot product.
std::vector<double> serving_offsets(const MethodConfig& m, const LossContext& ctx);

}  // namespace cdnrec::baselines
