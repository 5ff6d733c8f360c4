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

#include <cdnrec/data/interaction.hpp>
#include <cdnrec/model/config.hpp>
#include <cdnrec/numerics/param_store.hpp>
#include <cdnrec/numerics/tape.hpp>

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cdnrec::model {

/// Per-item inputs derived from training statistics: the frequency bucket
/// fed to the gate and the head/tail tag used by hard routing.
struct ItemSideInfo {
  std::vector<Index> freq_bucket;
  std::vector<char> is_head;

  static ItemSideInfo from_stats(const data::CatalogStats& stats, int freq_buckets);
};

/// Item tower (gated experts over memorization / generalization features) and
/// user tower (shared network f with main and regularizer heads h_m, h_r).
///
/// The model holds structure only; parameters live in a ParamStore so that a
/// frozen snapshot can be scored while another copy trains. Parameter names:
///
///   item.id_emb, item.feat.<field>     embedding tables (sparse)
///   item.expert<k>.layer<j>.{w,b}      expert MLPs
///   item.gate.w                        freq_buckets x n_experts
///   user.id_emb                        (sparse)
///   user.f.layer<j>.{w,b}              shared user network
///   user.h_m.layer<j>.{w,b}            main head
///   user.h_r.layer<j>.{w,b}            regularizer head (bilateral only)
class TowerModel {
 public:
  TowerModel(ModelConfig config, std::shared_ptr<const data::Catalog> catalog, ItemSideInfo side);

  const ModelConfig& config() const { return config_; }
  const data::Catalog& catalog() const { return *catalog_; }
  const ItemSideInfo& side_info() const { return side_; }
  std::size_t n_experts() const { return config_.item.experts.size(); }

  /// Adds freshly initialized slots. Each slot draws from its own stream
  /// seeded by (seed, slot name), so models that share slot names start from
  /// identical values for those slots.
  void init(ParamStore& params, std::uint64_t seed) const;

  ad::Var gate_weights(ad::Tape& tape, std::span<const Index> items) const;
  ad::Var expert_output(ad::Tape& tape, std::size_t expert, std::span<const Index> items) const;
  ad::Var item_embed(ad::Tape& tape, std::span<const Index> items, Branch branch = Branch::Main) const;
  ad::Var user_embed(ad::Tape& tape, std::span<const Index> users, Branch branch = Branch::Main) const;
  /// Main-branch embeddings of `main` and regularizer-branch embeddings of
  /// `regularizer`, with the shared network run once over both.
  std::pair<ad::Var, ad::Var> user_embed_pair(ad::Tape& tape, std::span<const Index> main,
                                              std::span<const Index> regularizer) const;

  // Frozen-snapshot helpers (no gradients).
  Matrix item_embeddings(const ParamStore& params, std::span<const Index> items) const;
  Matrix all_item_embeddings(const ParamStore& params) const;
  Matrix user_embeddings(const ParamStore& params, std::span<const Index> users,
                         Branch branch = Branch::Main) const;
  Matrix gate_matrix(const ParamStore& params, std::span<const Index> items) const;
  /// Serving score: main-branch user embedding . item embedding.
  double score(const ParamStore& params, Index user, Index item) const;

  static bool is_sparse_slot(const std::string& name);
  static constexpr std::string_view kRegularizerPrefix = "user.h_r.";
  static constexpr std::string_view kUserPrefix = "user.";
  static constexpr std::string_view kItemPrefix = "item.";

 private:
  ad::Var mlp(ad::Tape& tape, ad::Var x, const std::string& prefix, std::size_t n_layers) const;
  ad::Var shared_user(ad::Tape& tape, std::span<const Index> users) const;
  ad::Var expert_input(ad::Tape& tape, FeatureGroup group, std::span<const Index> items) const;
  Index generalization_width() const;
  void check_items(std::span<const Index> items) const;
  void check_users(std::span<const Index> users) const;

  ModelConfig config_;
  std::shared_ptr<const data::Catalog> catalog_;
  ItemSideInfo side_;
};

}  // namespace cdnrec::model
