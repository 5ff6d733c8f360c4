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
#include <cdnrec/numerics/dense.hpp>

#include <string>
#include <vector>

namespace cdnrec::model {

/// Which item features an expert reads.
enum class FeatureGroup { Memorization, Generalization, All };

enum class GateKind {
  Constant,   // fixed uniform weights (a single expert gets weight 1)
  Frequency,  // softmax(W * one_hot(log2 frequency bucket))
  HeadTail,   // hard 0/1 routing from the head/tail tags
};

enum class Branch { Main, Regularizer };

struct ItemTowerConfig {
  std::vector<FeatureGroup> experts{FeatureGroup::Memorization, FeatureGroup::Generalization};
  std::vector<Index> expert_hidden_dims{32};
  Index id_dim = 16;
  Index feature_dim = 16;
  Index output_dim = 16;
  GateKind gate = GateKind::Frequency;
  int freq_buckets = 16;
  /// Expert k only learns from branch k (expert 0 <- main, expert 1 <- regularizer).
  bool branch_routed = false;

  std::size_t n_mem() const;
  std::size_t n_gen() const;
  void validate() const;
};

struct UserTowerConfig {
  Index embedding_dim = 16;
  std::vector<Index> shared_dims{32, 32};  // f
  Index branch_hidden = 32;                // h_m, h_r hidden width
  Index output_dim = 16;
  bool bilateral = true;

  void validate() const;
};

struct ModelConfig {
  ItemTowerConfig item;
  UserTowerConfig user;

  void validate() const;
};

/// Memorization vs generalization feature names of a catalog. The item id is
/// the only memorization feature; it is unique per item by construction of the
/// vocabulary. Every catalog feature field is a generalization feature.
struct ItemFeatureSplit {
  std::vector<std::string> memorization;
  std::vector<std::string> generalization;

  static ItemFeatureSplit from_catalog(const data::Catalog& catalog);
};

/// log2 bucket of an item frequency: 0 -> 0, f >= 1 -> min(B - 1, 1 + floor(log2 f)).
int frequency_bucket(std::int64_t freq, int buckets);

}  // namespace cdnrec::model
