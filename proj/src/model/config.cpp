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

#include <cdnrec/model/config.hpp>

#include <cdnrec/errors.hpp>

#include <algorithm>
#include <bit>

namespace cdnrec::model {

std::size_t ItemTowerConfig::n_mem() const {
  return static_cast<std::size_t>(std::count(experts.begin(), experts.end(), FeatureGroup::Memorization));
}

std::size_t ItemTowerConfig::n_gen() const {
  return static_cast<std::size_t>(std::count(experts.begin(), experts.end(), FeatureGroup::Generalization));
}

void ItemTowerConfig::validate() const {
  if (experts.empty()) fail(ErrorCategory::Config, "item tower needs at least one expert");
  if (id_dim <= 0 || feature_dim <= 0 || output_dim <= 0 || freq_buckets <= 0) {
    fail(ErrorCategory::Config, "item tower dimensions must be positive");
  }
  for (Index h : expert_hidden_dims) {
    if (h <= 0) fail(ErrorCategory::Config, "expert hidden dims must be positive");
  }
  if (gate == GateKind::HeadTail && experts.size() != 2) {
    fail(ErrorCategory::Config, "head/tail gating needs exactly two experts");
  }
  if (branch_routed && experts.size() != 2) fail(ErrorCategory::Config, "branch routing needs exactly two experts");
  // Either every expert reads all features, or the tower is a mem/gen split
  // with at least one expert of each kind.
  const std::size_t n_split = n_mem() + n_gen();
  if (n_split > 0 && (n_split != experts.size() || n_mem() == 0 || n_gen() == 0)) {
    fail(ErrorCategory::Config, "a memorization/generalization tower needs n_mem >= 1 and n_gen >= 1");
  }
}

void UserTowerConfig::validate() const {
  if (embedding_dim <= 0 || branch_hidden <= 0 || output_dim <= 0) {
    fail(ErrorCategory::Config, "user tower dimensions must be positive");
  }
  for (Index h : shared_dims) {
    if (h <= 0) fail(ErrorCategory::Config, "user shared dims must be positive");
  }
}

void ModelConfig::validate() const {
  item.validate();
  user.validate();
  if (item.output_dim != user.output_dim) {
    fail(ErrorCategory::Config, "user and item towers must share output_dim");
  }
}

ItemFeatureSplit ItemFeatureSplit::from_catalog(const data::Catalog& catalog) {
  catalog.validate();
  if (catalog.items.ids().size() != catalog.n_items()) {
    fail(ErrorCategory::Data, "item id feature is not injective");
  }
  ItemFeatureSplit s;
  s.memorization.push_back("item_id");
  for (const auto& f : catalog.item_features) {
    if (std::find(s.generalization.begin(), s.generalization.end(), f.name) != s.generalization.end()) {
      fail(ErrorCategory::Data, "duplicate feature field '" + f.name + "'");
    }
    s.generalization.push_back(f.name);
  }
  return s;
}

int frequency_bucket(std::int64_t freq, int buckets) {
  if (freq <= 0) return 0;
  const int log2 = std::bit_width(static_cast<std::uint64_t>(freq)) - 1;
  return std::min(buckets - 1, 1 + log2);
}

}  // namespace cdnrec::model
