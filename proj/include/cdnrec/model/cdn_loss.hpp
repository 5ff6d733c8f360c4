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

#include <cdnrec/model/tower_model.hpp>

#include <vector>

namespace cdnrec::model {

/// Row-aligned (user, item) positives; row k's positive candidate is column k.
struct PairBatch {
  std::vector<Index> users;
  std::vector<Index> items;

  std::size_t size() const { return users.size(); }
};

/// B x B in-batch logits  alpha * X_m Y_m^T + (1 - alpha) * X_r Y_r^T.
/// Main rows use the main user head, regularizer rows the regularizer head;
/// both branches share the item tower. At alpha == 1 the regularizer batch is
/// not evaluated at all.
ad::Var training_logits(ad::Tape& tape, const TowerModel& model, const PairBatch& main,
                        const PairBatch& regularizer, double alpha);

/// alpha * xent(L, main positives) + (1 - alpha) * xent(L, regularizer positives),
/// each a batch mean, with L from training_logits.
ad::Var cdn_loss(ad::Tape& tape, const TowerModel& model, const PairBatch& main,
                 const PairBatch& regularizer, double alpha);

}  // namespace cdnrec::model
