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

#include <cdnrec/model/cdn_loss.hpp>

#include <cdnrec/errors.hpp>

namespace cdnrec::model {

namespace {

void check_batch(const PairBatch& b, const char* which) {
  if (b.users.size() != b.items.size()) {
    fail(ErrorCategory::Shape, std::string(which) + " batch has " + std::to_string(b.users.size()) +
                                   " users but " + std::to_string(b.items.size()) + " items");
  }
  if (b.users.empty()) fail(ErrorCategory::Shape, std::string(which) + " batch is empty");
}

ad::Var branch_logits(ad::Tape& tape, const TowerModel& model, const PairBatch& b, Branch branch) {
  return ad::matmul_nt(model.user_embed(tape, b.users, branch), model.item_embed(tape, b.items, branch));
}

}  // namespace

ad::Var training_logits(ad::Tape& tape, const TowerModel& model, const PairBatch& main,
                        const PairBatch& regularizer, double alpha) {
  check_batch(main, "main");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCategory::Config, "alpha must lie in [0, 1]");
  if (alpha == 1.0) return branch_logits(tape, model, main, Branch::Main);
  check_batch(regularizer, "regularizer");
  if (regularizer.size() != main.size()) {
    fail(ErrorCategory::Shape, "batch size mismatch: main " + std::to_string(main.size()) + ", regularizer " +
                                   std::to_string(regularizer.size()));
  }
  if (alpha == 0.0) return branch_logits(tape, model, regularizer, Branch::Regularizer);

  // Both branches go through each tower in one pass, and the mixed logits
  // come from a single product: [a X_m, (1 - a) X_r] [Y_m, Y_r]^T.
  const auto [xm, xr] = model.user_embed_pair(tape, main.users, regularizer.users);
  const auto n = static_cast<Index>(main.size());
  ad::Var ym, yr;
  if (model.config().item.branch_routed) {
    ym = model.item_embed(tape, main.items, Branch::Main);
    yr = model.item_embed(tape, regularizer.items, Branch::Regularizer);
  } else {
    std::vector<Index> items = main.items;
    items.insert(items.end(), regularizer.items.begin(), regularizer.items.end());
    const ad::Var y = model.item_embed(tape, items, Branch::Main);
    ym = ad::slice_rows(y, 0, n);
    yr = ad::slice_rows(y, n, n);
  }
  const ad::Var x_parts[] = {alpha * xm, (1.0 - alpha) * xr};
  const ad::Var y_parts[] = {ym, yr};
  return ad::matmul_nt(ad::hconcat(x_parts), ad::hconcat(y_parts));
}

ad::Var cdn_loss(ad::Tape& tape, const TowerModel& model, const PairBatch& main, const PairBatch& regularizer,
                 double alpha) {
  const ad::Var logits = training_logits(tape, model, main, regularizer, alpha);
  // Row k of both batches is one pair, so the main and regularizer positives
  // sit on the same diagonal and the two weighted terms are one cross-entropy.
  const std::vector<double> ones(main.size(), 1.0);
  return ad::softmax_xent_inbatch(logits, ones);
}

}  // namespace cdnrec::model
