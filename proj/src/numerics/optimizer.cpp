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

#include <cdnrec/numerics/optimizer.hpp>

#include <cdnrec/errors.hpp>

#include <cmath>

namespace cdnrec {

void Sgd::step(ParamStore& params) {
  ++step_;
  for (auto& [name, slot] : params) {
    if (!slot.frozen && slot.has_grad()) {
      if (slot.sparse) {
        for (Index r : slot.touched_rows()) slot.value.row(r) -= lr_ * slot.grad.row(r);
      } else {
        slot.value -= lr_ * slot.grad;
      }
    }
    slot.zero_grad();
  }
}

void Adam::step(ParamStore& params) {
  ++step_;
  const double b1 = hyper_.beta1, b2 = hyper_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double lr = hyper_.learning_rate;
  const double eps = hyper_.epsilon;

  for (auto& [name, slot] : params) {
    if (slot.frozen || !slot.has_grad()) {
      slot.zero_grad();
      continue;
    }
    auto it = moments_.find(name);
    if (it == moments_.end()) {
      it = moments_
               .emplace(name, Moments{Matrix::Zero(slot.value.rows(), slot.value.cols()),
                                      Matrix::Zero(slot.value.rows(), slot.value.cols())})
               .first;
    }
    Moments& mo = it->second;
    auto update_rows = [&](Index r0, Index n) {
      auto g = slot.grad.middleRows(r0, n).array();
      auto m = mo.m.middleRows(r0, n).array();
      auto v = mo.v.middleRows(r0, n).array();
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.square();
      slot.value.middleRows(r0, n).array() -= lr * (m / c1) / ((v / c2).sqrt() + eps);
    };
    if (slot.sparse) {
      for (Index r : slot.touched_rows()) update_rows(r, 1);
    } else {
      update_rows(0, slot.value.rows());
    }
    slot.zero_grad();
  }
}

OptimizerState Adam::state() const {
  OptimizerState s;
  s.step = step_;
  for (const auto& [name, mo] : moments_) {
    s.tensors.emplace("m/" + name, mo.m);
    s.tensors.emplace("v/" + name, mo.v);
  }
  return s;
}

void Adam::load_state(const OptimizerState& s) {
  reset();
  step_ = s.step;
  for (const auto& [key, value] : s.tensors) {
    if (key.starts_with("m/")) {
      moments_[key.substr(2)].m = value;
    } else if (key.starts_with("v/")) {
      moments_[key.substr(2)].v = value;
    } else {
      fail(ErrorCategory::Data, "adam state: unexpected tensor '" + key + "'");
    }
  }
  for (const auto& [name, mo] : moments_) {
    if (mo.m.rows() != mo.v.rows() || mo.m.cols() != mo.v.cols()) {
      fail(ErrorCategory::Data, "adam state: moment shapes disagree for '" + name + "'");
    }
  }
}

void Adam::reset() {
  step_ = 0;
  moments_.clear();
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, const AdamHyper& hyper) {
  if (kind == OptimizerKind::Sgd) return std::make_unique<Sgd>(hyper.learning_rate);
  return std::make_unique<Adam>(hyper);
}

}  // namespace cdnrec
