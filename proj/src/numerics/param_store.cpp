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

#include <cdnrec/numerics/param_store.hpp>

#include <cdnrec/errors.hpp>

namespace cdnrec {

void ParamSlot::mark_row(Index row) {
  if (row_mark_.size() != static_cast<std::size_t>(value.rows())) {
    row_mark_.assign(static_cast<std::size_t>(value.rows()), 0);
  }
  if (!row_mark_[static_cast<std::size_t>(row)]) {
    row_mark_[static_cast<std::size_t>(row)] = 1;
    touched_.push_back(row);
  }
}

void ParamSlot::zero_grad() {
  if (dense_dirty_) {
    grad.setZero();
  } else {
    for (Index r : touched_) grad.row(r).setZero();
  }
  for (Index r : touched_) row_mark_[static_cast<std::size_t>(r)] = 0;
  touched_.clear();
  dense_dirty_ = false;
}

ParamSlot& ParamStore::add(const std::string& name, Matrix init, bool sparse) {
  if (slots_.contains(name)) fail(ErrorCategory::Config, "duplicate parameter slot '" + name + "'");
  if (!init.allFinite()) fail(ErrorCategory::Numeric, "non-finite initial value for '" + name + "'");
  ParamSlot slot;
  slot.grad = Matrix::Zero(init.rows(), init.cols());
  slot.value = std::move(init);
  slot.sparse = sparse;
  return slots_.emplace(name, std::move(slot)).first->second;
}

bool ParamStore::contains(std::string_view name) const { return slots_.find(name) != slots_.end(); }

ParamSlot& ParamStore::at(std::string_view name) {
  auto it = slots_.find(name);
  if (it == slots_.end()) fail(ErrorCategory::Config, "unknown parameter slot '" + std::string(name) + "'");
  return it->second;
}

const ParamSlot& ParamStore::at(std::string_view name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) fail(ErrorCategory::Config, "unknown parameter slot '" + std::string(name) + "'");
  return it->second;
}

std::size_t ParamStore::erase_prefix(std::string_view prefix) {
  std::size_t n = 0;
  for (auto it = slots_.begin(); it != slots_.end();) {
    if (std::string_view(it->first).starts_with(prefix)) {
      it = slots_.erase(it);
      ++n;
    } else {
      ++it;
    }
  }
  return n;
}

void ParamStore::set_frozen_prefix(std::string_view prefix, bool frozen) {
  for (auto& [name, slot] : slots_) {
    if (std::string_view(name).starts_with(prefix)) slot.frozen = frozen;
  }
}

void ParamStore::zero_grad() {
  for (auto& [_, slot] : slots_) slot.zero_grad();
}

std::size_t ParamStore::parameter_count() const { return parameter_count(""); }

std::size_t ParamStore::parameter_count(std::string_view prefix) const {
  std::size_t n = 0;
  for (const auto& [name, slot] : slots_) {
    if (std::string_view(name).starts_with(prefix)) n += static_cast<std::size_t>(slot.value.size());
  }
  return n;
}

}  // namespace cdnrec
