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

#include <cdnrec/numerics/dense.hpp>

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cdnrec {

/// A learnable array and its gradient accumulator.
///
/// Sparse slots (embedding tables) only accumulate gradient into rows that were
/// gathered; the touched-row list lets optimizers skip the rest of the table.
struct ParamSlot {
  Matrix value;
  Matrix grad;
  bool sparse = false;
  bool frozen = false;

  void mark_row(Index row);
  void mark_dense() { dense_dirty_ = true; }
  const std::vector<Index>& touched_rows() const { return touched_; }
  bool has_grad() const { return dense_dirty_ || !touched_.empty(); }
  void zero_grad();

 private:
  std::vector<Index> touched_;
  std::vector<char> row_mark_;
  bool dense_dirty_ = false;
};

/// Named parameter slots in deterministic (lexicographic) order.
class ParamStore {
 public:
  ParamSlot& add(const std::string& name, Matrix init, bool sparse = false);

  bool contains(std::string_view name) const;
  ParamSlot& at(std::string_view name);
  const ParamSlot& at(std::string_view name) const;

  /// Removes every slot whose name starts with `prefix`; returns the count.
  std::size_t erase_prefix(std::string_view prefix);
  void set_frozen_prefix(std::string_view prefix, bool frozen);

  void zero_grad();
  std::size_t parameter_count() const;
  std::size_t parameter_count(std::string_view prefix) const;

  auto begin() { return slots_.begin(); }
  auto end() { return slots_.end(); }
  auto begin() const { return slots_.begin(); }
  auto end() const { return slots_.end(); }
  std::size_t size() const { return slots_.size(); }

 private:
  std::map<std::string, ParamSlot, std::less<>> slots_;
};

}  // namespace cdnrec
