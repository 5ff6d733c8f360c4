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
#include <cdnrec/numerics/param_store.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace cdnrec::ad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Variable-length index lists in CSR form, one list per row (e.g. an item's genres).
struct BagIndex {
  std::span<const std::uint32_t> offsets;  // size = number of bags + 1
  std::span<const std::uint32_t> values;
};

/// Reverse-mode tape over a fixed operator set.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order and backward() is a single reverse sweep. A tape built on
/// a mutable ParamStore accumulates gradients into it; a tape built on a const
/// store (or no store) records values only.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  explicit Tape(ParamStore& params) : params_(&params), const_params_(&params) {}
  explicit Tape(const ParamStore& params) : const_params_(&params) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(std::string_view name);
  Var gather_rows(std::string_view table, std::span<const Index> rows);
  /// Mean of the gathered rows per bag; an empty bag yields a zero row.
  Var gather_bags(std::string_view table, const BagIndex& bags, std::span<const Index> which);

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. Parameter
  /// gradients are added into the ParamStore slots.
  void backward(Var loss);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  bool records_gradients() const { return params_ != nullptr; }

  /// Hash of every relu activation pattern recorded so far; used to detect
  /// finite-difference probes that cross a kink.
  std::uint64_t relu_pattern_hash() const { return relu_hash_; }

  // Operator plumbing (used by the free functions below).
  Var push(Matrix value, bool requires_grad, Backward backward);
  template <typename Derived>
  void accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g);
  template <typename Derived>
  void accumulate_block(std::size_t id, Index row, Index col, const Eigen::MatrixBase<Derived>& g);
  const Matrix& grad(std::size_t id) const { return nodes_[id].grad; }
  void mix_relu_pattern(std::uint64_t h) { relu_hash_ = (relu_hash_ ^ h) * 0x100000001b3ULL; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  const ParamSlot& lookup(std::string_view name) const;

  ParamStore* params_ = nullptr;
  const ParamStore* const_params_ = nullptr;
  std::vector<Node> nodes_;
  std::uint64_t relu_hash_ = 0xcbf29ce484222325ULL;
};

template <typename Derived>
void Tape::accumulate(std::size_t id, const Eigen::MatrixBase<Derived>& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

template <typename Derived>
void Tape::accumulate_block(std::size_t id, Index row, Index col, const Eigen::MatrixBase<Derived>& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  n.grad.block(row, col, g.rows(), g.cols()) += g;
}

// Forward primitives. Each validates shapes and throws Error{Shape} naming the
// op and operand shapes on mismatch.
Var matmul(Var a, Var b);          // a * b
Var matmul_nt(Var a, Var b);       // a * b^T
Var add(Var a, Var b);             // elementwise, equal shapes
Var add_bias(Var a, Var row);      // a + 1 * row, row is 1 x cols(a)
Var relu(Var a);                   // subgradient 0 at 0
Var hconcat(std::span<const Var> parts);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var softmax_rows(Var a);
Var mul_col(Var a, Var col);       // row r of a scaled by col(r, 0)
Var slice_cols(Var a, Index start, Index count);
Var slice_rows(Var a, Index start, Index count);
Var detach(Var a);                 // same value, no gradient flow

/// -sum_r w_r log softmax(logits_r)[target_r] / sum_r w_r, as a 1x1 node.
Var softmax_xent(Var logits, std::span<const Index> targets, std::span<const double> weights);
/// In-batch form: square logits, row r's positive is column r.
Var softmax_xent_inbatch(Var logits, std::span<const double> weights);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace cdnrec::ad
