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

#include <cdnrec/numerics/tape.hpp>

#include <cdnrec/errors.hpp>

#include <cmath>
#include <string>

namespace cdnrec::ad {

namespace {

[[noreturn]] void shape_error(std::string_view op, const Matrix& a, const Matrix& b) {
  fail(ErrorCategory::Shape, std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                                 shape_string(b));
}

void same_tape(Var a, Var b, std::string_view op) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    fail(ErrorCategory::Shape, std::string(op) + ": operands belong to different tapes");
  }
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) fail(ErrorCategory::Shape, "scalar(): node has shape " + shape_string(v));
  return v(0, 0);
}

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad && records_gradients(),
                        std::move(backward)});
  return Var(this, nodes_.size() - 1);
}

const ParamSlot& Tape::lookup(std::string_view name) const {
  if (const_params_ == nullptr) fail(ErrorCategory::Config, "tape has no parameter store");
  return const_params_->at(name);
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::param(std::string_view name) {
  const ParamSlot& slot = lookup(name);
  if (params_ == nullptr || slot.frozen) return push(slot.value, false, nullptr);
  ParamSlot* target = &params_->at(name);
  return push(slot.value, true, [target](Tape& t, std::size_t self) {
    target->grad += t.grad(self);
    target->mark_dense();
  });
}

Var Tape::gather_rows(std::string_view table, std::span<const Index> rows) {
  const ParamSlot& slot = lookup(table);
  Matrix out(static_cast<Index>(rows.size()), slot.value.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const Index r = rows[k];
    if (r < 0 || r >= slot.value.rows()) {
      fail(ErrorCategory::Shape, "gather_rows: row " + std::to_string(r) + " outside table '" +
                                     std::string(table) + "' of shape " + shape_string(slot.value));
    }
    out.row(static_cast<Index>(k)) = slot.value.row(r);
  }
  if (params_ == nullptr || slot.frozen) return push(std::move(out), false, nullptr);
  ParamSlot* target = &params_->at(table);
  std::vector<Index> idx(rows.begin(), rows.end());
  return push(std::move(out), true, [target, idx = std::move(idx)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      target->grad.row(idx[k]) += g.row(static_cast<Index>(k));
      target->mark_row(idx[k]);
    }
  });
}

Var Tape::gather_bags(std::string_view table, const BagIndex& bags, std::span<const Index> which) {
  const ParamSlot& slot = lookup(table);
  const Index n_bags = static_cast<Index>(bags.offsets.size()) - 1;
  Matrix out = Matrix::Zero(static_cast<Index>(which.size()), slot.value.cols());
  for (std::size_t k = 0; k < which.size(); ++k) {
    const Index b = which[k];
    if (b < 0 || b >= n_bags) {
      fail(ErrorCategory::Shape, "gather_bags: bag " + std::to_string(b) + " out of range " +
                                     std::to_string(n_bags));
    }
    const auto lo = bags.offsets[static_cast<std::size_t>(b)];
    const auto hi = bags.offsets[static_cast<std::size_t>(b) + 1];
    if (hi == lo) continue;
    for (auto j = lo; j < hi; ++j) {
      const Index r = bags.values[j];
      if (r >= slot.value.rows()) {
        fail(ErrorCategory::Shape, "gather_bags: value " + std::to_string(r) + " outside table '" +
                                       std::string(table) + "'");
      }
      out.row(static_cast<Index>(k)) += slot.value.row(r);
    }
    out.row(static_cast<Index>(k)) /= static_cast<double>(hi - lo);
  }
  if (params_ == nullptr || slot.frozen) return push(std::move(out), false, nullptr);
  ParamSlot* target = &params_->at(table);
  std::vector<Index> idx(which.begin(), which.end());
  return push(std::move(out), true,
              [target, bags, idx = std::move(idx)](Tape& t, std::size_t self) {
                const Matrix& g = t.grad(self);
                for (std::size_t k = 0; k < idx.size(); ++k) {
                  const auto lo = bags.offsets[static_cast<std::size_t>(idx[k])];
                  const auto hi = bags.offsets[static_cast<std::size_t>(idx[k]) + 1];
                  if (hi == lo) continue;
                  const double w = 1.0 / static_cast<double>(hi - lo);
                  for (auto j = lo; j < hi; ++j) {
                    target->grad.row(bags.values[j]) += w * g.row(static_cast<Index>(k));
                    target->mark_row(bags.values[j]);
                  }
                }
              });
}

void Tape::backward(Var loss) {
  if (&loss.tape() != this) fail(ErrorCategory::Shape, "backward: loss node is not on this tape");
  if (loss.value().size() != 1) {
    fail(ErrorCategory::Shape, "backward: loss must be 1x1, got " + shape_string(loss.value()));
  }
  if (!records_gradients()) return;
  for (auto& n : nodes_) n.grad.resize(0, 0);
  Node& root = nodes_[loss.id()];
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, i);
  }
}

// ---------------------------------------------------------------------------

Var matmul(Var a, Var b) {
  same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  Tape& t = a.tape();
  const auto ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value();
  return t.push(std::move(out), t.requires_grad(ia) || t.requires_grad(ib),
                [ia, ib](Tape& t, std::size_t self) {
                  const Matrix& g = t.grad(self);
                  if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
                  if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
                });
}

Var matmul_nt(Var a, Var b) {
  same_tape(a, b, "matmul_nt");
  if (a.cols() != b.cols()) shape_error("matmul_nt", a.value(), b.value());
  Tape& t = a.tape();
  const auto ia = a.id(), ib = b.id();
  Matrix out = a.value() * b.value().transpose();
  return t.push(std::move(out), t.requires_grad(ia) || t.requires_grad(ib),
                [ia, ib](Tape& t, std::size_t self) {
                  const Matrix& g = t.grad(self);
                  if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib));
                  if (t.requires_grad(ib)) t.accumulate(ib, g.transpose() * t.value(ia));
                });
}

Var add(Var a, Var b) {
  same_tape(a, b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", a.value(), b.value());
  Tape& t = a.tape();
  const auto ia = a.id(), ib = b.id();
  Matrix out = a.value() + b.value();
  return t.push(std::move(out), t.requires_grad(ia) || t.requires_grad(ib),
                [ia, ib](Tape& t, std::size_t self) {
                  t.accumulate(ia, t.grad(self));
                  t.accumulate(ib, t.grad(self));
                });
}

Var add_bias(Var a, Var row) {
  same_tape(a, row, "add_bias");
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("add_bias", a.value(), row.value());
  Tape& t = a.tape();
  const auto ia = a.id(), ir = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.push(std::move(out), t.requires_grad(ia) || t.requires_grad(ir),
                [ia, ir](Tape& t, std::size_t self) {
                  t.accumulate(ia, t.grad(self));
                  if (t.requires_grad(ir)) t.accumulate(ir, t.grad(self).colwise().sum());
                });
}

Var relu(Var a) {
  Tape& t = a.tape();
  const auto ia = a.id();
  const Matrix& x = a.value();
  Matrix out = x.cwiseMax(0.0);
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (Index k = 0; k < x.size(); ++k) {
    h = (h ^ static_cast<std::uint64_t>(x.data()[k] > 0.0)) * 0x100000001b3ULL;
  }
  t.mix_relu_pattern(h);
  return t.push(std::move(out), t.requires_grad(ia), [ia](Tape& t, std::size_t self) {
    const Matrix& x = t.value(ia);
    t.accumulate(ia, (x.array() > 0.0).select(t.grad(self), 0.0).matrix());
  });
}

Var hconcat(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorCategory::Shape, "hconcat: no operands");
  Tape& t = parts.front().tape();
  const Index rows = parts.front().rows();
  Index cols = 0;
  bool needs = false;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    same_tape(parts.front(), p, "hconcat");
    if (p.rows() != rows) shape_error("hconcat", parts.front().value(), p.value());
    cols += p.cols();
    needs = needs || t.requires_grad(p.id());
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return t.push(std::move(out), needs, [ids = std::move(ids)](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    Index c = 0;
    for (auto id : ids) {
      const Index w = t.value(id).cols();
      if (t.requires_grad(id)) t.accumulate(id, g.middleCols(c, w));
      c += w;
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = a.tape();
  const auto ia = a.id();
  Matrix out = s * a.value();
  return t.push(std::move(out), t.requires_grad(ia),
                [ia, s](Tape& t, std::size_t self) { t.accumulate(ia, s * t.grad(self)); });
}

Var add_scalar(Var a, double s) {
  Tape& t = a.tape();
  const auto ia = a.id();
  Matrix out = a.value().array() + s;
  return t.push(std::move(out), t.requires_grad(ia),
                [ia](Tape& t, std::size_t self) { t.accumulate(ia, t.grad(self)); });
}

Var softmax_rows(Var a) {
  Tape& t = a.tape();
  const auto ia = a.id();
  Matrix out = cdnrec::softmax_rows(a.value());
  return t.push(std::move(out), t.requires_grad(ia), [ia](Tape& t, std::size_t self) {
    const Matrix& p = t.value(self);
    const Matrix& g = t.grad(self);
    const Vector dot = (g.array() * p.array()).rowwise().sum();
    Matrix dx = p.array() * (g.colwise() - dot).array();
    t.accumulate(ia, dx);
  });
}

Var mul_col(Var a, Var col) {
  same_tape(a, col, "mul_col");
  if (col.cols() != 1 || col.rows() != a.rows()) shape_error("mul_col", a.value(), col.value());
  Tape& t = a.tape();
  const auto ia = a.id(), ic = col.id();
  Matrix out = a.value().array().colwise() * col.value().col(0).array();
  return t.push(std::move(out), t.requires_grad(ia) || t.requires_grad(ic),
                [ia, ic](Tape& t, std::size_t self) {
                  const Matrix& g = t.grad(self);
                  if (t.requires_grad(ia)) {
                    Matrix da = g.array().colwise() * t.value(ic).col(0).array();
                    t.accumulate(ia, da);
                  }
                  if (t.requires_grad(ic)) {
                    Matrix dc = (g.array() * t.value(ia).array()).rowwise().sum();
                    t.accumulate(ic, dc);
                  }
                });
}

Var slice_cols(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    fail(ErrorCategory::Shape, "slice_cols: range [" + std::to_string(start) + ", " +
                                   std::to_string(start + count) + ") outside " +
                                   shape_string(a.value()));
  }
  Tape& t = a.tape();
  const auto ia = a.id();
  Matrix out = a.value().middleCols(start, count);
  return t.push(std::move(out), t.requires_grad(ia), [ia, start](Tape& t, std::size_t self) {
    t.accumulate_block(ia, 0, start, t.grad(self));
  });
}

Var slice_rows(Var a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    fail(ErrorCategory::Shape, "slice_rows: range [" + std::to_string(start) + ", " +
                                   std::to_string(start + count) + ") outside " +
                                   shape_string(a.value()));
  }
  Tape& t = a.tape();
  const auto ia = a.id();
  Matrix out = a.value().middleRows(start, count);
  return t.push(std::move(out), t.requires_grad(ia), [ia, start](Tape& t, std::size_t self) {
    t.accumulate_block(ia, start, 0, t.grad(self));
  });
}

Var detach(Var a) { return a.tape().constant(a.value()); }

Var softmax_xent(Var logits, std::span<const Index> targets, std::span<const double> weights) {
  const Matrix& l = logits.value();
  const Index rows = l.rows();
  if (static_cast<Index>(targets.size()) != rows || static_cast<Index>(weights.size()) != rows) {
    fail(ErrorCategory::Shape, "softmax_xent: logits " + shape_string(l) + " with " +
                                   std::to_string(targets.size()) + " targets and " +
                                   std::to_string(weights.size()) + " weights");
  }
  if (!l.allFinite()) fail(ErrorCategory::Numeric, "softmax_xent: non-finite logits");
  double wsum = 0.0;
  for (Index r = 0; r < rows; ++r) {
    if (targets[r] < 0 || targets[r] >= l.cols()) {
      fail(ErrorCategory::Shape, "softmax_xent: target column " + std::to_string(targets[r]) +
                                     " outside " + shape_string(l));
    }
    if (!(weights[r] >= 0.0)) fail(ErrorCategory::Numeric, "softmax_xent: negative row weight");
    wsum += weights[r];
  }
  if (!(wsum > 0.0)) fail(ErrorCategory::Numeric, "softmax_xent: row weights sum to zero");

  Matrix prob(rows, l.cols());
  double loss = 0.0;
  for (Index r = 0; r < rows; ++r) {
    const double m = l.row(r).maxCoeff();
    prob.row(r) = (l.row(r).array() - m).exp().matrix();
    const double s = prob.row(r).sum();
    prob.row(r) /= s;
    loss -= weights[r] * (l(r, targets[r]) - m - std::log(s));
  }
  loss /= wsum;

  Tape& t = logits.tape();
  const auto il = logits.id();
  std::vector<Index> tg(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  Matrix out(1, 1);
  out(0, 0) = loss;
  return t.push(std::move(out), t.requires_grad(il),
                [il, prob = std::move(prob), tg = std::move(tg), w = std::move(w), wsum](Tape& t, std::size_t self) {
                  const double g = t.grad(self)(0, 0);
                  Matrix d = prob;
                  for (Index r = 0; r < d.rows(); ++r) {
                    d(r, tg[static_cast<std::size_t>(r)]) -= 1.0;
                    d.row(r) *= g * w[static_cast<std::size_t>(r)] / wsum;
                  }
                  t.accumulate(il, d);
                });
}

Var softmax_xent_inbatch(Var logits, std::span<const double> weights) {
  if (logits.rows() != logits.cols()) {
    fail(ErrorCategory::Shape, "softmax_xent_inbatch: logits must be square, got " +
                                   shape_string(logits.value()));
  }
  std::vector<Index> diag(static_cast<std::size_t>(logits.rows()));
  for (std::size_t r = 0; r < diag.size(); ++r) diag[r] = static_cast<Index>(r);
  return softmax_xent(logits, diag, weights);
}

}  // namespace cdnrec::ad
