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

#include <cdnrec/numerics/param_store.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <string>

namespace cdnrec {

struct AdamHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Optimizer state that has to survive a checkpoint round trip.
struct OptimizerState {
  std::int64_t step = 0;
  std::map<std::string, Matrix> tensors;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update from the accumulated gradients, then zeroes them.
  /// Frozen slots are skipped (their gradients are still cleared).
  virtual void step(ParamStore& params) = 0;
  virtual OptimizerState state() const = 0;
  virtual void load_state(const OptimizerState& state) = 0;
  virtual void reset() = 0;
};

class Sgd final : public Optimizer {
 public:
  explicit Sgd(double learning_rate) : lr_(learning_rate) {}
  void step(ParamStore& params) override;
  OptimizerState state() const override { return {step_, {}}; }
  void load_state(const OptimizerState& s) override { step_ = s.step; }
  void reset() override { step_ = 0; }

 private:
  double lr_;
  std::int64_t step_ = 0;
};

/// Adam with bias correction. Sparse slots are updated lazily: only rows that
/// received gradient this step move, and their moments are the only ones
/// touched. The bias-correction step count is global.
class Adam final : public Optimizer {
 public:
  explicit Adam(AdamHyper hyper = {}) : hyper_(hyper) {}
  void step(ParamStore& params) override;
  OptimizerState state() const override;
  void load_state(const OptimizerState& s) override;
  void reset() override;

  const AdamHyper& hyper() const { return hyper_; }

 private:
  struct Moments {
    Matrix m, v;
  };
  AdamHyper hyper_;
  std::int64_t step_ = 0;
  std::map<std::string, Moments, std::less<>> moments_;
};

enum class OptimizerKind { Sgd, Adam };

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, const AdamHyper& hyper);

}  // namespace cdnrec
