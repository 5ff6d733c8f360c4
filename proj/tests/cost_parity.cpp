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

// Training cost parity: a CDN epoch should cost at most 1.5x a two-tower
// epoch at the same batch size on the same data. Epoch 0 is a warm-up for
// both (CDN runs it at alpha = 1); epochs 1 and 2 are timed.

#include <cdnrec/data/synth.hpp>
#include <cdnrec/training/trainer.hpp>

#include <chrono>
#include <cstdio>

using namespace cdnrec;

namespace {

constexpr double kBound = 1.5;

double seconds_per_epoch(const data::PreparedDataset& data, baselines::Method m) {
  baselines::MethodConfig mc;
  mc.method = m;
  train::TrainConfig tc;
  tc.batch_size = 256;
  tc.epochs = 10;
  tc.adam.learning_rate = 0.003;
  tc.eval_every = 0;
  train::Trainer t(data, model::ModelConfig{}, mc, tc);
  t.run_epoch();
  const auto t0 = std::chrono::steady_clock::now();
  t.run_epoch();
  t.run_epoch();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 2.0;
}

}  // namespace

int main() {
  const data::PreparedDataset data = data::prepare_dataset(data::synth_zipf({}), {}, 0.2, 1);
  const double tt = seconds_per_epoch(data, baselines::Method::TwoTower);
  const double cdn = seconds_per_epoch(data, baselines::Method::CDN);
  const double ratio = cdn / tt;
  std::printf("%s  cost parity: two-tower %.3fs/epoch, cdn %.3fs/epoch, ratio %.2f (bound %.1f)\n",
              ratio <= kBound ? "PASS" : "FAIL", tt, cdn, ratio, kBound);
  return ratio <= kBound ? 0 : 1;
}
