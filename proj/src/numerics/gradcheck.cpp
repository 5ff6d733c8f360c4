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

#include <cdnrec/numerics/gradcheck.hpp>

#include <cdnrec/errors.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace cdnrec {

namespace {

struct Probe {
  double loss;
  std::uint64_t pattern;
};

Probe evaluate(const std::function<ad::Var(ad::Tape&)>& loss, const ParamStore& params) {
  ad::Tape tape(params);
  const ad::Var l = loss(tape);
  return {l.scalar(), tape.relu_pattern_hash()};
}

}  // namespace

GradCheckReport check_gradients(const std::function<ad::Var(ad::Tape&)>& loss, ParamStore& params,
                                const GradCheckOptions& options) {
  if (!(options.epsilon > 0.0)) fail(ErrorCategory::Config, "check_gradients: epsilon must be > 0");

  params.zero_grad();
  std::uint64_t base_pattern = 0;
  {
    ad::Tape tape(params);
    const ad::Var l = loss(tape);
    base_pattern = tape.relu_pattern_hash();
    tape.backward(l);
  }

  // Snapshot analytic gradients and the eligible coordinates.
  struct Eligible {
    std::string name;
    std::vector<Index> rows;
    Index cols;
  };
  std::vector<Eligible> eligible;
  std::map<std::string, Matrix> analytic;
  std::size_t total = 0;
  for (auto& [name, slot] : params) {
    if (slot.frozen || slot.value.size() == 0) continue;
    Eligible e{name, {}, slot.value.cols()};
    if (slot.sparse) {
      e.rows = slot.touched_rows();
      std::sort(e.rows.begin(), e.rows.end());
    } else {
      e.rows.resize(static_cast<std::size_t>(slot.value.rows()));
      for (Index r = 0; r < slot.value.rows(); ++r) e.rows[static_cast<std::size_t>(r)] = r;
    }
    if (e.rows.empty()) continue;
    total += e.rows.size() * static_cast<std::size_t>(e.cols);
    analytic.emplace(name, slot.grad);
    eligible.push_back(std::move(e));
  }
  params.zero_grad();

  GradCheckReport report;
  if (total == 0) {
    report.passed = true;
    return report;
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  const std::size_t max_attempts = options.samples * 10 + 100;
  for (std::size_t attempt = 0; attempt < max_attempts && report.checked < options.samples; ++attempt) {
    std::size_t flat = pick(rng);
    const Eligible* e = nullptr;
    for (const auto& cand : eligible) {
      const std::size_t n = cand.rows.size() * static_cast<std::size_t>(cand.cols);
      if (flat < n) {
        e = &cand;
        break;
      }
      flat -= n;
    }
    const Index row = e->rows[flat / static_cast<std::size_t>(e->cols)];
    const Index col = static_cast<Index>(flat % static_cast<std::size_t>(e->cols));

    double& x = params.at(e->name).value(row, col);
    const double saved = x;
    x = saved + options.epsilon;
    const Probe plus = evaluate(loss, params);
    x = saved - options.epsilon;
    const Probe minus = evaluate(loss, params);
    x = saved;

    const GradCoordinate coord{e->name, row, col};
    if (plus.pattern != base_pattern || minus.pattern != base_pattern) {
      report.skipped_kinks.push_back(coord);
      continue;
    }
    const double numeric = (plus.loss - minus.loss) / (2.0 * options.epsilon);
    const double exact = analytic.at(e->name)(row, col);
    const double denom = std::max({std::abs(numeric), std::abs(exact), options.abs_floor});
    const double rel = std::abs(numeric - exact) / denom;
    ++report.checked;
    if (rel >= report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst = coord;
    }
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace cdnrec
