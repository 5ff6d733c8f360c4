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

#include <cdnrec/errors.hpp>
#include <cdnrec/numerics/dense.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace cdnrec::eval {

/// 1-based rank of target among all candidates not listed in exclusions
/// (sorted ascending, must not contain target). Higher score ranks first;
/// equal scores rank by ascending index.
template <class Scalar>
Index rank_of_target(std::span<const Scalar> scores, Index target, std::span<const Index> exclusions = {}) {
  const auto n = static_cast<Index>(scores.size());
  if (target < 0 || target >= n) fail(ErrorCategory::Data, "unknown target item " + std::to_string(target));
  if (std::binary_search(exclusions.begin(), exclusions.end(), target)) {
    fail(ErrorCategory::Data, "target item " + std::to_string(target) + " is excluded");
  }
  const Scalar st = scores[static_cast<std::size_t>(target)];
  Index rank = 1;
  auto ex = exclusions.begin();
  for (Index j = 0; j < n; ++j) {
    while (ex != exclusions.end() && *ex < j) ++ex;
    if (ex != exclusions.end() && *ex == j) continue;
    const Scalar s = scores[static_cast<std::size_t>(j)];
    if (s > st || (s == st && j < target)) ++rank;
  }
  return rank;
}

struct RankingMetrics {
  double hr = 0.0;
  double ndcg = 0.0;
};

/// HR@K and NDCG@K as fractions; NDCG gain of one event is 1/log2(rank + 1)
/// when rank <= K.
inline RankingMetrics hr_ndcg_at_k(std::span<const Index> ranks, int k) {
  if (k < 1) fail(ErrorCategory::Config, "K must be at least 1");
  if (ranks.empty()) fail(ErrorCategory::Data, "no ranks to aggregate");
  RankingMetrics m;
  for (Index r : ranks) {
    if (r < 1) fail(ErrorCategory::Data, "ranks start at 1");
    if (r <= k) {
      m.hr += 1.0;
      m.ndcg += 1.0 / std::log2(static_cast<double>(r) + 1.0);
    }
  }
  m.hr /= static_cast<double>(ranks.size());
  m.ndcg /= static_cast<double>(ranks.size());
  return m;
}

}  // namespace cdnrec::eval
