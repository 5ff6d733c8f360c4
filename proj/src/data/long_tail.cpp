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

#include <cdnrec/data/long_tail.hpp>

#include <cdnrec/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cdnrec::data {

CatalogStats build_stats(const InteractionLog& log) {
  if (log.empty()) fail(ErrorCategory::Data, "build_stats: empty interaction log");
  CatalogStats s;
  const std::size_t n = log.n_items();
  s.freq.assign(n, 0);
  for (const auto& x : log.interactions) {
    if (x.label == 1) ++s.freq.at(x.item);
  }
  s.order.resize(n);
  std::iota(s.order.begin(), s.order.end(), 0u);
  std::stable_sort(s.order.begin(), s.order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return s.freq[a] > s.freq[b]; });
  s.rank.resize(n);
  for (std::size_t r = 0; r < n; ++r) s.rank[s.order[r]] = static_cast<std::uint32_t>(r);
  s.slice.assign(n, Slice::Tail);

  std::int64_t max_f = 0, min_pos = 0;
  for (auto f : s.freq) {
    max_f = std::max(max_f, f);
    if (f > 0 && (min_pos == 0 || f < min_pos)) min_pos = f;
  }
  if (min_pos == 0) fail(ErrorCategory::Data, "build_stats: log has no positive interactions");
  s.imbalance_factor = static_cast<double>(max_f) / static_cast<double>(min_pos);
  return s;
}

CatalogStats split_head_tail(CatalogStats stats, double head_fraction) {
  if (!(head_fraction > 0.0 && head_fraction < 1.0)) {
    fail(ErrorCategory::Config, "head_fraction must lie in (0, 1), got " + std::to_string(head_fraction));
  }
  const std::size_t n = stats.n_items();
  // Guard against 0.2 * 10 evaluating to 2.0000000000000004.
  const double exact = head_fraction * static_cast<double>(n);
  auto n_head = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  n_head = std::min(n_head, n);
  stats.slice.assign(n, Slice::Tail);
  for (std::size_t r = 0; r < n_head; ++r) stats.slice[stats.order[r]] = Slice::Head;
  stats.head_fraction = head_fraction;
  return stats;
}

SplitLog chrono_split(const InteractionLog& log, SplitRatios ratios) {
  if (!(ratios.train > 0 && ratios.valid > 0 && ratios.test > 0) ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    fail(ErrorCategory::Config, "split ratios must be positive and sum to 1");
  }
  enum : std::uint8_t { kTrain, kValid, kTest };
  std::vector<std::vector<std::size_t>> by_user(log.n_users());
  for (std::size_t k = 0; k < log.size(); ++k) by_user.at(log.interactions[k].user).push_back(k);

  std::vector<std::uint8_t> where(log.size(), kTrain);
  for (auto& events : by_user) {
    const auto n = static_cast<long long>(events.size());
    if (n < 3) continue;
    std::stable_sort(events.begin(), events.end(), [&](std::size_t a, std::size_t b) {
      return log.interactions[a].timestamp < log.interactions[b].timestamp;
    });
    long long n_valid = std::max(1LL, std::llround(static_cast<double>(n) * ratios.valid));
    long long n_test = std::max(1LL, std::llround(static_cast<double>(n) * ratios.test));
    while (n - n_valid - n_test < 1) {
      if (n_valid >= n_test && n_valid > 1) {
        --n_valid;
      } else {
        --n_test;
      }
    }
    const long long n_train = n - n_valid - n_test;
    for (long long k = n_train; k < n_train + n_valid; ++k) where[events[k]] = kValid;
    for (long long k = n_train + n_valid; k < n; ++k) where[events[k]] = kTest;
  }

  SplitLog out;
  std::vector<Interaction> parts[3];
  for (std::size_t k = 0; k < log.size(); ++k) parts[where[k]].push_back(log.interactions[k]);
  out.train = log.with(std::move(parts[kTrain]));
  out.valid = log.with(std::move(parts[kValid]));
  out.test = log.with(std::move(parts[kTest]));
  out.regularizer = log.with({});
  return out;
}

InteractionLog build_regularizer_distribution(const InteractionLog& train, const CatalogStats& stats,
                                              std::uint64_t seed) {
  if (stats.n_items() != train.n_items()) {
    fail(ErrorCategory::Data, "regularizer: stats do not match the training catalog");
  }
  std::int64_t cap = -1;
  for (std::size_t i = 0; i < stats.n_items(); ++i) {
    if (!stats.is_head(static_cast<std::uint32_t>(i))) cap = std::max(cap, stats.freq[i]);
  }
  if (cap < 0) fail(ErrorCategory::Data, "regularizer: no tail items (head/tail split is degenerate)");
  if (cap == 0) fail(ErrorCategory::Data, "regularizer: tail items have no training interactions");

  std::vector<std::vector<std::size_t>> by_item(train.n_items());
  for (std::size_t k = 0; k < train.size(); ++k) by_item[train.interactions[k].item].push_back(k);

  std::vector<char> keep(train.size(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < by_item.size(); ++i) {
    const auto& rows = by_item[i];
    if (!stats.is_head(static_cast<std::uint32_t>(i)) || static_cast<std::int64_t>(rows.size()) <= cap) {
      for (auto k : rows) keep[k] = 1;
      continue;
    }
    // Partial Fisher-Yates: the first `cap` positions are a uniform subset.
    std::vector<std::size_t> pool = rows;
    for (std::int64_t j = 0; j < cap; ++j) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(j), pool.size() - 1);
      std::swap(pool[static_cast<std::size_t>(j)], pool[pick(rng)]);
      keep[pool[static_cast<std::size_t>(j)]] = 1;
    }
  }
  std::vector<Interaction> rows;
  for (std::size_t k = 0; k < train.size(); ++k) {
    if (keep[k]) rows.push_back(train.interactions[k]);
  }
  return train.with(std::move(rows));
}

}  // namespace cdnrec::data
