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

#include <cdnrec/data/interaction.hpp>

#include <array>
#include <cstdint>

namespace cdnrec::data {

/// Per-item positive counts, frequency rank and the imbalance factor
/// max(freq) / min(freq over items with freq > 0). Zero-frequency items stay in
/// the catalog but do not enter the denominator.
CatalogStats build_stats(const InteractionLog& log);

/// Tags the ceil(head_fraction * |I|) most frequent items as Head.
CatalogStats split_head_tail(CatalogStats stats, double head_fraction);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

/// Per-user chronological split. Users with fewer than 3 events go entirely to
/// train. Each split keeps the input's relative order. The regularizer is unset.
SplitLog chrono_split(const InteractionLog& log, SplitRatios ratios = {});

/// Rebalanced stream: every tail-item interaction, and for each head item a
/// seeded uniform subsample of at most cap = max tail-item frequency of its
/// interactions. Output keeps the order of `train`.
InteractionLog build_regularizer_distribution(const InteractionLog& train, const CatalogStats& stats,
                                              std::uint64_t seed);

}  // namespace cdnrec::data
