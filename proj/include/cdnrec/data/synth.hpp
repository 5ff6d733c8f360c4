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

#include <cstdint>

namespace cdnrec::data {

/// Knobs for the synthetic long-tail generator.
///
/// Item popularity follows rank^-exponent. Items are spread evenly over
/// `n_genres` (one genre each). Every user prefers two genres: with
/// probability `genre_preference` an event picks one of them and samples an
/// item inside it, otherwise it samples from the whole catalog. Within the
/// chosen pool an item's weight is popularity * exp(affinity * <z_u, v_i>),
/// where z_u ~ N(0, I) and v_i is a random unit vector, so there is per-item
/// signal that only item-id memorization can pick up. Users do not repeat an
/// item while fresh items remain.
struct ZipfOptions {
  std::size_t n_users = 2000;
  std::size_t n_items = 1000;
  double exponent = 1.2;
  std::size_t n_events = 100000;
  std::size_t n_genres = 10;
  std::uint64_t seed = 1;
  double genre_preference = 0.7;
  double affinity = 1.0;
  std::size_t latent_dim = 8;
};

/// Deterministic for fixed options. Timestamps are the global event index.
InteractionLog synth_zipf(const ZipfOptions& options);

}  // namespace cdnrec::data
