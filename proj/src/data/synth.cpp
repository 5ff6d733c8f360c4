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

#include <cdnrec/data/synth.hpp>

#include <cdnrec/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace cdnrec::data {

namespace {

/// Inverse-CDF sampler over a fixed subset of items.
class PoolSampler {
 public:
  PoolSampler(std::vector<std::uint32_t> items, const std::vector<double>& weight)
      : items_(std::move(items)), cdf_(items_.size()) {
    double acc = 0.0;
    for (std::size_t k = 0; k < items_.size(); ++k) {
      acc += weight[items_[k]];
      cdf_[k] = acc;
    }
  }

  template <typename Rng>
  std::uint32_t draw(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, cdf_.back());
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u(rng));
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), items_.size() - 1);
    return items_[k];
  }

 private:
  std::vector<std::uint32_t> items_;
  std::vector<double> cdf_;
};

}  // namespace

InteractionLog synth_zipf(const ZipfOptions& o) {
  if (o.n_users == 0 || o.n_items == 0 || o.n_events == 0 || o.n_genres == 0 || o.latent_dim == 0) {
    fail(ErrorCategory::Config, "synth_zipf: counts must be positive");
  }
  if (!(o.exponent >= 0.0) || !(o.genre_preference >= 0.0 && o.genre_preference <= 1.0)) {
    fail(ErrorCategory::Config, "synth_zipf: exponent must be >= 0 and genre_preference in [0, 1]");
  }
  std::mt19937_64 rng(o.seed);

  // Popularity rank and genre are independent random assignments.
  std::vector<std::uint32_t> perm(o.n_items);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<double> popularity(o.n_items);
  for (std::size_t i = 0; i < o.n_items; ++i) {
    popularity[i] = std::pow(static_cast<double>(perm[i] + 1), -o.exponent);
  }
  std::vector<std::uint32_t> genre_of(o.n_items);
  for (std::size_t i = 0; i < o.n_items; ++i) genre_of[i] = static_cast<std::uint32_t>(i % o.n_genres);
  std::shuffle(genre_of.begin(), genre_of.end(), rng);
  std::vector<std::vector<std::uint32_t>> genre_items(o.n_genres);
  for (std::uint32_t i = 0; i < o.n_items; ++i) genre_items[genre_of[i]].push_back(i);

  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix item_latent(static_cast<Index>(o.n_items), static_cast<Index>(o.latent_dim));
  for (Index i = 0; i < item_latent.rows(); ++i) {
    for (Index d = 0; d < item_latent.cols(); ++d) item_latent(i, d) = normal(rng);
    item_latent.row(i).normalize();
  }

  // Assign each event (timestamp) to a user, then fill users one at a time.
  std::uniform_int_distribution<std::size_t> pick_user(0, o.n_users - 1);
  std::vector<std::vector<std::size_t>> events_of(o.n_users);
  for (std::size_t k = 0; k < o.n_events; ++k) events_of[pick_user(rng)].push_back(k);

  std::vector<Interaction> rows(o.n_events);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_genre(0, o.n_genres - 1);
  std::vector<double> weight(o.n_items);
  std::vector<std::uint32_t> all_items(o.n_items);
  std::iota(all_items.begin(), all_items.end(), 0u);
  RowVector<double> z(static_cast<Index>(o.latent_dim));
  std::vector<char> seen(o.n_items, 0);

  for (std::size_t u = 0; u < o.n_users; ++u) {
    for (Index d = 0; d < z.size(); ++d) z(d) = normal(rng);
    const Vector affinity = item_latent * z.transpose();
    for (std::size_t i = 0; i < o.n_items; ++i) {
      weight[i] = popularity[i] * std::exp(o.affinity * affinity(static_cast<Index>(i)));
    }
    const std::size_t g1 = pick_genre(rng);
    std::size_t g2 = g1;
    while (o.n_genres > 1 && g2 == g1) g2 = pick_genre(rng);
    const PoolSampler pools[3] = {PoolSampler(genre_items[g1], weight), PoolSampler(genre_items[g2], weight),
                                  PoolSampler(all_items, weight)};

    std::fill(seen.begin(), seen.end(), 0);
    std::size_t n_seen = 0;
    for (std::size_t k : events_of[u]) {
      const std::size_t pool = coin(rng) < o.genre_preference ? (coin(rng) < 0.5 ? 0 : 1) : 2;
      std::uint32_t item = pools[pool].draw(rng);
      for (int attempt = 0; attempt < 64 && seen[item] && n_seen < o.n_items; ++attempt) {
        item = pools[pool].draw(rng);
      }
      if (!seen[item]) ++n_seen;
      seen[item] = 1;
      rows[k] = Interaction{static_cast<std::uint32_t>(u), item, static_cast<std::int64_t>(k), 1};
    }
  }

  auto catalog = std::make_shared<Catalog>();
  for (std::size_t u = 0; u < o.n_users; ++u) catalog->users.add("u" + std::to_string(u));
  FeatureField genre{"genre", {}, {0}, {}};
  for (std::size_t g = 0; g < o.n_genres; ++g) genre.values.add("g" + std::to_string(g));
  for (std::size_t i = 0; i < o.n_items; ++i) {
    catalog->items.add("i" + std::to_string(i));
    genre.push_item(std::span(&genre_of[i], 1));
  }
  catalog->item_features.push_back(std::move(genre));
  return InteractionLog{std::move(catalog), std::move(rows)};
}

}  // namespace cdnrec::data
