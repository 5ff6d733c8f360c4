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

#include <cdnrec/data/cache.hpp>
#include <cdnrec/data/interaction.hpp>
#include <cdnrec/data/long_tail.hpp>
#include <cdnrec/data/synth.hpp>
#include <cdnrec/model/config.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <random>
#include <string>

namespace cdnrec::testing {

/// Catalog with users "u<k>", items "i<k>" and one "genre" field. Item k holds
/// genre k % n_genres, and odd items also hold genre (k + 1) % n_genres.
inline std::shared_ptr<data::Catalog> toy_catalog(std::size_t n_users, std::size_t n_items, std::size_t n_genres) {
  auto c = std::make_shared<data::Catalog>();
  for (std::size_t u = 0; u < n_users; ++u) c->users.add("u" + std::to_string(u));
  for (std::size_t i = 0; i < n_items; ++i) c->items.add("i" + std::to_string(i));
  data::FeatureField genre;
  genre.name = "genre";
  for (std::size_t g = 0; g < n_genres; ++g) genre.values.add("g" + std::to_string(g));
  for (std::size_t i = 0; i < n_items; ++i) {
    std::vector<std::uint32_t> v{static_cast<std::uint32_t>(i % n_genres)};
    if (i % 2 == 1 && n_genres > 1) v.push_back(static_cast<std::uint32_t>((i + 1) % n_genres));
    genre.push_item(v);
  }
  c->item_features.push_back(std::move(genre));
  return c;
}

/// Small dimensions for fast model tests.
inline model::ModelConfig tiny_config() {
  model::ModelConfig m;
  m.item.expert_hidden_dims = {6};
  m.item.id_dim = 4;
  m.item.feature_dim = 3;
  m.item.output_dim = 5;
  m.item.freq_buckets = 4;
  m.user.embedding_dim = 4;
  m.user.shared_dims = {6, 6};
  m.user.branch_hidden = 6;
  m.user.output_dim = 5;
  return m;
}

/// Item frequencies 8, 7, ..., spread so that both head and tail exist.
inline data::CatalogStats toy_stats(std::size_t n_items, double head_fraction = 0.25) {
  data::InteractionLog log;
  auto c = toy_catalog(1, n_items, 2);
  log.catalog = c;
  for (std::size_t i = 0; i < n_items; ++i) {
    for (std::size_t k = 0; k < n_items - i; ++k) log.interactions.push_back({0, static_cast<std::uint32_t>(i), 0, 1});
  }
  return data::split_head_tail(data::build_stats(log), head_fraction);
}

inline data::PreparedDataset small_zipf(std::size_t users = 120, std::size_t items = 60, std::size_t events = 3000,
                                        std::uint64_t seed = 3) {
  data::ZipfOptions z;
  z.n_users = users;
  z.n_items = items;
  z.n_events = events;
  z.n_genres = 5;
  z.seed = seed;
  return data::prepare_dataset(data::synth_zipf(z), {}, 0.2, seed);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("cdnrec-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace cdnrec::testing
