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

#include <cdnrec/numerics/tape.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cdnrec::data {

/// One feedback event. label is the binary positive-feedback indicator.
struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  std::int64_t timestamp = 0;
  std::uint8_t label = 1;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Bijection between external string ids and dense indices.
class Vocab {
 public:
  std::uint32_t add(const std::string& id);
  std::optional<std::uint32_t> find(std::string_view id) const;
  const std::string& id(std::uint32_t index) const { return ids_.at(index); }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// A categorical item feature shared across items (genre, author, ...). Each
/// item holds zero or more values, stored CSR-style.
struct FeatureField {
  std::string name;
  Vocab values;
  std::vector<std::uint32_t> offsets{0};
  std::vector<std::uint32_t> ids;

  void push_item(std::span<const std::uint32_t> item_values);
  std::span<const std::uint32_t> of(std::uint32_t item) const;
  ad::BagIndex bags() const { return {offsets, ids}; }
};

/// Users, items and their generalization features. Item ids are the
/// memorization feature; every entry of `item_features` is a generalization
/// feature.
struct Catalog {
  Vocab users;
  Vocab items;
  std::vector<FeatureField> item_features;

  std::size_t n_users() const { return users.size(); }
  std::size_t n_items() const { return items.size(); }
  const FeatureField* feature(std::string_view name) const;
  void validate() const;
};

struct InteractionLog {
  std::shared_ptr<const Catalog> catalog;
  std::vector<Interaction> interactions;

  std::size_t size() const { return interactions.size(); }
  bool empty() const { return interactions.empty(); }
  std::size_t n_users() const { return catalog ? catalog->n_users() : 0; }
  std::size_t n_items() const { return catalog ? catalog->n_items() : 0; }

  InteractionLog with(std::vector<Interaction> rows) const { return {catalog, std::move(rows)}; }
  void validate() const;
};

enum class Slice : std::uint8_t { Head, Tail };

/// Long-tail statistics of a (training) log.
struct CatalogStats {
  std::vector<std::int64_t> freq;
  std::vector<std::uint32_t> order;  // items by descending freq, ties by ascending index
  std::vector<std::uint32_t> rank;   // rank[item] = 0-based position in `order`
  std::vector<Slice> slice;          // all Tail until split_head_tail runs
  double imbalance_factor = 1.0;
  double head_fraction = 0.0;

  std::size_t n_items() const { return freq.size(); }
  bool is_head(std::uint32_t item) const { return slice[item] == Slice::Head; }
  std::size_t head_count() const;
};

/// Chronological partition plus the rebalanced regularizer stream.
struct SplitLog {
  InteractionLog train;
  InteractionLog valid;
  InteractionLog test;
  InteractionLog regularizer;
};

}  // namespace cdnrec::data
