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

#include <cdnrec/data/interaction.hpp>

#include <cdnrec/errors.hpp>

#include <algorithm>

namespace cdnrec::data {

std::uint32_t Vocab::add(const std::string& id) {
  auto [it, inserted] = index_.emplace(id, static_cast<std::uint32_t>(ids_.size()));
  if (inserted) ids_.push_back(id);
  return it->second;
}

std::optional<std::uint32_t> Vocab::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void FeatureField::push_item(std::span<const std::uint32_t> item_values) {
  ids.insert(ids.end(), item_values.begin(), item_values.end());
  offsets.push_back(static_cast<std::uint32_t>(ids.size()));
}

std::span<const std::uint32_t> FeatureField::of(std::uint32_t item) const {
  return std::span<const std::uint32_t>(ids).subspan(offsets.at(item), offsets.at(item + 1) - offsets[item]);
}

const FeatureField* Catalog::feature(std::string_view name) const {
  for (const auto& f : item_features) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

void Catalog::validate() const {
  for (const auto& f : item_features) {
    if (f.offsets.size() != n_items() + 1) {
      fail(ErrorCategory::Data, "feature '" + f.name + "' covers " + std::to_string(f.offsets.size() - 1) +
                                    " items, catalog has " + std::to_string(n_items()));
    }
    for (auto v : f.ids) {
      if (v >= f.values.size()) fail(ErrorCategory::Data, "feature '" + f.name + "' value index out of range");
    }
    if (f.name == "item_id") fail(ErrorCategory::Data, "'item_id' is reserved for the memorization feature");
  }
}

void InteractionLog::validate() const {
  if (!catalog) {
    if (!interactions.empty()) fail(ErrorCategory::Data, "interaction log without a catalog");
    return;
  }
  for (std::size_t k = 0; k < interactions.size(); ++k) {
    const auto& x = interactions[k];
    if (x.user >= n_users() || x.item >= n_items() || x.label > 1) {
      fail(ErrorCategory::Data, "interaction " + std::to_string(k) + " references an invalid index or label");
    }
  }
}

std::size_t CatalogStats::head_count() const {
  return static_cast<std::size_t>(std::count(slice.begin(), slice.end(), Slice::Head));
}

}  // namespace cdnrec::data
