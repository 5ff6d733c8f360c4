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
#include <cdnrec/model/tower_model.hpp>
#include <cdnrec/numerics/param_store.hpp>

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cdnrec::eval {

struct GateMass {
  std::int64_t n_items = 0;
  double memorization = 0.0;
  double generalization = 0.0;
};

/// Mean gate mass on memorization vs generalization experts per item slice.
struct GateReport {
  GateMass overall;
  GateMass head;
  GateMass tail;

  nlohmann::json to_json() const;
};

/// Requires a learned frequency gate over memorization and generalization
/// experts; other towers raise a Config error.
GateReport gate_report(const model::TowerModel& model, const ParamStore& params, const data::CatalogStats& stats);

/// First value of an item's feature field, or "" when the field is empty.
std::string primary_label(const data::Catalog& catalog, std::uint32_t item, std::string_view field);

/// TSV with header "item_id label e0 .. e{d-1}" and one row per item of the
/// main-branch item embedding.
void export_embeddings(const model::TowerModel& model, const ParamStore& params, std::span<const Index> items,
                       std::span<const std::string> labels, const std::filesystem::path& path);

}  // namespace cdnrec::eval
