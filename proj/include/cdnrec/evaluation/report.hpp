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

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cdnrec::eval {

enum class EvalSlice { Overall, Head, Tail };
inline constexpr std::array<EvalSlice, 3> kSlices{EvalSlice::Overall, EvalSlice::Head, EvalSlice::Tail};
std::string_view to_string(EvalSlice s);

/// Sorted training positives per user, the candidates removed at ranking time.
class ExclusionIndex {
 public:
  ExclusionIndex(std::size_t n_users, std::span<const data::Interaction> train);
  std::span<const Index> of(std::uint32_t user) const;
  /// Exclusions of user with target removed.
  std::vector<Index> without(std::uint32_t user, Index target) const;

 private:
  std::vector<std::vector<Index>> items_;
};

struct EventRanks {
  std::vector<Index> ranks;
  std::vector<char> is_head;
};

/// Ranks every event's target against the full catalog using the serving
/// score, plus optional additive per-item offsets.
EventRanks rank_events(const model::TowerModel& model, const ParamStore& params,
                       std::span<const data::Interaction> events, const ExclusionIndex& exclusions,
                       const data::CatalogStats& stats, std::span<const double> item_offsets = {});

struct MetricValue {
  double mean = 0.0;
  std::optional<double> sem;
};

/// One slice of a report; metric maps are keyed by K and empty when the
/// slice has no events.
struct SliceReport {
  std::int64_t n_events = 0;
  std::map<int, MetricValue> hr;
  std::map<int, MetricValue> ndcg;

  bool present() const { return !hr.empty(); }
};

/// HR@K / NDCG@K in percent for Overall, Head and Tail.
struct EvalReport {
  std::vector<int> ks;
  int trials = 1;
  std::array<SliceReport, 3> slices;

  const SliceReport& slice(EvalSlice s) const { return slices[static_cast<std::size_t>(s)]; }
  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  /// Aligned text table, one block per K, columns Overall / Head / Tail.
  std::string table() const;
};

EvalReport report_from_ranks(const EventRanks& ranks, std::span<const int> ks);

EvalReport evaluate(const model::TowerModel& model, const ParamStore& params,
                    std::span<const data::Interaction> events, const ExclusionIndex& exclusions,
                    const data::CatalogStats& stats, std::span<const int> ks,
                    std::span<const double> item_offsets = {});

/// Mean and standard error (sample standard deviation / sqrt(n)) across
/// trials; a slice absent in any trial is absent in the aggregate.
EvalReport aggregate_trials(std::span<const EvalReport> reports);

}  // namespace cdnrec::eval
