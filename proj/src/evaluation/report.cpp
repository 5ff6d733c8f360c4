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

#include <cdnrec/evaluation/report.hpp>

#include <cdnrec/errors.hpp>
#include <cdnrec/evaluation/metrics.hpp>

#include <cmath>
#include <cstdio>
#include <sstream>

namespace cdnrec::eval {

std::string_view to_string(EvalSlice s) {
  switch (s) {
    case EvalSlice::Overall: return "overall";
    case EvalSlice::Head: return "head";
    case EvalSlice::Tail: return "tail";
  }
  return "unknown";
}

ExclusionIndex::ExclusionIndex(std::size_t n_users, std::span<const data::Interaction> train) : items_(n_users) {
  for (const auto& e : train) {
    if (e.user >= n_users) fail(ErrorCategory::Data, "exclusion index: unknown user " + std::to_string(e.user));
    items_[e.user].push_back(e.item);
  }
  for (auto& v : items_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

std::span<const Index> ExclusionIndex::of(std::uint32_t user) const { return items_.at(user); }

std::vector<Index> ExclusionIndex::without(std::uint32_t user, Index target) const {
  std::vector<Index> out;
  for (Index i : items_.at(user)) {
    if (i != target) out.push_back(i);
  }
  return out;
}

EventRanks rank_events(const model::TowerModel& model, const ParamStore& params,
                       std::span<const data::Interaction> events, const ExclusionIndex& exclusions,
                       const data::CatalogStats& stats, std::span<const double> item_offsets) {
  const Matrix items = model.all_item_embeddings(params);
  if (!item_offsets.empty() && static_cast<Index>(item_offsets.size()) != items.rows()) {
    fail(ErrorCategory::Shape, "item offsets do not cover the catalog");
  }
  if (stats.n_items() != static_cast<std::size_t>(items.rows())) {
    fail(ErrorCategory::Shape, "catalog statistics do not cover the catalog");
  }
  EventRanks out;
  out.ranks.reserve(events.size());
  out.is_head.reserve(events.size());
  constexpr std::size_t kChunk = 512;
  std::vector<Index> users;
  Vector scores(items.rows());
  for (std::size_t start = 0; start < events.size(); start += kChunk) {
    const std::size_t len = std::min(kChunk, events.size() - start);
    users.clear();
    for (std::size_t k = 0; k < len; ++k) users.push_back(events[start + k].user);
    const Matrix x = model.user_embeddings(params, users);
    for (std::size_t k = 0; k < len; ++k) {
      const auto& e = events[start + k];
      scores.noalias() = items * x.row(static_cast<Index>(k)).transpose();
      for (std::size_t i = 0; i < item_offsets.size(); ++i) scores(static_cast<Index>(i)) += item_offsets[i];
      const auto target = static_cast<Index>(e.item);
      const std::vector<Index> ex = exclusions.without(e.user, target);
      out.ranks.push_back(rank_of_target<double>(std::span<const double>(scores.data(), scores.size()), target, ex));
      out.is_head.push_back(stats.is_head(e.item) ? 1 : 0);
    }
  }
  return out;
}

EvalReport report_from_ranks(const EventRanks& ranks, std::span<const int> ks) {
  if (ks.empty()) fail(ErrorCategory::Config, "at least one K is required");
  EvalReport r;
  r.ks.assign(ks.begin(), ks.end());
  std::array<std::vector<Index>, 3> by_slice;
  for (std::size_t e = 0; e < ranks.ranks.size(); ++e) {
    by_slice[0].push_back(ranks.ranks[e]);
    by_slice[ranks.is_head[e] ? 1 : 2].push_back(ranks.ranks[e]);
  }
  for (std::size_t s = 0; s < 3; ++s) {
    r.slices[s].n_events = static_cast<std::int64_t>(by_slice[s].size());
    if (by_slice[s].empty()) continue;
    for (int k : ks) {
      const RankingMetrics m = hr_ndcg_at_k(by_slice[s], k);
      r.slices[s].hr[k] = {100.0 * m.hr, std::nullopt};
      r.slices[s].ndcg[k] = {100.0 * m.ndcg, std::nullopt};
    }
  }
  return r;
}

EvalReport evaluate(const model::TowerModel& model, const ParamStore& params,
                    std::span<const data::Interaction> events, const ExclusionIndex& exclusions,
                    const data::CatalogStats& stats, std::span<const int> ks, std::span<const double> item_offsets) {
  return report_from_ranks(rank_events(model, params, events, exclusions, stats, item_offsets), ks);
}

namespace {

MetricValue mean_sem(const std::vector<double>& v) {
  const auto n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  MetricValue out{mean, std::nullopt};
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    out.sem = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

void aggregate_metric(std::span<const EvalReport> reports, std::size_t s, int k,
                      std::map<int, MetricValue> SliceReport::*field, SliceReport& out) {
  std::vector<double> v;
  for (const auto& r : reports) v.push_back((r.slices[s].*field).at(k).mean);
  (out.*field)[k] = mean_sem(v);
}

nlohmann::json metric_json(const MetricValue& m) {
  nlohmann::json j{{"mean", m.mean}};
  j["sem"] = m.sem ? nlohmann::json(*m.sem) : nlohmann::json(nullptr);
  return j;
}

std::string cell(const std::map<int, MetricValue>& m, int k) {
  auto it = m.find(k);
  if (it == m.end()) return "-";
  char buf[64];
  if (it->second.sem) {
    std::snprintf(buf, sizeof buf, "%.2f±%.2f", it->second.mean, *it->second.sem);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f", it->second.mean);
  }
  return buf;
}

// Pads by display width; "±" is two bytes but one column.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t cols = 0;
  for (unsigned char c : s) cols += (c & 0xC0) != 0x80;
  return s + std::string(width > cols ? width - cols : 0, ' ');
}

}  // namespace

EvalReport aggregate_trials(std::span<const EvalReport> reports) {
  if (reports.empty()) fail(ErrorCategory::Data, "no trial reports to aggregate");
  EvalReport out;
  out.ks = reports.front().ks;
  out.trials = static_cast<int>(reports.size());
  for (const auto& r : reports) {
    if (r.ks != out.ks) fail(ErrorCategory::Data, "trial reports use different K lists");
  }
  for (std::size_t s = 0; s < 3; ++s) {
    bool present = true;
    std::int64_t events = 0;
    for (const auto& r : reports) {
      present = present && r.slices[s].present();
      events += r.slices[s].n_events;
    }
    out.slices[s].n_events = events / static_cast<std::int64_t>(reports.size());
    if (!present) continue;
    for (int k : out.ks) {
      aggregate_metric(reports, s, k, &SliceReport::hr, out.slices[s]);
      aggregate_metric(reports, s, k, &SliceReport::ndcg, out.slices[s]);
    }
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["k"] = ks;
  j["trials"] = trials;
  for (EvalSlice s : kSlices) {
    const SliceReport& sr = slice(s);
    nlohmann::json js;
    js["n_events"] = sr.n_events;
    for (int k : ks) {
      const std::string kk = std::to_string(k);
      js["hr@" + kk] = sr.present() ? metric_json(sr.hr.at(k)) : nlohmann::json(nullptr);
      js["ndcg@" + kk] = sr.present() ? metric_json(sr.ndcg.at(k)) : nlohmann::json(nullptr);
    }
    j["slices"][std::string(to_string(s))] = js;
  }
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.ks = j.at("k").get<std::vector<int>>();
    r.trials = j.at("trials").get<int>();
    for (EvalSlice s : kSlices) {
      const auto& js = j.at("slices").at(std::string(to_string(s)));
      SliceReport& sr = r.slices[static_cast<std::size_t>(s)];
      sr.n_events = js.at("n_events").get<std::int64_t>();
      for (int k : r.ks) {
        const std::string kk = std::to_string(k);
        for (auto [name, field] : {std::pair{"hr@", &SliceReport::hr}, std::pair{"ndcg@", &SliceReport::ndcg}}) {
          const auto& m = js.at(name + kk);
          if (m.is_null()) continue;
          MetricValue v{m.at("mean").get<double>(), std::nullopt};
          if (!m.at("sem").is_null()) v.sem = m.at("sem").get<double>();
          (sr.*field)[k] = v;
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::Parse, std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

std::string EvalReport::table() const {
  constexpr std::size_t kW = 14;
  std::ostringstream os;
  for (int k : ks) {
    const std::string kk = std::to_string(k);
    os << pad("", 8);
    for (EvalSlice s : kSlices) {
      std::string name(to_string(s));
      name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
      os << pad(name + " (n=" + std::to_string(slice(s).n_events) + ")", 2 * kW);
    }
    os << "\n" << pad("", 8);
    for (std::size_t s = 0; s < 3; ++s) os << pad("HR@" + kk, kW) << pad("NDCG@" + kk, kW);
    os << "\n" << pad("", 8);
    for (EvalSlice s : kSlices) os << pad(cell(slice(s).hr, k), kW) << pad(cell(slice(s).ndcg, k), kW);
    os << "\n";
  }
  return os.str();
}

}  // namespace cdnrec::eval
