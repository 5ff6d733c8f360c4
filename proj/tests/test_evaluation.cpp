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

#include <cdnrec/errors.hpp>
#include <cdnrec/evaluation/analysis.hpp>
#include <cdnrec/evaluation/metrics.hpp>
#include <cdnrec/evaluation/report.hpp>
#include <cdnrec/numerics/checkpoint.hpp>
#include <cdnrec/training/trainer.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

using namespace cdnrec;
using namespace cdnrec::eval;
using cdnrec::testing::TempDir;
using cdnrec::testing::tiny_config;
using cdnrec::testing::toy_catalog;
using cdnrec::testing::toy_stats;

namespace {

constexpr std::size_t kUsers = 6;
constexpr std::size_t kItems = 20;

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("expected an error");
  return ErrorCategory::Config;
}

Index rank(const std::vector<double>& scores, Index target, const std::vector<Index>& ex = {}) {
  return rank_of_target<double>(scores, target, ex);
}

struct ToyModel {
  std::shared_ptr<data::Catalog> catalog = toy_catalog(kUsers, kItems, 4);
  data::CatalogStats stats = toy_stats(kItems, 0.25);
  ParamStore params;
  std::unique_ptr<model::TowerModel> model;

  explicit ToyModel(model::ModelConfig cfg = tiny_config(), std::uint64_t seed = 5) {
    model = std::make_unique<model::TowerModel>(cfg, catalog,
                                                model::ItemSideInfo::from_stats(stats, cfg.item.freq_buckets));
    model->init(params, seed);
  }
};

std::vector<data::Interaction> random_events(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<data::Interaction> v;
  for (std::size_t k = 0; k < n; ++k) {
    v.push_back({static_cast<std::uint32_t>(rng() % kUsers), static_cast<std::uint32_t>(rng() % kItems),
                 static_cast<std::int64_t>(k), 1});
  }
  return v;
}

EventRanks ranks_of(std::vector<Index> ranks, std::vector<char> head) { return {std::move(ranks), std::move(head)}; }

}  // namespace

TEST_CASE("rank_of_target basics") {
  CHECK(rank({0.3, 0.9, 0.1}, 1) == 1);
  CHECK(rank({0.3, 0.9, 0.1}, 2) == 3);
  CHECK(rank({0.3, 0.9, 0.1}, 2, {0, 1}) == 1);
  // Equal scores: the lower index ranks first.
  CHECK(rank({0.5, 0.5, 0.5}, 0) == 1);
  CHECK(rank({0.5, 0.5, 0.5}, 2) == 3);
  CHECK(rank({0.5, 0.5, 0.5}, 2, {1}) == 2);
  CHECK(category_of([] { rank({1.0, 2.0}, 2); }) == ErrorCategory::Data);
  CHECK(category_of([] { rank({1.0, 2.0}, -1); }) == ErrorCategory::Data);
  CHECK(category_of([] { rank({1.0, 2.0}, 1, {1}); }) == ErrorCategory::Data);
}

TEST_CASE("rank_of_target matches a full sort") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coarse(0, 6);
  std::normal_distribution<double> fine(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<double> scores(n);
    // Half the instances use a coarse grid so that ties are common.
    for (auto& s : scores) s = trial % 2 == 0 ? coarse(rng) * 0.25 : fine(rng);
    const auto target = static_cast<Index>(rng() % n);
    std::set<Index> ex;
    for (std::size_t k = 0; k < n / 3; ++k) {
      const auto j = static_cast<Index>(rng() % n);
      if (j != target) ex.insert(j);
    }
    const std::vector<Index> exv(ex.begin(), ex.end());
    REQUIRE(rank(scores, target, exv) == oracle::rank_by_sort(scores, target, exv));
  }
}

TEST_CASE("hr_ndcg_at_k values") {
  const std::vector<Index> one{1};
  CHECK(hr_ndcg_at_k(one, 50).hr == 1.0);
  CHECK(hr_ndcg_at_k(one, 50).ndcg == 1.0);
  const std::vector<Index> three{3};
  CHECK(hr_ndcg_at_k(three, 50).ndcg == doctest::Approx(0.5).epsilon(1e-15));
  const std::vector<Index> mixed{1, 60, 2};
  const RankingMetrics m = hr_ndcg_at_k(mixed, 50);
  CHECK(m.hr == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.ndcg == doctest::Approx((1.0 + 1.0 / std::log2(3.0)) / 3.0).epsilon(1e-15));
  CHECK(m.ndcg == doctest::Approx(0.5437).epsilon(1e-4));
  CHECK(category_of([&] { hr_ndcg_at_k(mixed, 0); }) == ErrorCategory::Config);
  const std::vector<Index> zero{0};
  CHECK(category_of([&] { hr_ndcg_at_k(zero, 5); }) == ErrorCategory::Data);
}

TEST_CASE("hr_ndcg_at_k matches the oracle and its invariants") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Index> ranks(1 + rng() % 40);
    for (auto& r : ranks) r = 1 + static_cast<Index>(rng() % 80);
    const int k = 1 + static_cast<int>(rng() % 60);
    const RankingMetrics m = hr_ndcg_at_k(ranks, k);
    const auto [hr, ndcg] = oracle::hr_ndcg(ranks, k);
    REQUIRE(std::abs(m.hr - hr) < 1e-10);
    REQUIRE(std::abs(m.ndcg - ndcg) < 1e-10);
    CHECK(m.hr >= 0.0);
    CHECK(m.hr <= 1.0);
    CHECK(m.ndcg <= m.hr + 1e-15);
    const RankingMetrics wider = hr_ndcg_at_k(ranks, k + 1);
    CHECK(wider.hr >= m.hr);
    CHECK(wider.ndcg >= m.ndcg);
  }
}

TEST_CASE("ExclusionIndex") {
  const std::vector<data::Interaction> train{{0, 3, 0, 1}, {0, 1, 1, 1}, {0, 3, 2, 1}, {2, 0, 3, 1}};
  const ExclusionIndex ex(3, train);
  CHECK(std::vector<Index>(ex.of(0).begin(), ex.of(0).end()) == std::vector<Index>{1, 3});
  CHECK(ex.of(1).empty());
  CHECK(ex.without(0, 3) == std::vector<Index>{1});
  CHECK(ex.without(0, 7) == std::vector<Index>{1, 3});
  const std::vector<data::Interaction> bad{{5, 0, 0, 1}};
  CHECK(category_of([&] { ExclusionIndex(3, bad); }) == ErrorCategory::Data);
}

TEST_CASE("rank_events agrees with per-pair scoring and a full sort") {
  for (auto gate : {model::GateKind::Frequency, model::GateKind::HeadTail}) {
    auto cfg = tiny_config();
    cfg.item.gate = gate;
    ToyModel t(cfg);
    const auto train = random_events(40, 1);
    const auto test = random_events(30, 2);
    const ExclusionIndex ex(kUsers, train);
    const EventRanks got = rank_events(*t.model, t.params, test, ex, t.stats);
    REQUIRE(got.ranks.size() == test.size());
    for (std::size_t e = 0; e < test.size(); ++e) {
      oracle::Vec scores(kItems);
      for (std::size_t i = 0; i < kItems; ++i) scores[i] = t.model->score(t.params, test[e].user, static_cast<Index>(i));
      const Index want = oracle::rank_by_sort(scores, test[e].item, ex.without(test[e].user, test[e].item));
      CHECK(got.ranks[e] == want);
      CHECK(static_cast<bool>(got.is_head[e]) == t.stats.is_head(test[e].item));
    }
  }
}

TEST_CASE("rank_events adds serving offsets") {
  ToyModel t;
  const auto test = random_events(10, 4);
  const ExclusionIndex ex(kUsers, {});
  std::vector<double> offsets(kItems, 0.0);
  offsets[7] = 1e6;
  const EventRanks got = rank_events(*t.model, t.params, test, ex, t.stats, offsets);
  for (std::size_t e = 0; e < test.size(); ++e) {
    if (test[e].item == 7) CHECK(got.ranks[e] == 1);
    else CHECK(got.ranks[e] >= 2);
  }
  const std::vector<double> short_offsets(3, 0.0);
  CHECK(category_of([&] { rank_events(*t.model, t.params, test, ex, t.stats, short_offsets); }) ==
        ErrorCategory::Shape);
}

TEST_CASE("a target that is the only candidate ranks first") {
  ToyModel t;
  std::vector<data::Interaction> train;
  for (std::uint32_t i = 0; i < kItems; ++i) train.push_back({1, i, i, 1});
  const ExclusionIndex ex(kUsers, train);
  const std::vector<data::Interaction> test{{1, 5, 0, 1}};
  CHECK(rank_events(*t.model, t.params, test, ex, t.stats).ranks == std::vector<Index>{1});
}

TEST_CASE("report slices") {
  const std::vector<int> ks{1, 3};
  SUBCASE("all targets in the head") {
    const EvalReport r = report_from_ranks(ranks_of({1, 2, 5}, {1, 1, 1}), ks);
    CHECK_FALSE(r.slice(EvalSlice::Tail).present());
    CHECK(r.slice(EvalSlice::Tail).n_events == 0);
    for (int k : ks) {
      CHECK(r.slice(EvalSlice::Overall).hr.at(k).mean == r.slice(EvalSlice::Head).hr.at(k).mean);
      CHECK(r.slice(EvalSlice::Overall).ndcg.at(k).mean == r.slice(EvalSlice::Head).ndcg.at(k).mean);
    }
    CHECK(r.slice(EvalSlice::Overall).hr.at(3).mean == doctest::Approx(200.0 / 3.0));
    CHECK_FALSE(r.slice(EvalSlice::Overall).hr.at(3).sem.has_value());
    const auto j = r.to_json();
    CHECK(j["slices"]["tail"]["hr@3"].is_null());
    CHECK(r.table().find("-") != std::string::npos);
  }
  SUBCASE("overall is the event-weighted mean of head and tail") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Index> ranks(2 + rng() % 30);
      std::vector<char> head(ranks.size());
      for (std::size_t e = 0; e < ranks.size(); ++e) {
        ranks[e] = 1 + static_cast<Index>(rng() % 6);
        head[e] = static_cast<char>(e == 0 ? 1 : e == 1 ? 0 : rng() % 2);
      }
      const EvalReport r = report_from_ranks(ranks_of(ranks, head), ks);
      const auto& o = r.slice(EvalSlice::Overall);
      const auto& h = r.slice(EvalSlice::Head);
      const auto& tl = r.slice(EvalSlice::Tail);
      REQUIRE(o.n_events == h.n_events + tl.n_events);
      for (int k : ks) {
        const double mixed =
            (h.hr.at(k).mean * static_cast<double>(h.n_events) + tl.hr.at(k).mean * static_cast<double>(tl.n_events)) /
            static_cast<double>(o.n_events);
        CHECK(o.hr.at(k).mean == doctest::Approx(mixed).epsilon(1e-12));
        for (const auto* s : {&o, &h, &tl}) {
          CHECK(s->hr.at(k).mean >= 0.0);
          CHECK(s->hr.at(k).mean <= 100.0);
          CHECK(s->ndcg.at(k).mean <= s->hr.at(k).mean + 1e-12);
        }
      }
    }
  }
  SUBCASE("no events") {
    const EvalReport r = report_from_ranks(ranks_of({}, {}), ks);
    for (EvalSlice s : kSlices) CHECK_FALSE(r.slice(s).present());
  }
  CHECK(category_of([] { report_from_ranks(ranks_of({1}, {1}), {}); }) == ErrorCategory::Config);
}

TEST_CASE("aggregate_trials computes the standard error of the mean") {
  const std::vector<int> ks{2};
  std::vector<EvalReport> reports;
  // Trial t ranks 10 events, t + 1 of them at rank 1: HR@2 = 10, 20, ..., 50 %.
  for (int t = 0; t < 5; ++t) {
    std::vector<Index> ranks(10, 9);
    for (int e = 0; e <= t; ++e) ranks[static_cast<std::size_t>(e)] = 1;
    std::vector<char> head(10, 0);
    head[0] = 1;
    reports.push_back(report_from_ranks(ranks_of(ranks, head), ks));
  }
  const EvalReport agg = aggregate_trials(reports);
  CHECK(agg.trials == 5);
  const MetricValue hr = agg.slice(EvalSlice::Overall).hr.at(2);
  CHECK(hr.mean == doctest::Approx(30.0).epsilon(1e-14));
  // Sample variance of {10, 20, 30, 40, 50} is 250.
  REQUIRE(hr.sem.has_value());
  CHECK(*hr.sem == doctest::Approx(std::sqrt(250.0) / std::sqrt(5.0)).epsilon(1e-14));
  CHECK(*agg.slice(EvalSlice::Head).hr.at(2).sem == 0.0);
  CHECK(agg.slice(EvalSlice::Tail).n_events == 9);

  const EvalReport single = aggregate_trials(std::span(reports).first(1));
  CHECK_FALSE(single.slice(EvalSlice::Overall).hr.at(2).sem.has_value());

  std::vector<EvalReport> absent{report_from_ranks(ranks_of({1}, {1}), ks), report_from_ranks(ranks_of({1}, {1}), ks)};
  CHECK_FALSE(aggregate_trials(absent).slice(EvalSlice::Tail).present());

  const std::vector<int> other_k{3};
  std::vector<EvalReport> mixed{reports[0], report_from_ranks(ranks_of({1}, {1}), other_k)};
  CHECK(category_of([&] { aggregate_trials(mixed); }) == ErrorCategory::Data);
  CHECK(category_of([] { aggregate_trials({}); }) == ErrorCategory::Data);
}

TEST_CASE("five seeded two-tower trials aggregate to s / sqrt(5)") {
  const auto data = cdnrec::testing::small_zipf(60, 40, 1500, 2);
  train::TrainConfig tc;
  tc.batch_size = 32;
  tc.epochs = 1;
  tc.eval_every = 0;
  tc.eval_k = {10};
  baselines::MethodConfig mc;
  mc.method = baselines::Method::TwoTower;
  std::vector<EvalReport> reports;
  std::vector<double> hr;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    tc.seed = seed;
    train::Trainer t(data, tiny_config(), mc, tc);
    t.fit();
    reports.push_back(t.evaluate(data.split.test.interactions));
    hr.push_back(reports.back().slice(EvalSlice::Overall).hr.at(10).mean);
  }
  double mean = 0.0;
  for (double v : hr) mean += v / 5.0;
  double ss = 0.0;
  for (double v : hr) ss += (v - mean) * (v - mean);
  const MetricValue agg = aggregate_trials(reports).slice(EvalSlice::Overall).hr.at(10);
  CHECK(agg.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(*agg.sem == doctest::Approx(std::sqrt(ss / 4.0) / std::sqrt(5.0)).epsilon(1e-12));
}

TEST_CASE("EvalReport JSON and table") {
  const std::vector<int> ks{5, 50};
  std::vector<EvalReport> reports{report_from_ranks(ranks_of({1, 7, 60, 2}, {1, 0, 0, 1}), ks),
                                  report_from_ranks(ranks_of({3, 4, 51, 1}, {1, 0, 0, 1}), ks)};
  const EvalReport agg = aggregate_trials(reports);
  const EvalReport back = EvalReport::from_json(nlohmann::json::parse(agg.to_json().dump()));
  CHECK(back.ks == agg.ks);
  CHECK(back.trials == 2);
  for (EvalSlice s : kSlices) {
    CHECK(back.slice(s).n_events == agg.slice(s).n_events);
    for (int k : ks) {
      CHECK(back.slice(s).hr.at(k).mean == agg.slice(s).hr.at(k).mean);
      CHECK(back.slice(s).ndcg.at(k).sem == agg.slice(s).ndcg.at(k).sem);
    }
  }
  CHECK(back.to_json() == agg.to_json());
  const std::string table = agg.table();
  CHECK(table.find("Overall (n=4)") != std::string::npos);
  CHECK(table.find("NDCG@50") != std::string::npos);
  CHECK(table.find("±") != std::string::npos);
  CHECK(category_of([] { EvalReport::from_json(nlohmann::json{{"k", {5}}}); }) == ErrorCategory::Parse);
}

TEST_CASE("gate report") {
  auto cfg = tiny_config();
  cfg.item.experts = {model::FeatureGroup::Memorization, model::FeatureGroup::Memorization,
                      model::FeatureGroup::Generalization};
  ToyModel t(cfg);
  SUBCASE("zero gate weights give the expert-count share") {
    t.params.at("item.gate.w").value.setZero();
    const GateReport r = gate_report(*t.model, t.params, t.stats);
    for (const GateMass* m : {&r.overall, &r.head, &r.tail}) {
      CHECK(m->memorization == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
      CHECK(m->generalization == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
    CHECK(r.head.n_items == 5);
    CHECK(r.tail.n_items == 15);
    CHECK(r.overall.n_items == 20);
  }
  SUBCASE("slice masses sum to one for any gate") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 2.0);
    Matrix& w = t.params.at("item.gate.w").value;
    for (Index k = 0; k < w.size(); ++k) w.data()[k] = n(rng);
    const GateReport r = gate_report(*t.model, t.params, t.stats);
    for (const GateMass* m : {&r.overall, &r.head, &r.tail}) {
      CHECK(m->memorization + m->generalization == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(r.overall.memorization ==
          doctest::Approx((5.0 * r.head.memorization + 15.0 * r.tail.memorization) / 20.0).epsilon(1e-12));
    CHECK(r.to_json()["head"]["n_items"] == 5);
  }
  SUBCASE("models without a learned gate are rejected") {
    auto plain = tiny_config();
    plain.item.experts = {model::FeatureGroup::All};
    plain.item.gate = model::GateKind::Constant;
    ToyModel p(plain);
    CHECK(category_of([&] { gate_report(*p.model, p.params, p.stats); }) == ErrorCategory::Config);
    auto ht = tiny_config();
    ht.item.gate = model::GateKind::HeadTail;
    ToyModel h(ht);
    CHECK(category_of([&] { gate_report(*h.model, h.params, h.stats); }) == ErrorCategory::Config);
  }
}

TEST_CASE("primary_label") {
  auto c = toy_catalog(1, 4, 3);
  CHECK(primary_label(*c, 0, "genre") == "g0");
  CHECK(primary_label(*c, 1, "genre") == "g1");
  CHECK(primary_label(*c, 2, "genre") == "g2");
  CHECK(primary_label(*c, 1, "decade").empty());
}

TEST_CASE("export_embeddings") {
  TempDir dir("export");
  ToyModel t;
  SUBCASE("empty subset writes the header only") {
    export_embeddings(*t.model, t.params, {}, {}, dir / "empty.tsv");
    CHECK(cdnrec::testing::read_file(dir / "empty.tsv") == "item_id\tlabel\te0\te1\te2\te3\te4\n");
  }
  SUBCASE("one row per item holding the main item embedding") {
    const std::vector<Index> items{3, 0, 17};
    std::vector<std::string> labels;
    for (Index i : items) labels.push_back(primary_label(*t.catalog, static_cast<std::uint32_t>(i), "genre"));
    export_embeddings(*t.model, t.params, items, labels, dir / "e.tsv");
    std::istringstream in(cdnrec::testing::read_file(dir / "e.tsv"));
    std::string line;
    std::getline(in, line);
    const Matrix y = t.model->item_embeddings(t.params, items);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      std::istringstream cols(line);
      std::string id, label;
      std::getline(cols, id, '\t');
      std::getline(cols, label, '\t');
      CHECK(id == "i" + std::to_string(items[rows]));
      CHECK(label == labels[rows]);
      for (Index c = 0; c < y.cols(); ++c) {
        std::string v;
        std::getline(cols, v, '\t');
        CHECK(std::stod(v) == y(static_cast<Index>(rows), c));
      }
      ++rows;
    }
    CHECK(rows == items.size());
  }
  SUBCASE("re-export from a reloaded checkpoint is byte-identical") {
    std::vector<Index> items(kItems);
    for (std::size_t i = 0; i < kItems; ++i) items[i] = static_cast<Index>(i);
    const std::vector<std::string> labels(kItems, "x");
    export_embeddings(*t.model, t.params, items, labels, dir / "a.tsv");
    Checkpoint ck;
    export_params(t.params, ck);
    write_checkpoint(dir / "m.ckpt", ck);
    const ParamStore reloaded = import_params(read_checkpoint(dir / "m.ckpt"));
    export_embeddings(*t.model, reloaded, items, labels, dir / "b.tsv");
    CHECK(cdnrec::testing::read_file(dir / "a.tsv") == cdnrec::testing::read_file(dir / "b.tsv"));
  }
  SUBCASE("errors") {
    const std::vector<Index> items{1};
    const std::vector<std::string> none;
    CHECK(category_of([&] { export_embeddings(*t.model, t.params, items, none, dir / "x.tsv"); }) ==
          ErrorCategory::Shape);
    const std::vector<std::string> one{"a"};
    CHECK(category_of([&] { export_embeddings(*t.model, t.params, items, one, dir / "no" / "such" / "x.tsv"); }) ==
          ErrorCategory::Io);
  }
}
