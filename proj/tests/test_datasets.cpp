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

#include <cdnrec/data/cache.hpp>
#include <cdnrec/data/loaders.hpp>
#include <cdnrec/data/long_tail.hpp>
#include <cdnrec/data/synth.hpp>
#include <cdnrec/errors.hpp>

#include "fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

using namespace cdnrec;
using namespace cdnrec::data;
using cdnrec::testing::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("expected an error");
  return ErrorCategory::Config;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

InteractionLog log_from_freqs(const std::vector<int>& freqs, std::size_t n_users = 1) {
  InteractionLog log;
  log.catalog = cdnrec::testing::toy_catalog(n_users, freqs.size(), 2);
  std::int64_t ts = 0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    for (int k = 0; k < freqs[i]; ++k) {
      log.interactions.push_back({static_cast<std::uint32_t>(k % n_users), static_cast<std::uint32_t>(i), ts++, 1});
    }
  }
  return log;
}

using Key = std::tuple<std::uint32_t, std::uint32_t, std::int64_t>;

std::multiset<Key> keys(const InteractionLog& log) {
  std::multiset<Key> out;
  for (const auto& x : log.interactions) out.insert({x.user, x.item, x.timestamp});
  return out;
}

std::vector<std::int64_t> count_items(const InteractionLog& log) {
  std::vector<std::int64_t> c(log.n_items(), 0);
  for (const auto& x : log.interactions) ++c[x.item];
  return c;
}

const char* kMovies =
    "1193::One Flew Over the Cuckoo's Nest (1975)::Drama\n"
    "661::James and the Giant Peach (1996)::Animation|Children's|Musical\n"
    "914::My Fair Lady (1964)::Musical|Romance\n"
    "3408::Erin Brockovich (2000)::Drama\n"
    "999::Never Rated (1990)::Comedy\n";

const char* kRatings =
    "1::1193::5::978300760\n"
    "1::661::3::978302109\n"
    "1::914::3::978301968\n"
    "2::1193::1::978298413\r\n"
    "2::3408::4::978298000\n";

}  // namespace

TEST_CASE("movielens loader maps every rating to a positive interaction") {
  TempDir dir("ml");
  write_text(dir / "movies.dat", kMovies);
  write_text(dir / "ratings.dat", kRatings);
  const InteractionLog log = load_movielens(dir / "ratings.dat", dir / "movies.dat");
  log.validate();
  REQUIRE(log.size() == 5);
  CHECK(log.n_users() == 2);
  CHECK(log.n_items() == 4);  // movie 999 has no ratings

  const auto& c = *log.catalog;
  const auto& first = log.interactions[0];
  CHECK(first.user == 0);
  CHECK(first.item == *c.items.find("1193"));
  CHECK(first.label == 1);
  CHECK(first.timestamp == 978300760);
  for (const auto& x : log.interactions) CHECK(x.label == 1);

  const FeatureField* genre = c.feature("genre");
  REQUIRE(genre != nullptr);
  const auto peach = genre->of(*c.items.find("661"));
  REQUIRE(peach.size() == 3);
  CHECK(genre->values.id(peach[0]) == "Animation");
  CHECK(genre->values.id(peach[2]) == "Musical");
  const FeatureField* decade = c.feature("decade");
  REQUIRE(decade != nullptr);
  CHECK(decade->values.id(decade->of(*c.items.find("914"))[0]) == "1960s");
}

TEST_CASE("movielens loader handles an empty ratings file") {
  TempDir dir("ml-empty");
  write_text(dir / "movies.dat", kMovies);
  write_text(dir / "ratings.dat", "");
  const InteractionLog log = load_movielens(dir / "ratings.dat", dir / "movies.dat");
  CHECK(log.empty());
  CHECK(log.n_users() == 0);
  CHECK(log.n_items() == 0);
}

TEST_CASE("movielens loader reports malformed lines and unknown movies") {
  TempDir dir("ml-bad");
  write_text(dir / "movies.dat", kMovies);
  write_text(dir / "ratings.dat", "1::1193::5::978300760\n1::661::x::978302109\n");
  const auto load = [&] { load_movielens(dir / "ratings.dat", dir / "movies.dat"); };
  CHECK(category_of(load) == ErrorCategory::Parse);
  CHECK(message_of(load).find("ratings.dat:2:") != std::string::npos);

  write_text(dir / "ratings.dat", "1::1193::5::978300760\n1::42::5::978300761\n");
  CHECK(category_of(load) == ErrorCategory::Parse);
  CHECK(message_of(load).find("movie id 42") != std::string::npos);

  write_text(dir / "movies.dat", "1193::Title only\n");
  CHECK(message_of(load).find("movies.dat:1:") != std::string::npos);

  write_text(dir / "movies.dat", kMovies);
  CHECK(category_of([&] { load_movielens(dir / "absent.dat", dir / "movies.dat"); }) == ErrorCategory::Io);
}

TEST_CASE("bookcrossing loader joins ratings with books and counts drops") {
  TempDir dir("bx");
  const std::string books =
      "\"ISBN\";\"Book-Title\";\"Book-Author\";\"Year-Of-Publication\";\"Publisher\";\"Image-URL-S\";"
      "\"Image-URL-M\";\"Image-URL-L\"\n"
      "\"034545104X\";\"Flesh Tones: A Novel\";\"M. J. Rose\";\"2002\";\"Ballantine Books\";\"s\";\"m\";\"l\"\n"
      "\"0155061224\";\"Rites of Passage\";\"Judith Rae\";\"2001\";\"Heinle\";\"s\";\"m\";\"l\"\n"
      "\"0446520802\";\"The Notebook; A Love\";\"Nicholas Sparks\";\"1996\";\"Warner Books\";\"s\";\"m\";\"l\"\n"
      "\"0000000001\";\"Caf\xe9\";\"Zo\xeb\";\"0\";\"Small\";\"s\";\"m\";\"l\"\n";
  const std::string ratings =
      "\"User-ID\";\"ISBN\";\"Book-Rating\"\n"
      "\"276725\";\"034545104X\";\"0\"\n"
      "\"276726\";\"0155061224\";\"5\"\n"
      "\"276727\";\"0446520802\";\"0\"\n"
      "\"276729\";\"052165615X\";\"3\"\n"
      "\"276729\";\"0000000001\";\"6\"\n"
      "\"276725\";\"0155061224\";\"0\"\n";
  write_text(dir / "books.csv", books);
  write_text(dir / "ratings.csv", ratings);
  const BookCrossingLoad r = load_bookcrossing(dir / "ratings.csv", dir / "books.csv");
  r.log.validate();

  // Independent join: ISBN set from the books file, then count ratings rows.
  std::set<std::string> isbns{"034545104X", "0155061224", "0446520802", "0000000001"};
  std::size_t kept = 0, dropped = 0;
  for (const std::string isbn : {"034545104X", "0155061224", "0446520802", "052165615X", "0000000001", "0155061224"}) {
    (isbns.contains(isbn) ? kept : dropped)++;
  }
  CHECK(r.kept == kept);
  CHECK(r.dropped == dropped);
  CHECK(r.log.size() == kept);
  CHECK(r.log.n_users() == 4);
  CHECK(r.log.n_items() == 4);

  const auto& c = *r.log.catalog;
  const auto& first = r.log.interactions[0];
  CHECK(c.users.id(first.user) == "276725");
  CHECK(c.items.id(first.item) == "034545104X");
  CHECK(first.label == 1);

  const FeatureField* author = c.feature("author");
  const FeatureField* publisher = c.feature("publisher");
  const FeatureField* decade = c.feature("decade");
  REQUIRE(author);
  REQUIRE(publisher);
  REQUIRE(decade);
  const auto notebook = *c.items.find("0446520802");
  CHECK(author->values.id(author->of(notebook)[0]) == "Nicholas Sparks");
  CHECK(publisher->values.id(publisher->of(notebook)[0]) == "Warner Books");
  CHECK(decade->values.id(decade->of(notebook)[0]) == "1990s");
  const auto cafe = *c.items.find("0000000001");
  CHECK(author->values.id(author->of(cafe)[0]) == "Zo\xc3\xab");
  CHECK(decade->values.id(decade->of(cafe)[0]) == "unknown");
}

TEST_CASE("bookcrossing loader errors") {
  TempDir dir("bx-bad");
  write_text(dir / "books.csv", "\"1\";\"T\";\"A\";\"2000\";\"P\";\"s\";\"m\";\"l\"\n");
  write_text(dir / "ratings.csv", "\"7\";\"2\";\"0\"\n");
  CHECK(category_of([&] { load_bookcrossing(dir / "ratings.csv", dir / "books.csv"); }) == ErrorCategory::Data);

  write_text(dir / "ratings.csv", "\"7\";\"1\";\"0\"\n7;1;0\n");
  const auto load = [&] { load_bookcrossing(dir / "ratings.csv", dir / "books.csv"); };
  CHECK(category_of(load) == ErrorCategory::Parse);
  CHECK(message_of(load).find("ratings.csv:2:") != std::string::npos);
}

TEST_CASE("latin1 decoding") {
  CHECK(latin1_to_utf8("abc") == "abc");
  CHECK(latin1_to_utf8("\xe9") == "\xc3\xa9");
  CHECK(latin1_to_utf8("\xff") == "\xc3\xbf");
}

TEST_CASE("build_stats counts and imbalance factor") {
  CatalogStats s = build_stats(log_from_freqs({10, 2, 1}));
  CHECK(s.imbalance_factor == doctest::Approx(10.0));
  CHECK(s.freq == std::vector<std::int64_t>{10, 2, 1});
  CHECK(build_stats(log_from_freqs({3, 3, 3})).imbalance_factor == doctest::Approx(1.0));

  // Zero-frequency items stay in the vocab but not in the denominator.
  s = build_stats(log_from_freqs({0, 4, 2, 0}));
  CHECK(s.imbalance_factor == doctest::Approx(2.0));
  CHECK(s.n_items() == 4);
  CHECK(s.order == std::vector<std::uint32_t>{1, 2, 0, 3});
  CHECK(s.rank == std::vector<std::uint32_t>{2, 0, 1, 3});

  CHECK(category_of([] { build_stats(log_from_freqs({0, 0})); }) == ErrorCategory::Data);
}

TEST_CASE("build_stats imbalance factor matches a group-by oracle") {
  ZipfOptions z;
  z.n_users = 300;
  z.n_items = 200;
  z.n_events = 8000;
  z.seed = 5;
  const InteractionLog log = synth_zipf(z);
  std::map<std::uint32_t, std::int64_t> counts;
  for (const auto& x : log.interactions) counts[x.item]++;
  std::int64_t hi = 0, lo = std::numeric_limits<std::int64_t>::max();
  for (auto [item, n] : counts) {
    hi = std::max(hi, n);
    lo = std::min(lo, n);
  }
  const CatalogStats s = build_stats(log);
  CHECK(s.imbalance_factor == doctest::Approx(static_cast<double>(hi) / static_cast<double>(lo)));
}

TEST_CASE("imbalance factor never drops when the most frequent item gains an event") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ZipfOptions z;
    z.n_users = 50;
    z.n_items = 40;
    z.n_events = 600;
    z.seed = seed;
    InteractionLog log = synth_zipf(z);
    const CatalogStats before = build_stats(log);
    log.interactions.push_back({0, before.order[0], 0, 1});
    CHECK(build_stats(log).imbalance_factor >= before.imbalance_factor);
  }
}

TEST_CASE("split_head_tail picks the most frequent items") {
  const CatalogStats s = split_head_tail(build_stats(log_from_freqs({1, 5, 2, 9, 3, 3, 1, 4, 2, 1})), 0.2);
  CHECK(s.head_count() == 2);
  CHECK(s.is_head(3));
  CHECK(s.is_head(1));

  const CatalogStats two = split_head_tail(build_stats(log_from_freqs({1, 2})), 0.5);
  CHECK(two.head_count() == 1);
  CHECK(two.is_head(1));
  CHECK_FALSE(two.is_head(0));

  // Tie at the boundary goes to the lower index.
  const CatalogStats tie = split_head_tail(build_stats(log_from_freqs({3, 5, 3, 3})), 0.5);
  CHECK(tie.is_head(1));
  CHECK(tie.is_head(0));
  CHECK_FALSE(tie.is_head(2));

  std::vector<int> many(3706, 1);
  CHECK(split_head_tail(build_stats(log_from_freqs(many)), 0.2).head_count() == 742);

  CHECK(category_of([] { split_head_tail(build_stats(log_from_freqs({1, 2})), 0.0); }) == ErrorCategory::Config);
  CHECK(category_of([] { split_head_tail(build_stats(log_from_freqs({1, 2})), 1.0); }) == ErrorCategory::Config);
}

TEST_CASE("head sets are nested and dominate tail frequencies") {
  ZipfOptions z;
  z.n_users = 100;
  z.n_items = 150;
  z.n_events = 3000;
  z.seed = 8;
  const CatalogStats base = build_stats(synth_zipf(z));
  std::vector<Slice> prev(base.n_items(), Slice::Tail);
  for (double f : {0.01, 0.05, 0.1, 0.2, 0.35, 0.5, 0.9}) {
    const CatalogStats s = split_head_tail(base, f);
    std::int64_t min_head = std::numeric_limits<std::int64_t>::max(), max_tail = 0;
    for (std::uint32_t i = 0; i < s.n_items(); ++i) {
      if (prev[i] == Slice::Head) CHECK(s.is_head(i));
      (s.is_head(i) ? min_head : max_tail) =
          s.is_head(i) ? std::min(min_head, s.freq[i]) : std::max(max_tail, s.freq[i]);
    }
    CHECK(min_head >= max_tail);
    prev = s.slice;
  }
}

TEST_CASE("chrono_split per-user rules") {
  InteractionLog log;
  log.catalog = cdnrec::testing::toy_catalog(2, 12, 2);
  // User 0: 10 events with shuffled timestamps; user 1: 2 events.
  const std::int64_t ts[] = {50, 10, 90, 30, 70, 20, 100, 40, 60, 80};
  for (int k = 0; k < 10; ++k) log.interactions.push_back({0, static_cast<std::uint32_t>(k), ts[k], 1});
  log.interactions.push_back({1, 10, 5, 1});
  log.interactions.push_back({1, 11, 6, 1});

  const SplitLog s = chrono_split(log, {0.8, 0.1, 0.1});
  CHECK(s.train.size() == 10);
  REQUIRE(s.valid.size() == 1);
  REQUIRE(s.test.size() == 1);
  CHECK(s.test.interactions[0].timestamp == 100);
  CHECK(s.valid.interactions[0].timestamp == 90);
  for (const auto& x : s.train.interactions) {
    if (x.user == 0) CHECK(x.timestamp <= 80);
  }
  CHECK(s.regularizer.empty());

  CHECK(category_of([&] { chrono_split(log, {0.8, 0.1, 0.2}); }) == ErrorCategory::Config);
  CHECK(category_of([&] { chrono_split(log, {1.0, 0.0, 0.0}); }) == ErrorCategory::Config);
}

TEST_CASE("chrono_split partitions the log") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    ZipfOptions z;
    z.n_users = 80;
    z.n_items = 50;
    z.n_events = 1500;
    z.seed = seed;
    const InteractionLog log = synth_zipf(z);
    const SplitLog s = chrono_split(log);
    CHECK(s.train.size() + s.valid.size() + s.test.size() == log.size());
    std::multiset<Key> joined = keys(s.train);
    for (const auto& k : keys(s.valid)) joined.insert(k);
    for (const auto& k : keys(s.test)) joined.insert(k);
    CHECK(joined == keys(log));

    // Every valid/test event is at least as new as the same user's train events.
    std::vector<std::int64_t> last_train(log.n_users(), std::numeric_limits<std::int64_t>::min());
    for (const auto& x : s.train.interactions) last_train[x.user] = std::max(last_train[x.user], x.timestamp);
    for (const auto& x : s.test.interactions) CHECK(x.timestamp >= last_train[x.user]);
  }
}

TEST_CASE("regularizer distribution caps head items at the largest tail frequency") {
  // Item 0: 100 events (head), item 1: 7 events, item 2: 3 events.
  const InteractionLog train = log_from_freqs({100, 7, 3}, 5);
  const CatalogStats stats = split_head_tail(build_stats(train), 0.3);
  REQUIRE(stats.head_count() == 1);
  const InteractionLog reg = build_regularizer_distribution(train, stats, 17);
  const auto c = count_items(reg);
  CHECK(c[0] == 7);
  CHECK(c[1] == 7);
  CHECK(c[2] == 3);
  CHECK(*std::max_element(c.begin(), c.end()) == 7);

  // Sub-multiset of train.
  const auto all = keys(train);
  for (const auto& k : keys(reg)) CHECK(all.count(k) >= 1);

  CHECK(keys(build_regularizer_distribution(train, stats, 17)) == keys(reg));
  CHECK(build_regularizer_distribution(train, stats, 17).interactions == reg.interactions);
  CHECK(build_regularizer_distribution(train, stats, 18).interactions != reg.interactions);
}

TEST_CASE("regularizer distribution properties on synthetic logs") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto d = cdnrec::testing::small_zipf(150, 80, 4000, seed);
    const auto train_counts = count_items(d.split.train);
    const auto reg_counts = count_items(d.split.regularizer);
    std::int64_t cap = 0;
    for (std::uint32_t i = 0; i < d.stats.n_items(); ++i) {
      if (!d.stats.is_head(i)) cap = std::max(cap, train_counts[i]);
    }
    for (std::uint32_t i = 0; i < d.stats.n_items(); ++i) {
      if (d.stats.is_head(i)) {
        CHECK(reg_counts[i] == std::min(train_counts[i], cap));
      } else {
        CHECK(reg_counts[i] == train_counts[i]);
      }
    }
  }
}

TEST_CASE("regularizer requires tail items with feedback") {
  const InteractionLog train = log_from_freqs({4, 3, 0});
  CatalogStats stats = build_stats(train);
  stats.slice = {Slice::Head, Slice::Head, Slice::Head};
  CHECK(category_of([&] { build_regularizer_distribution(train, stats, 1); }) == ErrorCategory::Data);
  stats.slice = {Slice::Head, Slice::Head, Slice::Tail};
  CHECK(category_of([&] { build_regularizer_distribution(train, stats, 1); }) == ErrorCategory::Data);
}

TEST_CASE("synth_zipf is deterministic and skewed by the exponent") {
  ZipfOptions z;
  z.n_users = 200;
  z.n_items = 1000;
  z.n_events = 20000;
  z.seed = 9;
  const InteractionLog a = synth_zipf(z);
  const InteractionLog b = synth_zipf(z);
  a.validate();
  CHECK(a.interactions == b.interactions);
  CHECK(a.n_items() == 1000);
  CHECK(a.n_users() == 200);
  CHECK(a.catalog->feature("genre") != nullptr);

  TempDir dir("synth");
  write_log_binary(dir / "a.bin", a.interactions);
  write_log_binary(dir / "b.bin", b.interactions);
  CHECK(cdnrec::testing::read_file(dir / "a.bin") == cdnrec::testing::read_file(dir / "b.bin"));

  z.exponent = 1.5;
  const double steep = build_stats(synth_zipf(z)).imbalance_factor;
  z.exponent = 0.5;
  const double shallow = build_stats(synth_zipf(z)).imbalance_factor;
  CHECK(steep > shallow);
}

TEST_CASE("synth_zipf with exponent zero is close to uniform") {
  ZipfOptions z;
  z.n_users = 2000;
  z.n_items = 50;
  z.n_events = 50000;
  z.exponent = 0.0;
  z.genre_preference = 0.0;
  z.seed = 2;
  const auto c = count_items(synth_zipf(z));
  const double expected = 50000.0 / 50.0;
  for (auto n : c) CHECK(std::abs(static_cast<double>(n) - expected) < 6.0 * std::sqrt(expected));
}

TEST_CASE("synth_zipf rejects bad options") {
  ZipfOptions z;
  z.n_items = 0;
  CHECK(category_of([&] { synth_zipf(z); }) == ErrorCategory::Config);
  z = {};
  z.exponent = -1;
  CHECK(category_of([&] { synth_zipf(z); }) == ErrorCategory::Config);
}

TEST_CASE("dataset cache round trip") {
  const auto d = cdnrec::testing::small_zipf();
  TempDir dir("cache");
  CHECK_FALSE(read_manifest(dir.path()).has_value());
  CHECK(category_of([&] { read_cache(dir.path()); }) == ErrorCategory::Io);

  write_cache(dir.path(), d);
  const PreparedDataset r = read_cache(dir.path());
  CHECK(r.split.train.interactions == d.split.train.interactions);
  CHECK(r.split.valid.interactions == d.split.valid.interactions);
  CHECK(r.split.test.interactions == d.split.test.interactions);
  CHECK(r.split.regularizer.interactions == d.split.regularizer.interactions);
  CHECK(r.stats.freq == d.stats.freq);
  CHECK(r.stats.slice == d.stats.slice);
  CHECK(r.stats.imbalance_factor == d.stats.imbalance_factor);
  CHECK(r.manifest == d.manifest);
  CHECK(r.split.train.catalog->items.ids() == d.split.train.catalog->items.ids());
  const auto* g0 = d.split.train.catalog->feature("genre");
  const auto* g1 = r.split.train.catalog->feature("genre");
  REQUIRE(g1);
  CHECK(g0->ids == g1->ids);
  CHECK(g0->offsets == g1->offsets);

  CHECK(d.manifest.at("n_interactions").at("all").get<std::size_t>() ==
        d.split.train.size() + d.split.valid.size() + d.split.test.size());
  CHECK(d.manifest.at("head_items").get<std::size_t>() == d.stats.head_count());
}

TEST_CASE("dataset cache detects corruption") {
  const auto d = cdnrec::testing::small_zipf();
  TempDir dir("cache-bad");
  write_cache(dir.path(), d);
  {
    std::string bytes = cdnrec::testing::read_file(dir / "test.bin");
    bytes.resize(bytes.size() / 2);
    write_text(dir / "test.bin", bytes);
  }
  CHECK(category_of([&] { read_cache(dir.path()); }) == ErrorCategory::Data);
  write_text(dir / "test.bin", "garbage!garbage!");
  CHECK(category_of([&] { read_cache(dir.path()); }) == ErrorCategory::Data);
  write_text(dir / "manifest.json", "{ not json");
  CHECK(category_of([&] { read_cache(dir.path()); }) == ErrorCategory::Data);
}

TEST_CASE("log validation catches bad indices") {
  InteractionLog log = log_from_freqs({2, 1});
  log.interactions.push_back({0, 5, 0, 1});
  CHECK(category_of([&] { log.validate(); }) == ErrorCategory::Data);
  log.interactions.back() = {0, 1, 0, 2};
  CHECK(category_of([&] { log.validate(); }) == ErrorCategory::Data);
}
