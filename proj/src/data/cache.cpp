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

#include <cdnrec/errors.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace cdnrec::data {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "binary cache I/O assumes a little-endian host");

template <typename T>
void write_array(std::ofstream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
std::vector<T> read_array(std::ifstream& in, std::size_t n, const std::filesystem::path& path) {
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  if (!in) fail(ErrorCategory::Data, "truncated interaction file '" + path.string() + "'");
  return v;
}

constexpr std::array<char, 8> kLogMagic = {'C', 'D', 'N', 'R', 'L', 'O', 'G', '1'};

json catalog_to_json(const Catalog& c) {
  json features = json::array();
  for (const auto& f : c.item_features) {
    features.push_back({{"name", f.name}, {"values", f.values.ids()}, {"offsets", f.offsets}, {"ids", f.ids}});
  }
  return {{"users", c.users.ids()}, {"items", c.items.ids()}, {"features", features}};
}

std::shared_ptr<Catalog> catalog_from_json(const json& j) {
  auto c = std::make_shared<Catalog>();
  for (const auto& u : j.at("users")) c->users.add(u.get<std::string>());
  for (const auto& i : j.at("items")) c->items.add(i.get<std::string>());
  for (const auto& jf : j.at("features")) {
    FeatureField f;
    f.name = jf.at("name").get<std::string>();
    for (const auto& v : jf.at("values")) f.values.add(v.get<std::string>());
    f.offsets = jf.at("offsets").get<std::vector<std::uint32_t>>();
    f.ids = jf.at("ids").get<std::vector<std::uint32_t>>();
    c->item_features.push_back(std::move(f));
  }
  c->validate();
  return c;
}

}  // namespace

PreparedDataset prepare_dataset(const InteractionLog& log, SplitRatios ratios, double head_fraction,
                                std::uint64_t seed) {
  if (!(head_fraction > 0.0 && head_fraction < 1.0)) {
    fail(ErrorCategory::Config, "head_fraction must lie in (0, 1), got " + std::to_string(head_fraction));
  }
  log.validate();
  PreparedDataset d;
  d.split = chrono_split(log, ratios);
  d.stats = split_head_tail(build_stats(d.split.train), head_fraction);
  d.split.regularizer = build_regularizer_distribution(d.split.train, d.stats, seed);
  const std::size_t n_head = d.stats.head_count();
  d.manifest = {{"format", "cdnrec-dataset"},
                {"version", 1},
                {"n_users", log.n_users()},
                {"n_items", log.n_items()},
                {"n_interactions",
                 {{"all", log.size()},
                  {"train", d.split.train.size()},
                  {"valid", d.split.valid.size()},
                  {"test", d.split.test.size()},
                  {"regularizer", d.split.regularizer.size()}}},
                {"imbalance_factor", d.stats.imbalance_factor},
                {"head_fraction", head_fraction},
                {"head_items", n_head},
                {"tail_items", d.stats.n_items() - n_head},
                {"split", {ratios.train, ratios.valid, ratios.test}},
                {"seed", seed}};
  return d;
}

void write_log_binary(const std::filesystem::path& path, const std::vector<Interaction>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::Io, "cannot write '" + path.string() + "'");
  out.write(kLogMagic.data(), kLogMagic.size());
  const std::uint64_t n = rows.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  std::vector<std::uint32_t> users(n), items(n);
  std::vector<std::int64_t> ts(n);
  std::vector<std::uint8_t> labels(n);
  for (std::size_t k = 0; k < n; ++k) {
    users[k] = rows[k].user;
    items[k] = rows[k].item;
    ts[k] = rows[k].timestamp;
    labels[k] = rows[k].label;
  }
  write_array(out, users);
  write_array(out, items);
  write_array(out, ts);
  write_array(out, labels);
  if (!out) fail(ErrorCategory::Io, "write failed for '" + path.string() + "'");
}

std::vector<Interaction> read_log_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::Io, "cannot open '" + path.string() + "'");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kLogMagic) fail(ErrorCategory::Data, "'" + path.string() + "' is not an interaction file");
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  const auto users = read_array<std::uint32_t>(in, n, path);
  const auto items = read_array<std::uint32_t>(in, n, path);
  const auto ts = read_array<std::int64_t>(in, n, path);
  const auto labels = read_array<std::uint8_t>(in, n, path);
  std::vector<Interaction> rows(n);
  for (std::size_t k = 0; k < n; ++k) rows[k] = {users[k], items[k], ts[k], labels[k]};
  return rows;
}

void write_cache(const std::filesystem::path& dir, const PreparedDataset& data) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCategory::Io, "cannot create '" + dir.string() + "': " + ec.message());
  {
    std::ofstream out(dir / "catalog.json");
    if (!out) fail(ErrorCategory::Io, "cannot write catalog in '" + dir.string() + "'");
    out << catalog_to_json(*data.split.train.catalog);
  }
  write_log_binary(dir / "train.bin", data.split.train.interactions);
  write_log_binary(dir / "valid.bin", data.split.valid.interactions);
  write_log_binary(dir / "test.bin", data.split.test.interactions);
  write_log_binary(dir / "regularizer.bin", data.split.regularizer.interactions);
  // Manifest last: its presence marks a complete cache.
  std::ofstream out(dir / "manifest.json");
  if (!out) fail(ErrorCategory::Io, "cannot write manifest in '" + dir.string() + "'");
  out << data.manifest.dump(2) << "\n";
}

std::optional<nlohmann::json> read_manifest(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCategory::Data, "corrupt manifest in '" + dir.string() + "': " + e.what());
  }
}

PreparedDataset read_cache(const std::filesystem::path& dir) {
  auto manifest = read_manifest(dir);
  if (!manifest) fail(ErrorCategory::Io, "no dataset cache at '" + dir.string() + "' (run `prepare` first)");
  std::ifstream in(dir / "catalog.json");
  if (!in) fail(ErrorCategory::Io, "missing catalog.json in '" + dir.string() + "'");
  std::shared_ptr<const Catalog> catalog;
  try {
    catalog = catalog_from_json(json::parse(in));
  } catch (const json::exception& e) {
    fail(ErrorCategory::Data, "corrupt catalog in '" + dir.string() + "': " + e.what());
  }
  PreparedDataset d;
  d.split.train = {catalog, read_log_binary(dir / "train.bin")};
  d.split.valid = {catalog, read_log_binary(dir / "valid.bin")};
  d.split.test = {catalog, read_log_binary(dir / "test.bin")};
  d.split.regularizer = {catalog, read_log_binary(dir / "regularizer.bin")};
  for (const auto* log : {&d.split.train, &d.split.valid, &d.split.test, &d.split.regularizer}) log->validate();
  d.stats = split_head_tail(build_stats(d.split.train), manifest->at("head_fraction").get<double>());
  d.manifest = std::move(*manifest);
  return d;
}

}  // namespace cdnrec::data
