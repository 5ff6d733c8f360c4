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

#include <cdnrec/data/long_tail.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace cdnrec::data {

/// Everything training and evaluation need: the split logs, the long-tail
/// statistics of the training split (with head/tail tags) and a manifest.
struct PreparedDataset {
  SplitLog split;
  CatalogStats stats;
  nlohmann::json manifest;
};

/// split -> stats on train -> head/tail tags -> regularizer stream.
PreparedDataset prepare_dataset(const InteractionLog& log, SplitRatios ratios, double head_fraction,
                                std::uint64_t seed);

/// Cache directory layout:
///   manifest.json    counts, imbalance factor, head fraction, seed, fingerprint
///   catalog.json     user ids, item ids, item feature fields (CSR)
///   {train,valid,test,regularizer}.bin   interaction arrays, see write_log_binary
void write_cache(const std::filesystem::path& dir, const PreparedDataset& data);
PreparedDataset read_cache(const std::filesystem::path& dir);
std::optional<nlohmann::json> read_manifest(const std::filesystem::path& dir);

/// Little-endian columnar layout: magic "CDNRLOG1", u64 n, u32 users[n],
/// u32 items[n], i64 timestamps[n], u8 labels[n].
void write_log_binary(const std::filesystem::path& path, const std::vector<Interaction>& rows);
std::vector<Interaction> read_log_binary(const std::filesystem::path& path);

}  // namespace cdnrec::data
