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

#include <cdnrec/baselines/methods.hpp>
#include <cdnrec/data/cache.hpp>
#include <cdnrec/data/long_tail.hpp>
#include <cdnrec/data/synth.hpp>
#include <cdnrec/model/config.hpp>
#include <cdnrec/training/trainer.hpp>

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cdnrec::app {

struct DatasetSpec {
  std::string source = "synthetic";  // synthetic | movielens | bookcrossing
  std::filesystem::path ratings;     // ratings.dat / BX-Book-Ratings.csv
  std::filesystem::path items;       // movies.dat / BX-Books.csv
  std::optional<double> head_fraction;  // default by source
  data::SplitRatios split;
  std::uint64_t seed = 1;
  data::ZipfOptions synthetic;
  std::filesystem::path cache_dir;

  double effective_head_fraction() const;
};

struct EvalSpec {
  std::vector<int> k{50};
  int trials = 1;
};

/// One experiment: data, architecture, method, training and evaluation.
/// Parsed from JSON; unknown keys are rejected.
struct ExperimentConfig {
  DatasetSpec dataset;
  model::ModelConfig model;
  baselines::MethodConfig method;
  train::TrainConfig train;
  EvalSpec eval;
  std::filesystem::path run_dir = "runs/default";

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Stable hash of everything that determines the prepared dataset.
std::string dataset_fingerprint(const DatasetSpec& spec);

/// Loads (or generates) the raw log and prepares splits and statistics. With
/// a cache_dir, a cache whose fingerprint matches is read instead; a fresh
/// preparation is written there. `reused` reports which happened.
data::PreparedDataset load_dataset(const DatasetSpec& spec, bool* reused = nullptr, std::ostream* log = nullptr);

/// Seed of trial k: train.seed + k.
train::TrainConfig trial_config(const ExperimentConfig& cfg, int trial, const std::filesystem::path& dir);

}  // namespace cdnrec::app
