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

#include <cdnrec/app/experiment.hpp>
#include <cdnrec/errors.hpp>
#include <cdnrec/evaluation/analysis.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cdnrec::app {

/// Writes the dataset cache and prints the long-tail summary. Rerunning with
/// an up-to-date cache does nothing.
void cmd_prepare(const ExperimentConfig& cfg, std::ostream& out);

struct TrainOptions {
  std::optional<int> trials;  // overrides eval.trials
  bool resume = false;        // continue each trial from its last.ckpt
};

/// Trains eval.trials seeded runs under run_dir/trial-<k>/, evaluates each on
/// the test split and writes run_dir/{manifest.json,report.json,report.txt}.
eval::EvalReport cmd_train(const ExperimentConfig& cfg, const TrainOptions& opts, std::ostream& out);

struct EvaluateOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path out_dir;  // default: checkpoint's directory
  bool gates = false;
};

eval::EvalReport cmd_evaluate(const ExperimentConfig& cfg, const EvaluateOptions& opts, std::ostream& out);

eval::GateReport cmd_gates(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                           const std::filesystem::path& out_path, std::ostream& out);

struct ExportOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path out_path;
  std::string subset = "all";  // all | head | tail
  std::optional<std::size_t> limit;
  std::string label_field = "genre";
};

void cmd_export_embeddings(const ExperimentConfig& cfg, const ExportOptions& opts, std::ostream& out);

/// Trains one CDN configuration per gamma (same data and seeds) under
/// run_dir/gamma-<value>/ and writes CSV rows (gamma, slice, metric, k, mean, sem).
void cmd_sweep_gamma(const ExperimentConfig& cfg, const std::vector<double>& gammas,
                     const std::filesystem::path& csv_path, std::ostream& out);

/// Process exit code of an error category (0 is success).
int exit_code(ErrorCategory c);

}  // namespace cdnrec::app
