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

#include <cdnrec/numerics/tape.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cdnrec {

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::size_t samples = 200;
  std::uint64_t seed = 0;
  /// Denominator floor of the relative error, so that two near-zero
  /// derivatives do not produce a spurious large ratio.
  double abs_floor = 1e-7;
};

struct GradCoordinate {
  std::string slot;
  Index row = 0;
  Index col = 0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  GradCoordinate worst;
  std::size_t checked = 0;
  std::vector<GradCoordinate> skipped_kinks;
  bool passed = false;
};

/// Central-difference check of reverse-mode gradients.
///
/// `loss` records a scalar loss on the tape it is given. Coordinates are
/// sampled over non-frozen slots; for sparse slots only rows the analytic pass
/// touched are eligible. A coordinate whose +/- epsilon probes change any relu
/// activation pattern sits on a kink and is skipped (listed in the report).
GradCheckReport check_gradients(const std::function<ad::Var(ad::Tape&)>& loss, ParamStore& params,
                                const GradCheckOptions& options = {});

}  // namespace cdnrec
