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

namespace cdnrec::model {

enum class ScheduleVariant { CDN, BBN, Fixed };

/// Epoch-indexed weight alpha_t blending main- and regularizer-branch logits.
///
///   CDN:   1 - (t / (gamma * T))^2, gamma > 1, so alpha_T = 1 - 1/gamma^2 > 0
///   BBN:   1 - (t / T)^2
///   Fixed: constant alpha0
struct AdapterSchedule {
  ScheduleVariant variant = ScheduleVariant::CDN;
  double gamma = 4.0;
  double fixed_alpha = 1.0;
  int total_epochs = 1;

  static AdapterSchedule cdn(double gamma, int total_epochs);
  static AdapterSchedule bbn(int total_epochs);
  static AdapterSchedule fixed(double alpha, int total_epochs);

  void validate() const;
  /// t is the number of completed epochs, 0 <= t <= T.
  double alpha(int t) const;
};

/// The unvalidated CDN expression; at gamma = 1 it is the BBN schedule.
double cdn_alpha(double t, double gamma, double total_epochs);

}  // namespace cdnrec::model
