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

#include <cdnrec/model/schedule.hpp>

#include <cdnrec/errors.hpp>

#include <string>

namespace cdnrec::model {

double cdn_alpha(double t, double gamma, double total_epochs) {
  const double x = t / (gamma * total_epochs);
  return 1.0 - x * x;
}

AdapterSchedule AdapterSchedule::cdn(double gamma, int total_epochs) {
  AdapterSchedule s{ScheduleVariant::CDN, gamma, 1.0, total_epochs};
  s.validate();
  return s;
}

AdapterSchedule AdapterSchedule::bbn(int total_epochs) {
  AdapterSchedule s{ScheduleVariant::BBN, 1.0, 1.0, total_epochs};
  s.validate();
  return s;
}

AdapterSchedule AdapterSchedule::fixed(double alpha, int total_epochs) {
  AdapterSchedule s{ScheduleVariant::Fixed, 1.0, alpha, total_epochs};
  s.validate();
  return s;
}

void AdapterSchedule::validate() const {
  if (total_epochs < 1) fail(ErrorCategory::Config, "schedule needs total_epochs >= 1");
  if (variant == ScheduleVariant::CDN && !(gamma > 1.0)) {
    fail(ErrorCategory::Config, "CDN schedule requires gamma > 1, got " + std::to_string(gamma));
  }
  if (variant == ScheduleVariant::Fixed && !(fixed_alpha >= 0.0 && fixed_alpha <= 1.0)) {
    fail(ErrorCategory::Config, "fixed alpha must lie in [0, 1]");
  }
}

double AdapterSchedule::alpha(int t) const {
  if (t < 0 || t > total_epochs) {
    fail(ErrorCategory::Config, "epoch " + std::to_string(t) + " outside 0.." + std::to_string(total_epochs));
  }
  switch (variant) {
    case ScheduleVariant::CDN: return cdn_alpha(t, gamma, total_epochs);
    case ScheduleVariant::BBN: return cdn_alpha(t, 1.0, total_epochs);
    case ScheduleVariant::Fixed: return fixed_alpha;
  }
  return 1.0;
}

}  // namespace cdnrec::model
