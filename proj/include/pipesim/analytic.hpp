// Copyright 2026 The pipesim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

namespace pipesim {

enum class ScheduleKind { GPipe, OneF1B, Chimera, Hanayo };

std::string kind_name(ScheduleKind k);
ScheduleKind kind_from_name(const std::string& name);

// Closed-form bubble-ratio estimate. Assumes t_bwd = 2*t_fwd, synchronous
// execution and zero communication cost.
struct FormulaResult {
  double bubble_ratio = 0.0;
  std::string assumptions = "t_bwd = 2*t_fwd, synchronous, no communication";
};

// Fill/drain idle of (stages on the critical path - 1) * (t_f + t_b) over
// per-worker work B * (t_f + t_b), with t_b = 2*t_f cancelling:
//   GPipe, 1F1B:  (S-1) / (S-1 + B)
//   Chimera:      (S-2) / (S-2 + 2B)
// There is no closed form for Hanayo; it is evaluated at the table and
// simulation levels only.
FormulaResult formula_bubble_ratio(ScheduleKind kind, int stages,
                                   int microbatches);

}  // namespace pipesim
