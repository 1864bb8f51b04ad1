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

#include "pipesim/analytic.hpp"

#include <stdexcept>

namespace pipesim {

std::string kind_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::GPipe: return "gpipe";
    case ScheduleKind::OneF1B: return "1f1b";
    case ScheduleKind::Chimera: return "chimera";
    case ScheduleKind::Hanayo: return "hanayo";
  }
  return "?";
}

ScheduleKind kind_from_name(const std::string& name) {
  if (name == "gpipe") return ScheduleKind::GPipe;
  if (name == "1f1b" || name == "onef1b") return ScheduleKind::OneF1B;
  if (name == "chimera") return ScheduleKind::Chimera;
  if (name == "hanayo") return ScheduleKind::Hanayo;
  throw std::invalid_argument("unknown schedule kind: " + name);
}

FormulaResult formula_bubble_ratio(ScheduleKind kind, int stages,
                                   int microbatches) {
  if (stages < 2) throw std::invalid_argument("formula requires S >= 2");
  if (microbatches < 1) throw std::invalid_argument("formula requires B >= 1");

  FormulaResult r;
  switch (kind) {
    case ScheduleKind::GPipe:
    case ScheduleKind::OneF1B:
      r.bubble_ratio = static_cast<double>(stages - 1) /
                       static_cast<double>(stages - 1 + microbatches);
      break;
    case ScheduleKind::Chimera:
      if (stages % 2 != 0)
        throw std::invalid_argument("Chimera formula requires an even S");
      r.bubble_ratio = static_cast<double>(stages - 2) /
                       static_cast<double>(stages - 2 + 2 * microbatches);
      break;
    case ScheduleKind::Hanayo:
      throw std::invalid_argument("no closed-form bubble ratio for Hanayo");
  }
  return r;
}

}  // namespace pipesim
