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

#include <cstdint>
#include <stdexcept>

namespace pipesim {

// Execution phases of a microbatch on one stage. Causal order within a
// microbatch on a stage is Fwd < (Recomp <) Agrad < Wgrad; the optimizer
// update runs once per worker after all of its weight-gradient work.
enum class Phase : std::uint8_t { Fwd, Agrad, Wgrad, Opt, Recomp };

// Pipeline direction. Unidirectional schedules use Down only; bidirectional
// schedules (Chimera) and wave schedules (Hanayo) use both.
enum class Branch : std::uint8_t { Down, Up };

inline char phase_letter(Phase p) {
  switch (p) {
    case Phase::Fwd: return 'F';
    case Phase::Agrad: return 'A';
    case Phase::Wgrad: return 'W';
    case Phase::Opt: return 'O';
    case Phase::Recomp: return 'R';
  }
  return '?';
}

inline Phase phase_from_letter(char c) {
  switch (c) {
    case 'F': return Phase::Fwd;
    case 'A': return Phase::Agrad;
    case 'W': return Phase::Wgrad;
    case 'O': return Phase::Opt;
    case 'R': return Phase::Recomp;
    default: throw std::invalid_argument("unknown phase letter");
  }
}

inline char branch_letter(Branch b) { return b == Branch::Down ? 'D' : 'U'; }

inline Branch branch_from_letter(char c) {
  if (c == 'D') return Branch::Down;
  if (c == 'U') return Branch::Up;
  throw std::invalid_argument("unknown branch letter");
}

// Relative slot durations, in dimensionless multiples of the forward time.
// The defaults realize t_bwd = 2 * t_fwd via the Agrad+Wgrad split; the
// optimizer update is structurally free (its cost appears only in simulation).
struct SlotWeights {
  double fwd = 1.0;
  double agrad = 1.0;
  double wgrad = 1.0;
  double opt = 0.0;
  double recomp = 1.0;

  double of(Phase p) const {
    switch (p) {
      case Phase::Fwd: return fwd;
      case Phase::Agrad: return agrad;
      case Phase::Wgrad: return wgrad;
      case Phase::Opt: return opt;
      case Phase::Recomp: return recomp;
    }
    return 0.0;
  }
};

}  // namespace pipesim
