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
#include <optional>
#include <string>
#include <vector>

#include "pipesim/analytic.hpp"
#include "pipesim/costmodel.hpp"
#include "pipesim/phase.hpp"

namespace pipesim {

// One scheduled unit of work: a phase of a microbatch on some branch.
// The microbatch index is meaningless for Opt cells.
struct Cell {
  std::int16_t mb = 0;
  Branch branch = Branch::Down;
  Phase phase = Phase::Fwd;
};

// A pipeline schedule as a discrete worker x slot grid. Slots are structural:
// they carry relative weights, not hardware durations. Worker rows use the
// canonical layout for all families: Down stage k lives on worker k, Up
// stage k on worker W-1-k.
struct ScheduleTable {
  ScheduleKind kind = ScheduleKind::GPipe;
  int workers = 0;       // W
  int slots = 0;         // T
  int stages = 0;        // S, per branch
  int microbatches = 0;  // B
  bool recompute = false;
  SlotWeights weights;
  std::vector<std::vector<std::optional<Cell>>> grid;  // [worker][slot]

  const std::optional<Cell>& at(int w, int t) const { return grid[w][t]; }
  bool bidirectional() const {
    return kind == ScheduleKind::Chimera || kind == ScheduleKind::Hanayo;
  }
  int worker_of(Branch b, int stage) const {
    return b == Branch::Down ? stage : workers - 1 - stage;
  }
  int stage_of(int worker, Branch b) const {
    return b == Branch::Down ? worker : workers - 1 - worker;
  }
};

// Hosting of one stage of one branch: which worker holds how many blocks.
struct StageHost {
  int worker = 0;
  int blocks = 0;
};

// Per-branch stage-to-worker assignment with block counts.
// For Chimera both branches cover the full model (duplicated parameters);
// for folded (Hanayo-style) placements the two branches are the two halves
// of one model copy, traversed down then up by every microbatch.
struct StagePlacement {
  int total_blocks = 0;  // N, blocks in one model copy
  bool folded = false;
  std::vector<StageHost> down;
  std::vector<StageHost> up;  // empty for unidirectional schedules

  int stages() const { return static_cast<int>(down.size()); }
  bool bidirectional() const { return !up.empty(); }
  const StageHost& host(Branch b, int stage) const;
  // Total blocks resident on a worker, across all hosted stages.
  int hosted_blocks(int worker) const;
  void check() const;
};

StagePlacement uniform_placement(int stages, int total_blocks);
StagePlacement chimera_placement(int stages, int total_blocks);
// The 1:2 split: both pipelines carry k blocks per stage over their first
// half and 2k over their second half, mirrored onto workers so that every
// worker hosts the same total. Requires N divisible by 3S/2.
StagePlacement chimera_asymmetric_placement(int stages, int total_blocks);
StagePlacement hanayo_placement(int stages, int total_blocks, int waves = 2);
// The canonical placement for a schedule family (uniform block counts).
StagePlacement default_placement(ScheduleKind kind, int stages,
                                 int total_blocks);

// One step of a microbatch's path through the model: (branch, stage).
struct ChainLink {
  Branch branch = Branch::Down;
  int stage = 0;
};

// The ordered stage sequence microbatch mb traverses under a schedule kind.
// GPipe/1F1B: Down 0..S-1. Chimera: one branch per microbatch half.
// Hanayo: every microbatch sweeps Down 0..S-1 then Up 0..S-1.
std::vector<ChainLink> microbatch_chain(ScheduleKind kind, int stages,
                                        int microbatches, int mb);

struct BuildOptions {
  bool recompute = false;
  int waves = 2;  // Hanayo only; the two-wave variant is the supported one
};

// Builds a schedule table by greedy earliest-feasible slot packing, subject
// to causality, one phase per worker-slot, and the family's flow discipline.
// Backward work is placed as a consecutive (Recomp,)Agrad,Wgrad block and a
// stage's backward may start only after the downstream stage's backward
// block has completed.
ScheduleTable build_schedule(ScheduleKind kind, int stages, int microbatches,
                             const BuildOptions& opts = {});
ScheduleTable build_schedule(ScheduleKind kind, int stages, int microbatches,
                             const StagePlacement& placement,
                             const BuildOptions& opts = {});

struct Violation {
  int worker = -1;
  int slot = -1;
  std::string rule;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool valid() const { return violations.empty(); }
  std::string to_string() const;
};

// Checks causal phase order per (microbatch, branch, stage), completeness
// (every required phase exactly once), per-worker optimizer position, and
// cross-worker slot causality. Never throws; it reports.
ValidationReport validate_table(const ScheduleTable& table);

struct StructuralMetrics {
  double schedule_length = 0.0;  // weighted slots over the active span
  double bubble_ratio = 0.0;     // total idle weight / (W * schedule_length)
  double utilization = 0.0;      // 1 - bubble_ratio
  double total_idle = 0.0;
  std::vector<double> per_worker_idle;
  int first_slot = 0;
  int last_slot = 0;
};

// Hardware-agnostic table metrics. Idle is counted on every worker across
// the whole active span, including fill and drain ramps.
StructuralMetrics structural_metrics(const ScheduleTable& table);

// Span during which one (mb, branch, stage) activation stays resident,
// in slots, endpoints inclusive.
struct RetentionInterval {
  int mb = 0;
  Branch branch = Branch::Down;
  int stage = 0;
  int worker = 0;
  int from_slot = 0;
  int to_slot = 0;
  double bytes = 0.0;
};

struct ActivationProfile {
  std::vector<RetentionInterval> intervals;
  std::vector<int> peak_live_count;          // per worker
  std::vector<double> peak_activation_bytes; // per worker
};

// Structural activation-retention extraction: an interval opens at the Fwd
// slot and closes when Wgrad completes. With recompute the interval closes
// at Fwd end and reopens at the Recomp slot.
ActivationProfile activation_lifetimes(const ScheduleTable& table,
                                       const StagePlacement& placement,
                                       const ModelConfig& model);

// Persistent bytes on a worker: params + grads + optimizer state over all
// hosted stages, i.e. blocks * weight_bytes * (2 + optimizer_multiplier).
double persistent_bytes(const StagePlacement& placement,
                        const ModelConfig& model, int worker,
                        double optimizer_multiplier);
double persistent_bytes(const StagePlacement& placement,
                        const ModelConfig& model, int worker);

enum class TableFormat { Ascii, Csv };

// Renders one row per worker. Ascii: phase letter + microbatch, with a
// branch prefix for bidirectional tables, '.' for idle. Csv: header row
// `worker,slot0,...`, cell syntax `D|U` + `F|A|W|O|R` + microbatch, empty
// for idle; parse_table_csv round-trips it losslessly.
std::string render_table(const ScheduleTable& table, TableFormat format);
ScheduleTable parse_table_csv(const std::string& text);

}  // namespace pipesim
