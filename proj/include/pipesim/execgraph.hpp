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
#include <vector>

#include "pipesim/costmodel.hpp"
#include "pipesim/schedule.hpp"

namespace pipesim {

enum class NodeKind { Compute, Transfer };
enum class TransferDirection { Activation, Gradient };

struct ExecNode {
  int id = -1;
  NodeKind kind = NodeKind::Compute;
  // Compute fields.
  int worker = -1;
  int mb = -1;
  Branch branch = Branch::Down;
  int stage = -1;
  Phase phase = Phase::Fwd;
  int slot = -1;         // source table slot
  int local_index = -1;  // position in the worker's row-wise order
  // Transfer fields. order_hint carries the consumer's local index so links
  // can break dispatch ties the way the receiver needs the data.
  int src = -1;
  int dst = -1;
  TransferDirection direction = TransferDirection::Activation;
  int order_hint = 0;
  CostAnnotation cost;
};

// Communication-annotated execution DAG derived from a schedule table.
// Worker-local order follows the table row-wise; cross-stage data movement
// is explicit as transfer nodes between workers hosting adjacent stages.
struct ExecGraph {
  ScheduleKind schedule = ScheduleKind::GPipe;
  int workers = 0;
  int stages = 0;
  int microbatches = 0;
  int microbatch_size = 0;
  bool recompute = false;
  SlotWeights weights;
  StagePlacement placement;

  std::vector<ExecNode> nodes;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> local_order;  // per worker, compute node ids

  std::vector<int> topological_order() const;  // throws if cyclic
};

// Translates a validated table into an execution graph. Consecutive cells on
// a worker chain into precedence edges; for each microbatch and each adjacent
// stage pair of its path, an activation transfer links the forward sides and
// a gradient transfer leaves after the downstream backward block (Wgrad)
// completes. Stages colocated on one worker connect directly with no
// transfer. Transfer payloads are the stage-boundary tensor in both
// directions. Opt nodes depend on all Wgrad nodes of their worker.
ExecGraph build_exec_graph(const ScheduleTable& table,
                           const StagePlacement& placement,
                           const ModelConfig& model);

struct GraphReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
  std::string to_string() const;
};

// Verifies acyclicity, per-worker local-order consistency, and the
// one-transfer-per-cross-host-dependency rule. Reporting only.
GraphReport check_graph(const ExecGraph& graph);

// Line-oriented dump for golden-file tests: `NODE <id> ...` / `EDGE <a> <b>`.
std::string dump_graph(const ExecGraph& graph);

}  // namespace pipesim
