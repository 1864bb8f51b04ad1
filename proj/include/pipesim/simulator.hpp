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

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pipesim/costmodel.hpp"
#include "pipesim/execgraph.hpp"

namespace pipesim {

// Per-node start/end times plus per-resource busy accounting.
struct Timeline {
  std::vector<double> start, end;  // indexed by node id
  double makespan = 0.0;
  std::vector<double> busy;  // per worker, compute time only
  std::map<std::pair<int, int>, double> link_busy;  // per directed link
};

struct SimMetrics {
  double t_sim = 0.0;
  double beta_idle = 0.0;
  std::vector<double> per_worker_utilization;
};

// Deterministic list-scheduling execution of an annotated graph. A compute
// node starts when its predecessors have finished; workers execute their
// compute nodes strictly in table order (one compute resource per worker).
// Transfers occupy the directed link between their worker pair; opposite
// directions are independent, and transfers overlap freely with compute on
// both endpoints. Links dispatch the earliest-ready transfer, breaking ties
// by consumer local order, then node id.
Timeline simulate(const ExecGraph& graph, const SystemConfig& sys);

// Simulation with durations proportional to slot weights and free transfers;
// the structural bridge between table metrics and simulated metrics.
Timeline simulate_structural(const ExecGraph& graph, double unit_time = 1.0);

SimMetrics timeline_metrics(const Timeline& tl, int workers);

// Stepwise resident bytes per worker, split into a constant persistent term
// and an activation term that returns to zero at the makespan.
struct MemoryTimeline {
  // (time, activation bytes after this instant), per worker.
  std::vector<std::vector<std::pair<double, double>>> activation_steps;
  std::vector<double> persistent;       // per worker
  std::vector<double> peak_activation;  // per worker
  std::vector<double> peak_total;       // per worker
  double global_peak_activation = 0.0;
  double global_peak_total = 0.0;
};

// Activations for one (mb, branch, stage) live from the start of Fwd to the
// end of Wgrad. With recompute only the boundary tensor stays resident after
// Fwd ends, and the full footprint returns at Recomp start.
MemoryTimeline memory_timeline(const Timeline& tl, const ExecGraph& graph,
                               const StagePlacement& placement,
                               const ModelConfig& model);

// Chrome trace-event JSON: one lane per worker and per directed link,
// complete events ("ph":"X") with microsecond timestamps. Zero-duration
// events are omitted.
void export_trace(const Timeline& tl, const ExecGraph& graph,
                  const std::string& path);
std::string trace_json(const Timeline& tl, const ExecGraph& graph);

// Timeline CSV: node_id,worker,kind,phase,mb,branch,start_s,end_s.
std::string timeline_csv(const Timeline& tl, const ExecGraph& graph);

}  // namespace pipesim
