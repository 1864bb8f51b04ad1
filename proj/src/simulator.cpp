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

#include "pipesim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pipesim {

namespace {

// Link dispatch order: ready time, then consumer local order, then id.
struct ReadyTransfer {
  double ready;
  int order_hint;
  int id;
  bool operator>(const ReadyTransfer& o) const {
    if (ready != o.ready) return ready > o.ready;
    if (order_hint != o.order_hint) return order_hint > o.order_hint;
    return id > o.id;
  }
};

struct LinkState {
  double free_at = 0.0;
  std::priority_queue<ReadyTransfer, std::vector<ReadyTransfer>,
                      std::greater<ReadyTransfer>>
      ready;
};

Timeline run(const ExecGraph& graph, const std::vector<double>& durations) {
  const size_t n = graph.nodes.size();
  std::vector<std::vector<int>> succ(n);
  std::vector<int> pending(n, 0);
  for (auto [a, b] : graph.edges) {
    succ[a].push_back(b);
    ++pending[b];
  }

  Timeline tl;
  tl.start.assign(n, 0.0);
  tl.end.assign(n, 0.0);
  tl.busy.assign(graph.workers, 0.0);
  std::vector<double> ready_at(n, 0.0);

  std::map<std::pair<int, int>, LinkState> links;

  // Completion events; ties resolved by node id for determinism.
  using Event = std::pair<double, int>;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events;

  auto start_node = [&](int id, double at) {
    tl.start[id] = at;
    tl.end[id] = at + durations[id];
    events.push({tl.end[id], id});
  };

  auto dispatch_link = [&](LinkState& ls, std::pair<int, int> key) {
    // Work-conserving: the earliest-ready transfer goes first, ties broken
    // by consumer local order, then id.
    while (!ls.ready.empty()) {
      ReadyTransfer top = ls.ready.top();
      double begin = std::max(ls.free_at, top.ready);
      ls.ready.pop();
      start_node(top.id, begin);
      ls.free_at = tl.end[top.id];
      tl.link_busy[key] += durations[top.id];
    }
  };

  std::set<std::pair<int, int>> touched;
  auto node_ready = [&](int id, double at) {
    const ExecNode& nd = graph.nodes[id];
    if (nd.kind == NodeKind::Compute) {
      // Chain edges already serialize each worker's computes in table order.
      start_node(id, at);
      tl.busy[nd.worker] += durations[id];
    } else {
      auto key = std::make_pair(nd.src, nd.dst);
      links[key].ready.push({at, nd.order_hint, id});
      touched.insert(key);
    }
  };

  for (size_t i = 0; i < n; ++i)
    if (pending[i] == 0) node_ready(static_cast<int>(i), 0.0);
  for (const auto& key : touched) dispatch_link(links[key], key);
  touched.clear();

  size_t done = 0;
  while (!events.empty()) {
    double t = events.top().first;
    // Settle every completion at this instant before links pick their next
    // transfer, so the dispatch tie-break sees all candidates.
    while (!events.empty() && events.top().first == t) {
      int id = events.top().second;
      events.pop();
      ++done;
      for (int s : succ[id]) {
        ready_at[s] = std::max(ready_at[s], t);
        if (--pending[s] == 0) node_ready(s, ready_at[s]);
      }
    }
    for (const auto& key : touched) dispatch_link(links[key], key);
    touched.clear();
  }
  if (done != n)
    throw std::invalid_argument("simulate: graph is cyclic or disconnected");

  for (size_t i = 0; i < n; ++i) tl.makespan = std::max(tl.makespan, tl.end[i]);
  return tl;
}

std::vector<double> durations_for(const ExecGraph& graph,
                                  const SystemConfig& sys) {
  sys.check();
  std::vector<double> d(graph.nodes.size(), 0.0);
  for (const ExecNode& n : graph.nodes) {
    d[n.id] = n.kind == NodeKind::Compute
                  ? compute_time(n.cost.flops, n.cost.mem_bytes, sys)
                  : comm_time(n.cost.net_bytes, sys);
  }
  return d;
}

}  // namespace

Timeline simulate(const ExecGraph& graph, const SystemConfig& sys) {
  return run(graph, durations_for(graph, sys));
}

Timeline simulate_structural(const ExecGraph& graph, double unit_time) {
  std::vector<double> d(graph.nodes.size(), 0.0);
  for (const ExecNode& n : graph.nodes)
    d[n.id] = n.kind == NodeKind::Compute
                  ? graph.weights.of(n.phase) * unit_time
                  : 0.0;
  return run(graph, d);
}

SimMetrics timeline_metrics(const Timeline& tl, int workers) {
  SimMetrics m;
  m.t_sim = tl.makespan;
  if (workers <= 0 || tl.makespan <= 0.0) return m;
  double idle = 0.0;
  m.per_worker_utilization.resize(workers);
  for (int w = 0; w < workers; ++w) {
    idle += tl.makespan - tl.busy[w];
    m.per_worker_utilization[w] = tl.busy[w] / tl.makespan;
  }
  m.beta_idle = idle / (workers * tl.makespan);
  return m;
}

MemoryTimeline memory_timeline(const Timeline& tl, const ExecGraph& graph,
                               const StagePlacement& placement,
                               const ModelConfig& model) {
  MemoryTimeline mem;
  mem.activation_steps.resize(graph.workers);
  mem.persistent.resize(graph.workers);
  mem.peak_activation.assign(graph.workers, 0.0);
  mem.peak_total.assign(graph.workers, 0.0);
  for (int w = 0; w < graph.workers; ++w)
    mem.persistent[w] = persistent_bytes(placement, model, w);

  // Per-worker (time, delta bytes) events from node times.
  std::vector<std::vector<std::pair<double, double>>> deltas(graph.workers);
  std::map<std::tuple<int, int, int>, std::tuple<int, int, int>>
      cell_nodes;  // (mb, branch, stage) -> (fwd, recomp, wgrad) ids
  for (const ExecNode& n : graph.nodes) {
    if (n.kind != NodeKind::Compute || n.phase == Phase::Opt) continue;
    auto key = std::make_tuple(n.mb, n.branch == Branch::Down ? 0 : 1, n.stage);
    auto it = cell_nodes.find(key);
    if (it == cell_nodes.end())
      it = cell_nodes.emplace(key, std::make_tuple(-1, -1, -1)).first;
    if (n.phase == Phase::Fwd) std::get<0>(it->second) = n.id;
    if (n.phase == Phase::Recomp) std::get<1>(it->second) = n.id;
    if (n.phase == Phase::Wgrad) std::get<2>(it->second) = n.id;
  }
  for (const auto& [key, ids] : cell_nodes) {
    auto [mb, branch_i, stage] = key;
    auto [fwd, recomp, wgrad] = ids;
    if (fwd < 0 || wgrad < 0) continue;
    Branch branch = branch_i == 0 ? Branch::Down : Branch::Up;
    int worker = placement.host(branch, stage).worker;
    double full = stage_activation_bytes(
        model, placement.host(branch, stage).blocks, graph.microbatch_size);
    double boundary = activation_bytes(model, graph.microbatch_size);
    if (graph.recompute && recomp >= 0) {
      double residual = std::min(boundary, full);
      deltas[worker].push_back({tl.start[fwd], full});
      deltas[worker].push_back({tl.end[fwd], -(full - residual)});
      deltas[worker].push_back({tl.start[recomp], full - residual});
      deltas[worker].push_back({tl.end[wgrad], -full});
    } else {
      deltas[worker].push_back({tl.start[fwd], full});
      deltas[worker].push_back({tl.end[wgrad], -full});
    }
  }

  for (int w = 0; w < graph.workers; ++w) {
    auto& ev = deltas[w];
    std::sort(ev.begin(), ev.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double level = 0.0;
    auto& steps = mem.activation_steps[w];
    for (size_t i = 0; i < ev.size();) {
      double t = ev[i].first;
      // Releases and allocations at the same instant coalesce into one step.
      while (i < ev.size() && ev[i].first == t) level += ev[i++].second;
      if (level < 0 && level > -1e-6) level = 0.0;  // fp dust
      steps.push_back({t, level});
      mem.peak_activation[w] = std::max(mem.peak_activation[w], level);
    }
    mem.peak_total[w] = mem.peak_activation[w] + mem.persistent[w];
    mem.global_peak_activation =
        std::max(mem.global_peak_activation, mem.peak_activation[w]);
    mem.global_peak_total = std::max(mem.global_peak_total, mem.peak_total[w]);
  }
  return mem;
}

namespace {

std::string compute_name(const ExecNode& n) {
  std::ostringstream os;
  if (n.phase == Phase::Opt) {
    os << "O";
  } else {
    os << phase_letter(n.phase) << " " << branch_letter(n.branch) << n.mb
       << " s" << n.stage;
  }
  return os.str();
}

std::string transfer_name(const ExecNode& n) {
  std::ostringstream os;
  os << (n.direction == TransferDirection::Activation ? "act" : "grad") << " "
     << branch_letter(n.branch) << n.mb << " " << n.src << ">" << n.dst;
  return os.str();
}

}  // namespace

std::string trace_json(const Timeline& tl, const ExecGraph& graph) {
  std::ostringstream os;
  if (graph.nodes.empty()) return "[]\n";

  // Lane ids: workers first, then directed links in sorted order.
  std::set<std::pair<int, int>> link_set;
  for (const ExecNode& n : graph.nodes)
    if (n.kind == NodeKind::Transfer) link_set.insert({n.src, n.dst});
  std::map<std::pair<int, int>, int> lane;
  int next = graph.workers;
  for (const auto& l : link_set) lane[l] = next++;

  os << "[\n";
  bool first = true;
  auto emit = [&](const std::string& json) {
    if (!first) os << ",\n";
    first = false;
    os << "  " << json;
  };
  for (int w = 0; w < graph.workers; ++w) {
    std::ostringstream e;
    e << R"({"ph":"M","name":"thread_name","pid":1,"tid":)" << w
      << R"(,"args":{"name":"worker )" << w << R"("}})";
    emit(e.str());
  }
  for (const auto& [l, id] : lane) {
    std::ostringstream e;
    e << R"({"ph":"M","name":"thread_name","pid":1,"tid":)" << id
      << R"(,"args":{"name":"link )" << l.first << "->" << l.second << R"("}})";
    emit(e.str());
  }
  for (const ExecNode& n : graph.nodes) {
    double dur = tl.end[n.id] - tl.start[n.id];
    if (dur <= 0.0) continue;
    int tid = n.kind == NodeKind::Compute ? n.worker : lane[{n.src, n.dst}];
    std::ostringstream e;
    e << R"({"ph":"X","name":")"
      << (n.kind == NodeKind::Compute ? compute_name(n) : transfer_name(n))
      << R"(","cat":")" << (n.kind == NodeKind::Compute ? "compute" : "transfer")
      << R"(","pid":1,"tid":)" << tid << R"(,"ts":)" << tl.start[n.id] * 1e6
      << R"(,"dur":)" << dur * 1e6 << "}";
    emit(e.str());
  }
  os << "\n]\n";
  return os.str();
}

void export_trace(const Timeline& tl, const ExecGraph& graph,
                  const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write trace file: " + path);
  f << trace_json(tl, graph);
}

std::string timeline_csv(const Timeline& tl, const ExecGraph& graph) {
  std::ostringstream os;
  os << "node_id,worker,kind,phase,mb,branch,start_s,end_s\n";
  os.precision(12);
  for (const ExecNode& n : graph.nodes) {
    bool compute = n.kind == NodeKind::Compute;
    os << n.id << "," << (compute ? n.worker : n.src) << ","
       << (compute ? "compute" : "transfer") << ","
       << (compute ? std::string(1, phase_letter(n.phase))
                   : std::string(n.direction == TransferDirection::Activation
                                     ? "act"
                                     : "grad"))
       << "," << n.mb << "," << branch_letter(n.branch) << "," << tl.start[n.id]
       << "," << tl.end[n.id] << "\n";
  }
  return os.str();
}

}  // namespace pipesim
