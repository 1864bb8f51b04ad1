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

#include "pipesim/execgraph.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace pipesim {

std::vector<int> ExecGraph::topological_order() const {
  std::vector<int> indeg(nodes.size(), 0);
  std::vector<std::vector<int>> succ(nodes.size());
  for (auto [a, b] : edges) {
    succ[a].push_back(b);
    ++indeg[b];
  }
  std::priority_queue<int, std::vector<int>, std::greater<int>> q;
  for (size_t i = 0; i < nodes.size(); ++i)
    if (indeg[i] == 0) q.push(static_cast<int>(i));
  std::vector<int> order;
  order.reserve(nodes.size());
  while (!q.empty()) {
    int n = q.top();
    q.pop();
    order.push_back(n);
    for (int s : succ[n])
      if (--indeg[s] == 0) q.push(s);
  }
  if (order.size() != nodes.size())
    throw std::runtime_error("execution graph contains a cycle");
  return order;
}

ExecGraph build_exec_graph(const ScheduleTable& table,
                           const StagePlacement& placement,
                           const ModelConfig& model) {
  auto report = validate_table(table);
  if (!report.valid())
    throw std::invalid_argument("build_exec_graph: table failed validation");
  placement.check();
  if (placement.stages() != table.stages)
    throw std::invalid_argument("placement stage count mismatch");
  if (placement.bidirectional() != table.bidirectional() ||
      placement.folded != (table.kind == ScheduleKind::Hanayo))
    throw std::invalid_argument("placement shape mismatch for schedule kind");
  for (int k = 0; k < table.stages; ++k) {
    if (placement.down[k].worker != table.worker_of(Branch::Down, k))
      throw std::invalid_argument("placement hosts a stage on the wrong worker");
    if (placement.bidirectional() &&
        placement.up[k].worker != table.worker_of(Branch::Up, k))
      throw std::invalid_argument("placement hosts a stage on the wrong worker");
  }

  ExecGraph g;
  g.schedule = table.kind;
  g.workers = table.workers;
  g.stages = table.stages;
  g.microbatches = table.microbatches;
  g.microbatch_size = model.microbatch_size(table.microbatches);
  g.recompute = table.recompute;
  g.weights = table.weights;
  g.placement = placement;

  // Compute nodes in row-wise order; local chains give precedence edges.
  std::set<std::pair<int, int>> edge_set;
  std::map<std::tuple<int, int, int, int>, int> by_cell;  // (mb,br,stage,phase)
  std::vector<std::vector<int>> wgrads_of_worker(table.workers);
  g.local_order.assign(table.workers, {});
  for (int w = 0; w < table.workers; ++w) {
    int prev = -1;
    for (int t = 0; t < table.slots; ++t) {
      const auto& c = table.grid[w][t];
      if (!c) continue;
      ExecNode n;
      n.id = static_cast<int>(g.nodes.size());
      n.kind = NodeKind::Compute;
      n.worker = w;
      n.mb = c->mb;
      n.branch = c->branch;
      n.stage = c->phase == Phase::Opt ? -1 : table.stage_of(w, c->branch);
      n.phase = c->phase;
      n.slot = t;
      n.local_index = static_cast<int>(g.local_order[w].size());
      int blocks = c->phase == Phase::Opt ? placement.hosted_blocks(w)
                                          : placement.host(c->branch, n.stage).blocks;
      n.cost = stage_costs(model, blocks, g.microbatch_size, c->phase);
      g.local_order[w].push_back(n.id);
      if (c->phase != Phase::Opt)
        by_cell[{c->mb, c->branch == Branch::Down ? 0 : 1, n.stage,
                 static_cast<int>(c->phase)}] = n.id;
      if (c->phase == Phase::Wgrad) wgrads_of_worker[w].push_back(n.id);
      if (prev >= 0) edge_set.insert({prev, n.id});
      prev = n.id;
      g.nodes.push_back(n);
    }
  }

  auto find_node = [&](int mb, Branch br, int stage, Phase ph) {
    auto it = by_cell.find({mb, br == Branch::Down ? 0 : 1, stage,
                            static_cast<int>(ph)});
    if (it == by_cell.end())
      throw std::logic_error("cell missing from a validated table");
    return it->second;
  };

  double payload = activation_bytes(model, g.microbatch_size);

  auto add_transfer = [&](int producer, int consumer, int mb, Branch br,
                          TransferDirection dir) {
    ExecNode t;
    t.id = static_cast<int>(g.nodes.size());
    t.kind = NodeKind::Transfer;
    t.mb = mb;
    t.branch = br;
    t.src = g.nodes[producer].worker;
    t.dst = g.nodes[consumer].worker;
    t.direction = dir;
    t.order_hint = g.nodes[consumer].local_index;
    t.cost.net_bytes = payload;
    g.nodes.push_back(t);
    edge_set.insert({producer, t.id});
    edge_set.insert({t.id, consumer});
  };

  for (int m = 0; m < table.microbatches; ++m) {
    auto chain = microbatch_chain(table.kind, table.stages, table.microbatches, m);
    for (size_t i = 0; i + 1 < chain.size(); ++i) {
      const ChainLink& a = chain[i];
      const ChainLink& b = chain[i + 1];
      int fwd_a = find_node(m, a.branch, a.stage, Phase::Fwd);
      int fwd_b = find_node(m, b.branch, b.stage, Phase::Fwd);
      // The gradient leaves a stage when its backward block completes, and
      // feeds the upstream recompute (when present) or Agrad.
      int grad_src = find_node(m, b.branch, b.stage, Phase::Wgrad);
      int grad_dst = table.recompute
                         ? find_node(m, a.branch, a.stage, Phase::Recomp)
                         : find_node(m, a.branch, a.stage, Phase::Agrad);
      if (g.nodes[fwd_a].worker == g.nodes[fwd_b].worker) {
        edge_set.insert({fwd_a, fwd_b});
        edge_set.insert({grad_src, grad_dst});
      } else {
        add_transfer(fwd_a, fwd_b, m, b.branch, TransferDirection::Activation);
        add_transfer(grad_src, grad_dst, m, a.branch,
                     TransferDirection::Gradient);
      }
    }
  }

  // Optimizer updates wait for every Wgrad on their worker.
  for (int w = 0; w < table.workers; ++w) {
    int opt = -1;
    for (int id : g.local_order[w])
      if (g.nodes[id].phase == Phase::Opt && g.nodes[id].kind == NodeKind::Compute)
        opt = id;
    if (opt < 0) continue;
    for (int wg : wgrads_of_worker[w]) edge_set.insert({wg, opt});
  }

  g.edges.assign(edge_set.begin(), edge_set.end());
  return g;
}

std::string GraphReport::to_string() const {
  if (violations.empty()) return "valid\n";
  std::ostringstream os;
  for (const auto& v : violations) os << v << "\n";
  return os.str();
}

GraphReport check_graph(const ExecGraph& graph) {
  GraphReport report;
  auto add = [&](const std::string& s) { report.violations.push_back(s); };

  // Acyclicity.
  try {
    graph.topological_order();
  } catch (const std::exception&) {
    add("cycle: no topological order exists");
  }

  std::set<std::pair<int, int>> edge_set(graph.edges.begin(), graph.edges.end());

  // Local order: strictly increasing slots, chain edges present.
  for (int w = 0; w < graph.workers; ++w) {
    const auto& order = graph.local_order[w];
    for (size_t i = 0; i < order.size(); ++i) {
      const ExecNode& n = graph.nodes[order[i]];
      if (n.kind != NodeKind::Compute || n.worker != w)
        add("local-order: node " + std::to_string(order[i]) +
            " is not a compute node of worker " + std::to_string(w));
      if (i > 0) {
        const ExecNode& p = graph.nodes[order[i - 1]];
        if (n.slot <= p.slot)
          add("local-order: slots not increasing at node " +
              std::to_string(order[i]));
        if (!edge_set.count({p.id, n.id}))
          add("local-order: missing chain edge " + std::to_string(p.id) +
              " -> " + std::to_string(n.id));
      }
    }
  }

  // Every transfer wired between a producer and a consumer.
  std::vector<int> indeg(graph.nodes.size(), 0), outdeg(graph.nodes.size(), 0);
  for (auto [a, b] : graph.edges) {
    ++outdeg[a];
    ++indeg[b];
  }
  // Transfers indexed by (mb, direction, src, dst, branch).
  std::map<std::tuple<int, int, int, int, int>, int> transfers;
  for (const ExecNode& n : graph.nodes) {
    if (n.kind != NodeKind::Transfer) continue;
    if (indeg[n.id] == 0 || outdeg[n.id] == 0)
      add("transfer " + std::to_string(n.id) + " is not wired between computes");
    transfers[{n.mb, n.direction == TransferDirection::Activation ? 0 : 1,
               n.src, n.dst, n.branch == Branch::Down ? 0 : 1}]++;
  }

  // One transfer per cross-host adjacent-stage dependency.
  for (int m = 0; m < graph.microbatches; ++m) {
    auto chain = microbatch_chain(graph.schedule, graph.stages,
                                  graph.microbatches, m);
    for (size_t i = 0; i + 1 < chain.size(); ++i) {
      int host_a = graph.placement.host(chain[i].branch, chain[i].stage).worker;
      int host_b =
          graph.placement.host(chain[i + 1].branch, chain[i + 1].stage).worker;
      if (host_a == host_b) continue;
      auto count = [&](TransferDirection dir, int src, int dst, Branch br) {
        auto it = transfers.find({m, dir == TransferDirection::Activation ? 0 : 1,
                                  src, dst, br == Branch::Down ? 0 : 1});
        return it == transfers.end() ? 0 : it->second;
      };
      int act = count(TransferDirection::Activation, host_a, host_b,
                      chain[i + 1].branch);
      int grad = count(TransferDirection::Gradient, host_b, host_a,
                       chain[i].branch);
      if (act != 1)
        add("dependency mb " + std::to_string(m) + " stage pair (" +
            std::to_string(chain[i].stage) + "," +
            std::to_string(chain[i + 1].stage) + "): expected 1 activation "
            "transfer, found " + std::to_string(act));
      if (grad != 1)
        add("dependency mb " + std::to_string(m) + " stage pair (" +
            std::to_string(chain[i].stage) + "," +
            std::to_string(chain[i + 1].stage) + "): expected 1 gradient "
            "transfer, found " + std::to_string(grad));
    }
  }
  return report;
}

std::string dump_graph(const ExecGraph& graph) {
  std::ostringstream os;
  for (const ExecNode& n : graph.nodes) {
    if (n.kind == NodeKind::Compute) {
      os << "NODE " << n.id << " COMPUTE worker=" << n.worker << " mb=" << n.mb
         << " branch=" << branch_letter(n.branch) << " stage=" << n.stage
         << " phase=" << phase_letter(n.phase) << " slot=" << n.slot << "\n";
    } else {
      os << "NODE " << n.id << " TRANSFER src=" << n.src << " dst=" << n.dst
         << " mb=" << n.mb << " branch=" << branch_letter(n.branch) << " dir="
         << (n.direction == TransferDirection::Activation ? "act" : "grad")
         << " bytes=" << n.cost.net_bytes << "\n";
    }
  }
  for (auto [a, b] : graph.edges) os << "EDGE " << a << " " << b << "\n";
  return os.str();
}

}  // namespace pipesim
