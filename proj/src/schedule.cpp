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

#include "pipesim/schedule.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pipesim {

// ---------------------------------------------------------------------------
// Placements
// ---------------------------------------------------------------------------

const StageHost& StagePlacement::host(Branch b, int stage) const {
  const auto& v = b == Branch::Down ? down : up;
  if (stage < 0 || stage >= static_cast<int>(v.size()))
    throw std::out_of_range("stage index out of range for branch");
  return v[stage];
}

int StagePlacement::hosted_blocks(int worker) const {
  int n = 0;
  for (const auto& h : down)
    if (h.worker == worker) n += h.blocks;
  for (const auto& h : up)
    if (h.worker == worker) n += h.blocks;
  return n;
}

void StagePlacement::check() const {
  if (down.empty()) throw std::invalid_argument("placement has no stages");
  auto branch_sum = [](const std::vector<StageHost>& v) {
    int n = 0;
    for (const auto& h : v) n += h.blocks;
    return n;
  };
  if (folded) {
    // The two branches are the two halves of a single model copy.
    if (branch_sum(down) + branch_sum(up) != total_blocks)
      throw std::invalid_argument("folded placement does not cover the model");
  } else {
    if (branch_sum(down) != total_blocks)
      throw std::invalid_argument("Down branch block counts do not sum to N");
    if (!up.empty() && branch_sum(up) != total_blocks)
      throw std::invalid_argument("Up branch block counts do not sum to N");
  }
  if (!up.empty() && up.size() != down.size())
    throw std::invalid_argument("branch stage counts differ");
  if (!up.empty() && !folded) {
    // Meta-symmetry: every worker hosts the same total block count.
    int w0 = hosted_blocks(down[0].worker);
    for (const auto& h : down)
      if (hosted_blocks(h.worker) != w0)
        throw std::invalid_argument("placement violates per-worker meta-symmetry");
  }
  for (const auto& h : down)
    if (h.blocks <= 0) throw std::invalid_argument("non-positive stage block count");
  for (const auto& h : up)
    if (h.blocks <= 0) throw std::invalid_argument("non-positive stage block count");
}

StagePlacement uniform_placement(int stages, int total_blocks) {
  if (stages < 1) throw std::invalid_argument("stages must be >= 1");
  if (total_blocks % stages != 0)
    throw std::invalid_argument("block count not divisible by stage count");
  StagePlacement p;
  p.total_blocks = total_blocks;
  for (int k = 0; k < stages; ++k)
    p.down.push_back({k, total_blocks / stages});
  p.check();
  return p;
}

StagePlacement chimera_placement(int stages, int total_blocks) {
  if (stages < 2 || stages % 2 != 0)
    throw std::invalid_argument("Chimera requires an even stage count >= 2");
  if (total_blocks % stages != 0)
    throw std::invalid_argument("block count not divisible by stage count");
  StagePlacement p;
  p.total_blocks = total_blocks;
  int per = total_blocks / stages;
  for (int k = 0; k < stages; ++k) p.down.push_back({k, per});
  for (int k = 0; k < stages; ++k) p.up.push_back({stages - 1 - k, per});
  p.check();
  return p;
}

StagePlacement chimera_asymmetric_placement(int stages, int total_blocks) {
  if (stages < 2 || stages % 2 != 0)
    throw std::invalid_argument("Chimera requires an even stage count >= 2");
  if ((2 * total_blocks) % (3 * stages) != 0)
    throw std::invalid_argument(
        "asymmetric 1:2 placement requires N divisible by 3S/2");
  int k = 2 * total_blocks / (3 * stages);
  StagePlacement p;
  p.total_blocks = total_blocks;
  for (int i = 0; i < stages; ++i)
    p.down.push_back({i, i < stages / 2 ? k : 2 * k});
  for (int i = 0; i < stages; ++i)
    p.up.push_back({stages - 1 - i, i < stages / 2 ? k : 2 * k});
  p.check();
  return p;
}

StagePlacement hanayo_placement(int stages, int total_blocks, int waves) {
  if (waves != 2)
    throw std::invalid_argument("only the two-wave Hanayo variant is supported");
  if (stages < 1) throw std::invalid_argument("stages must be >= 1");
  if (total_blocks % (2 * stages) != 0)
    throw std::invalid_argument("Hanayo requires N divisible by 2S");
  int per = total_blocks / (2 * stages);
  StagePlacement p;
  p.total_blocks = total_blocks;
  p.folded = true;
  for (int k = 0; k < stages; ++k) p.down.push_back({k, per});
  for (int k = 0; k < stages; ++k) p.up.push_back({stages - 1 - k, per});
  p.check();
  return p;
}

StagePlacement default_placement(ScheduleKind kind, int stages,
                                 int total_blocks) {
  switch (kind) {
    case ScheduleKind::GPipe:
    case ScheduleKind::OneF1B:
      return uniform_placement(stages, total_blocks);
    case ScheduleKind::Chimera:
      return chimera_placement(stages, total_blocks);
    case ScheduleKind::Hanayo:
      return hanayo_placement(stages, total_blocks);
  }
  throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Microbatch chains
// ---------------------------------------------------------------------------

std::vector<ChainLink> microbatch_chain(ScheduleKind kind, int stages,
                                        int microbatches, int mb) {
  if (mb < 0 || mb >= microbatches)
    throw std::out_of_range("microbatch index out of range");
  std::vector<ChainLink> chain;
  switch (kind) {
    case ScheduleKind::GPipe:
    case ScheduleKind::OneF1B:
      for (int k = 0; k < stages; ++k) chain.push_back({Branch::Down, k});
      break;
    case ScheduleKind::Chimera: {
      Branch b = mb < microbatches / 2 ? Branch::Down : Branch::Up;
      for (int k = 0; k < stages; ++k) chain.push_back({b, k});
      break;
    }
    case ScheduleKind::Hanayo:
      for (int k = 0; k < stages; ++k) chain.push_back({Branch::Down, k});
      for (int k = 0; k < stages; ++k) chain.push_back({Branch::Up, k});
      break;
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Greedy slot packing
// ---------------------------------------------------------------------------

namespace {

void check_preconditions(ScheduleKind kind, int stages, int microbatches,
                         const BuildOptions& opts) {
  if (stages < 1) throw std::invalid_argument("stage count must be >= 1");
  if (microbatches < 1) throw std::invalid_argument("microbatch count must be >= 1");
  if (kind == ScheduleKind::Chimera) {
    if (stages % 2 != 0)
      throw std::invalid_argument("Chimera requires an even stage count");
    if (microbatches % 2 != 0)
      throw std::invalid_argument("Chimera requires an even microbatch count");
  }
  if (kind == ScheduleKind::Hanayo) {
    if (opts.waves != 2)
      throw std::invalid_argument("only the two-wave Hanayo variant is supported");
    if (microbatches % opts.waves != 0)
      throw std::invalid_argument(
          "Hanayo requires the microbatch count divisible by the wave count");
  }
}

struct PackState {
  // Placed slots per (mb, chain position); -1 while unplaced.
  std::vector<std::vector<int>> fwd, agrad, wgrad, recomp;
  std::vector<int> cursor;             // next free slot per worker
  std::vector<int> fwd_on_worker;      // 1F1B in-flight gate
  std::vector<int> wgrad_on_worker;
};

}  // namespace

ScheduleTable build_schedule(ScheduleKind kind, int stages, int microbatches,
                             const BuildOptions& opts) {
  check_preconditions(kind, stages, microbatches, opts);

  const int W = stages;
  const int B = microbatches;
  std::vector<std::vector<ChainLink>> chains(B);
  for (int m = 0; m < B; ++m)
    chains[m] = microbatch_chain(kind, stages, B, m);
  const int L = static_cast<int>(chains[0].size());

  ScheduleTable table;
  table.kind = kind;
  table.workers = W;
  table.stages = stages;
  table.microbatches = B;
  table.recompute = opts.recompute;

  auto worker_of = [&](const ChainLink& l) {
    return table.worker_of(l.branch, l.stage);
  };

  PackState st;
  st.fwd.assign(B, std::vector<int>(L, -1));
  st.agrad.assign(B, std::vector<int>(L, -1));
  st.wgrad.assign(B, std::vector<int>(L, -1));
  st.recomp.assign(B, std::vector<int>(L, -1));
  st.cursor.assign(W, 0);
  st.fwd_on_worker.assign(W, 0);
  st.wgrad_on_worker.assign(W, 0);

  const int block_len = opts.recompute ? 3 : 2;
  std::vector<std::tuple<int, int, Cell>> placed;  // (worker, slot, cell)
  int remaining = B * L * 2;  // a forward and a backward block per link

  auto fwd_ready = [&](int m, int pos, int t) {
    if (st.fwd[m][pos] >= 0) return false;
    if (pos > 0) {
      if (st.fwd[m][pos - 1] < 0 || st.fwd[m][pos - 1] >= t) return false;
    }
    int w = worker_of(chains[m][pos]);
    if (kind == ScheduleKind::OneF1B) {
      // Classic 1F1B warmup bound: stage w keeps at most S-w microbatches
      // in flight.
      if (st.fwd_on_worker[w] - st.wgrad_on_worker[w] >= stages - w)
        return false;
    }
    return true;
  };

  auto bwd_ready = [&](int m, int pos, int t) {
    if (st.agrad[m][pos] >= 0) return false;
    if (st.fwd[m][pos] < 0 || st.fwd[m][pos] >= t) return false;
    if (pos + 1 < L) {
      // Backward blocks move in lockstep: the upstream block waits for the
      // downstream Wgrad to finish.
      if (st.wgrad[m][pos + 1] < 0 || st.wgrad[m][pos + 1] >= t) return false;
    }
    return true;
  };

  // Candidate ordering per worker and slot. GPipe fills all forwards before
  // draining (reverse order); the other families run ready backward blocks
  // first. Microbatches compare by injection rank within their branch so the
  // two Chimera pipes interleave symmetrically at the crossing workers;
  // Down goes before Up on equal rank.
  auto rank = [&](int m) {
    return kind == ScheduleKind::Chimera && m >= B / 2 ? m - B / 2 : m;
  };
  auto better = [&](bool a_bwd, int a_m, int a_pos, bool b_bwd, int b_m,
                    int b_pos) {
    if (a_bwd != b_bwd)
      return kind == ScheduleKind::GPipe ? !a_bwd : a_bwd;
    int ra = rank(a_m), rb = rank(b_m);
    if (ra != rb) {
      if (a_bwd && kind == ScheduleKind::GPipe) return ra > rb;
      return ra < rb;
    }
    const ChainLink& la = chains[a_m][a_pos];
    const ChainLink& lb = chains[b_m][b_pos];
    if (la.branch != lb.branch) return la.branch == Branch::Down;
    if (a_m != b_m) return a_m < b_m;
    return a_bwd ? a_pos > b_pos : a_pos < b_pos;
  };

  const long t_limit = 16L * B * L + 64L * W + 64;
  for (long t = 0; remaining > 0; ++t) {
    if (t > t_limit)
      throw std::logic_error("schedule packing did not converge");
    for (int w = 0; w < W; ++w) {
      if (st.cursor[w] > t) continue;
      bool found = false, best_bwd = false;
      int best_m = -1, best_pos = -1;
      for (int m = 0; m < B; ++m) {
        for (int pos = 0; pos < L; ++pos) {
          if (worker_of(chains[m][pos]) != w) continue;
          if (fwd_ready(m, pos, static_cast<int>(t))) {
            if (!found || better(false, m, pos, best_bwd, best_m, best_pos)) {
              found = true;
              best_bwd = false;
              best_m = m;
              best_pos = pos;
            }
          }
          if (bwd_ready(m, pos, static_cast<int>(t))) {
            if (!found || better(true, m, pos, best_bwd, best_m, best_pos)) {
              found = true;
              best_bwd = true;
              best_m = m;
              best_pos = pos;
            }
          }
        }
      }
      if (!found) continue;
      const ChainLink& link = chains[best_m][best_pos];
      auto mb16 = static_cast<std::int16_t>(best_m);
      int slot = static_cast<int>(t);
      if (!best_bwd) {
        st.fwd[best_m][best_pos] = slot;
        placed.emplace_back(w, slot, Cell{mb16, link.branch, Phase::Fwd});
        st.cursor[w] = slot + 1;
        ++st.fwd_on_worker[w];
      } else {
        int s = slot;
        if (opts.recompute) {
          st.recomp[best_m][best_pos] = s;
          placed.emplace_back(w, s, Cell{mb16, link.branch, Phase::Recomp});
          ++s;
        }
        st.agrad[best_m][best_pos] = s;
        placed.emplace_back(w, s, Cell{mb16, link.branch, Phase::Agrad});
        st.wgrad[best_m][best_pos] = s + 1;
        placed.emplace_back(w, s + 1, Cell{mb16, link.branch, Phase::Wgrad});
        st.cursor[w] = slot + block_len;
        ++st.wgrad_on_worker[w];
      }
      --remaining;
    }
  }

  // One optimizer cell per worker, after its last weight-gradient work.
  for (int w = 0; w < W; ++w) {
    placed.emplace_back(w, st.cursor[w], Cell{0, Branch::Down, Phase::Opt});
    ++st.cursor[w];
  }

  int T = *std::max_element(st.cursor.begin(), st.cursor.end());
  table.slots = T;
  table.grid.assign(W, std::vector<std::optional<Cell>>(T));
  for (const auto& [w, s, cell] : placed) table.grid[w][s] = cell;
  return table;
}

ScheduleTable build_schedule(ScheduleKind kind, int stages, int microbatches,
                             const StagePlacement& placement,
                             const BuildOptions& opts) {
  placement.check();
  if (placement.stages() != stages)
    throw std::invalid_argument("placement stage count mismatch");
  if (placement.bidirectional() !=
      (kind == ScheduleKind::Chimera || kind == ScheduleKind::Hanayo))
    throw std::invalid_argument("placement direction mismatch for schedule kind");
  if (placement.folded != (kind == ScheduleKind::Hanayo))
    throw std::invalid_argument("folded placement is only valid for Hanayo");
  for (int k = 0; k < stages; ++k) {
    if (placement.down[k].worker != k)
      throw std::invalid_argument("Down stages must follow the canonical layout");
    if (placement.bidirectional() &&
        placement.up[k].worker != stages - 1 - k)
      throw std::invalid_argument("Up stages must mirror the Down layout");
  }
  return build_schedule(kind, stages, microbatches, opts);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

struct CellIndex {
  // slot of each phase per (mb, chain position); -1 missing, -2 duplicate
  std::vector<std::vector<int>> fwd, agrad, wgrad, recomp;
};

int chain_pos_of(const ScheduleTable& t, int mb, Branch branch, int stage) {
  if (t.kind == ScheduleKind::Hanayo)
    return branch == Branch::Down ? stage : t.stages + stage;
  (void)mb;
  return stage;
}

}  // namespace

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  if (violations.empty()) return "valid\n";
  for (const auto& v : violations) {
    os << v.rule << " at worker " << v.worker << " slot " << v.slot << ": "
       << v.detail << "\n";
  }
  return os.str();
}

ValidationReport validate_table(const ScheduleTable& table) {
  ValidationReport report;
  auto add = [&](int w, int s, const std::string& rule,
                 const std::string& detail) {
    report.violations.push_back({w, s, rule, detail});
  };

  const int B = table.microbatches;
  const int L = static_cast<int>(
      microbatch_chain(table.kind, table.stages, B, 0).size());
  CellIndex idx;
  idx.fwd.assign(B, std::vector<int>(L, -1));
  idx.agrad.assign(B, std::vector<int>(L, -1));
  idx.wgrad.assign(B, std::vector<int>(L, -1));
  idx.recomp.assign(B, std::vector<int>(L, -1));
  std::vector<int> opt_slot(table.workers, -1);
  std::vector<int> last_wgrad(table.workers, -1);

  auto record = [&](std::vector<int>& v, int pos, int slot, int w,
                    const char* what) {
    if (v[pos] >= 0)
      add(w, slot, "completeness", std::string("duplicate ") + what);
    else
      v[pos] = slot;
  };

  for (int w = 0; w < table.workers; ++w) {
    for (int s = 0; s < table.slots; ++s) {
      const auto& c = table.grid[w][s];
      if (!c) continue;
      if (c->phase == Phase::Opt) {
        if (opt_slot[w] >= 0)
          add(w, s, "optimizer", "more than one Opt cell on worker");
        opt_slot[w] = s;
        continue;
      }
      if (!table.bidirectional() && c->branch == Branch::Up) {
        add(w, s, "branch", "Up cell in a unidirectional schedule");
        continue;
      }
      int stage = table.stage_of(w, c->branch);
      if (c->mb < 0 || c->mb >= B) {
        add(w, s, "completeness", "microbatch index out of range");
        continue;
      }
      if (table.kind == ScheduleKind::Chimera) {
        Branch expect = c->mb < B / 2 ? Branch::Down : Branch::Up;
        if (c->branch != expect) {
          add(w, s, "branch", "microbatch scheduled on the wrong branch");
          continue;
        }
      }
      int pos = chain_pos_of(table, c->mb, c->branch, stage);
      switch (c->phase) {
        case Phase::Fwd: record(idx.fwd[c->mb], pos, s, w, "Fwd"); break;
        case Phase::Agrad: record(idx.agrad[c->mb], pos, s, w, "Agrad"); break;
        case Phase::Wgrad:
          record(idx.wgrad[c->mb], pos, s, w, "Wgrad");
          last_wgrad[w] = std::max(last_wgrad[w], s);
          break;
        case Phase::Recomp: record(idx.recomp[c->mb], pos, s, w, "Recomp"); break;
        case Phase::Opt: break;
      }
    }
  }

  auto describe = [&](int m, int pos) {
    std::ostringstream os;
    auto chain = microbatch_chain(table.kind, table.stages, B, m);
    os << "mb " << m << " " << branch_letter(chain[pos].branch) << " stage "
       << chain[pos].stage;
    return os.str();
  };

  for (int m = 0; m < B; ++m) {
    auto chain = microbatch_chain(table.kind, table.stages, B, m);
    for (int pos = 0; pos < L; ++pos) {
      int w = table.worker_of(chain[pos].branch, chain[pos].stage);
      int f = idx.fwd[m][pos], a = idx.agrad[m][pos], g = idx.wgrad[m][pos];
      int r = idx.recomp[m][pos];
      if (f < 0) add(w, -1, "completeness", "missing Fwd for " + describe(m, pos));
      if (a < 0) add(w, -1, "completeness", "missing Agrad for " + describe(m, pos));
      if (g < 0) add(w, -1, "completeness", "missing Wgrad for " + describe(m, pos));
      if (f >= 0 && a >= 0 && a <= f)
        add(w, a, "causal-order", "Agrad not after Fwd for " + describe(m, pos));
      if (a >= 0 && g >= 0 && g <= a)
        add(w, g, "causal-order", "Wgrad not after Agrad for " + describe(m, pos));
      if (r >= 0 && f >= 0 && r <= f)
        add(w, r, "causal-order", "Recomp not after Fwd for " + describe(m, pos));
      if (r >= 0 && a >= 0 && a <= r)
        add(w, a, "causal-order", "Agrad not after Recomp for " + describe(m, pos));
      if (pos > 0) {
        int pf = idx.fwd[m][pos - 1];
        if (f >= 0 && pf >= 0 && f <= pf)
          add(w, f, "cross-stage",
              "Fwd not strictly after upstream Fwd for " + describe(m, pos));
        int na = idx.agrad[m][pos];
        int da = idx.agrad[m][pos - 1];
        // Backward flows toward lower positions: upstream Agrad must be later.
        if (na >= 0 && da >= 0 && da <= na)
          add(w, da, "cross-stage",
              "Agrad not strictly after downstream Agrad for " +
                  describe(m, pos - 1));
      }
    }
  }

  for (int w = 0; w < table.workers; ++w) {
    if (opt_slot[w] < 0)
      add(w, -1, "optimizer", "missing Opt cell on worker");
    else if (opt_slot[w] <= last_wgrad[w])
      add(w, opt_slot[w], "optimizer", "Opt before the last Wgrad on worker");
  }

  return report;
}

// ---------------------------------------------------------------------------
// Structural metrics
// ---------------------------------------------------------------------------

StructuralMetrics structural_metrics(const ScheduleTable& table) {
  auto report = validate_table(table);
  if (!report.valid())
    throw std::invalid_argument(
        "structural_metrics: table failed validation; run validate_table "
        "for details");

  StructuralMetrics m;
  const int W = table.workers, T = table.slots;
  std::vector<double> width(T, 0.0);
  std::vector<bool> any(T, false);
  for (int t = 0; t < T; ++t) {
    for (int w = 0; w < W; ++w) {
      const auto& c = table.grid[w][t];
      if (!c) continue;
      any[t] = true;
      width[t] = std::max(width[t], table.weights.of(c->phase));
    }
  }
  int first = -1, last = -1;
  for (int t = 0; t < T; ++t)
    if (width[t] > 0) {
      if (first < 0) first = t;
      last = t;
    }
  if (first < 0) return m;  // degenerate: nothing with positive weight
  m.first_slot = first;
  m.last_slot = last;

  double len = 0.0;
  for (int t = first; t <= last; ++t) {
    if (!any[t]) width[t] = 1.0;  // a fully idle column is a unit stall
    len += width[t];
  }
  m.schedule_length = len;

  m.per_worker_idle.assign(W, 0.0);
  for (int w = 0; w < W; ++w) {
    double busy = 0.0;
    for (int t = first; t <= last; ++t) {
      const auto& c = table.grid[w][t];
      if (c) busy += table.weights.of(c->phase);
    }
    m.per_worker_idle[w] = len - busy;
    m.total_idle += m.per_worker_idle[w];
  }
  m.bubble_ratio = m.total_idle / (static_cast<double>(W) * len);
  m.utilization = 1.0 - m.bubble_ratio;
  return m;
}

// ---------------------------------------------------------------------------
// Activation lifetimes
// ---------------------------------------------------------------------------

ActivationProfile activation_lifetimes(const ScheduleTable& table,
                                       const StagePlacement& placement,
                                       const ModelConfig& model) {
  auto report = validate_table(table);
  if (!report.valid())
    throw std::invalid_argument("activation_lifetimes: table failed validation");
  placement.check();
  if (placement.stages() != table.stages)
    throw std::invalid_argument("placement stage count mismatch");

  const int B = table.microbatches;
  int mbsize = model.microbatch_size(B);

  // Locate phase slots per (mb, branch, stage).
  struct Slots {
    int fwd = -1, wgrad = -1, recomp = -1;
  };
  std::map<std::tuple<int, int, int>, Slots> cells;  // (mb, branch, stage)
  for (int w = 0; w < table.workers; ++w) {
    for (int t = 0; t < table.slots; ++t) {
      const auto& c = table.grid[w][t];
      if (!c || c->phase == Phase::Opt) continue;
      int stage = table.stage_of(w, c->branch);
      auto key = std::make_tuple(static_cast<int>(c->mb),
                                 c->branch == Branch::Down ? 0 : 1, stage);
      auto& s = cells[key];
      if (c->phase == Phase::Fwd) s.fwd = t;
      if (c->phase == Phase::Wgrad) s.wgrad = t;
      if (c->phase == Phase::Recomp) s.recomp = t;
    }
  }

  ActivationProfile prof;
  for (const auto& [key, s] : cells) {
    auto [mb, branch_i, stage] = key;
    Branch branch = branch_i == 0 ? Branch::Down : Branch::Up;
    int worker = table.worker_of(branch, stage);
    double bytes = stage_activation_bytes(
        model, placement.host(branch, stage).blocks, mbsize);
    if (table.recompute && s.recomp >= 0) {
      prof.intervals.push_back({mb, branch, stage, worker, s.fwd, s.fwd, bytes});
      prof.intervals.push_back(
          {mb, branch, stage, worker, s.recomp, s.wgrad, bytes});
    } else {
      prof.intervals.push_back({mb, branch, stage, worker, s.fwd, s.wgrad, bytes});
    }
  }

  // Peak overlap per worker via difference arrays over slots.
  prof.peak_live_count.assign(table.workers, 0);
  prof.peak_activation_bytes.assign(table.workers, 0.0);
  std::vector<std::vector<double>> delta_bytes(
      table.workers, std::vector<double>(table.slots + 1, 0.0));
  std::vector<std::vector<int>> delta_count(
      table.workers, std::vector<int>(table.slots + 1, 0));
  for (const auto& iv : prof.intervals) {
    delta_bytes[iv.worker][iv.from_slot] += iv.bytes;
    delta_bytes[iv.worker][iv.to_slot + 1] -= iv.bytes;
    delta_count[iv.worker][iv.from_slot] += 1;
    delta_count[iv.worker][iv.to_slot + 1] -= 1;
  }
  for (int w = 0; w < table.workers; ++w) {
    double run_b = 0.0;
    int run_c = 0;
    for (int t = 0; t <= table.slots; ++t) {
      run_b += delta_bytes[w][t];
      run_c += delta_count[w][t];
      prof.peak_activation_bytes[w] = std::max(prof.peak_activation_bytes[w], run_b);
      prof.peak_live_count[w] = std::max(prof.peak_live_count[w], run_c);
    }
  }
  return prof;
}

double persistent_bytes(const StagePlacement& placement,
                        const ModelConfig& model, int worker,
                        double optimizer_multiplier) {
  int blocks = placement.hosted_blocks(worker);
  if (blocks == 0)
    throw std::invalid_argument("worker hosts no stage in this placement");
  return blocks * block_weight_bytes(model) * (2.0 + optimizer_multiplier);
}

double persistent_bytes(const StagePlacement& placement,
                        const ModelConfig& model, int worker) {
  return persistent_bytes(placement, model, worker, model.optimizer_multiplier);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string cell_text(const Cell& c, bool with_branch) {
  std::string s;
  if (with_branch) s += branch_letter(c.branch);
  s += phase_letter(c.phase);
  if (c.phase != Phase::Opt || with_branch) s += std::to_string(c.mb);
  return s;
}

}  // namespace

std::string render_table(const ScheduleTable& table, TableFormat format) {
  std::ostringstream os;
  if (format == TableFormat::Csv) {
    os << "worker";
    for (int t = 0; t < table.slots; ++t) os << ",slot" << t;
    os << "\n";
    for (int w = 0; w < table.workers; ++w) {
      os << w;
      for (int t = 0; t < table.slots; ++t) {
        os << ",";
        if (table.grid[w][t]) os << cell_text(*table.grid[w][t], true);
      }
      os << "\n";
    }
    return os.str();
  }

  bool branch_marks = table.bidirectional();
  size_t width = 1;
  for (int w = 0; w < table.workers; ++w)
    for (int t = 0; t < table.slots; ++t)
      if (table.grid[w][t])
        width = std::max(width, cell_text(*table.grid[w][t], branch_marks).size());
  for (int w = 0; w < table.workers; ++w) {
    std::string line;
    for (int t = 0; t < table.slots; ++t) {
      std::string cell =
          table.grid[w][t] ? cell_text(*table.grid[w][t], branch_marks) : ".";
      cell.resize(width, ' ');
      if (t) line += ' ';
      line += cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << "\n";
  }
  return os.str();
}

namespace {

// Splits on commas, keeping trailing empty fields (idle slots at row ends).
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

ScheduleTable parse_table_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line.rfind("worker", 0) != 0)
    throw std::invalid_argument("bad table csv header");

  std::vector<std::vector<std::optional<Cell>>> grid;
  int slots = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    std::vector<std::optional<Cell>> row;
    for (size_t i = 1; i < fields.size(); ++i) {  // fields[0]: worker index
      const std::string& field = fields[i];
      if (field.empty()) {
        row.emplace_back();
        continue;
      }
      if (field.size() < 3)
        throw std::invalid_argument("bad cell syntax: " + field);
      Cell c;
      c.branch = branch_from_letter(field[0]);
      c.phase = phase_from_letter(field[1]);
      c.mb = static_cast<std::int16_t>(std::stoi(field.substr(2)));
      row.push_back(c);
    }
    if (slots < 0) slots = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != slots)
      throw std::invalid_argument("ragged table csv");
    grid.push_back(std::move(row));
  }
  if (grid.empty()) throw std::invalid_argument("empty table csv");

  ScheduleTable t;
  t.workers = static_cast<int>(grid.size());
  t.slots = slots;
  t.stages = t.workers;
  t.grid = std::move(grid);
  int max_mb = -1;
  bool has_up = false, has_recomp = false;
  std::vector<std::pair<bool, bool>> mb_branches;  // (down, up) per mb
  for (const auto& row : t.grid)
    for (const auto& c : row) {
      if (!c || c->phase == Phase::Opt) continue;
      max_mb = std::max(max_mb, static_cast<int>(c->mb));
      if (c->branch == Branch::Up) has_up = true;
      if (c->phase == Phase::Recomp) has_recomp = true;
    }
  t.microbatches = max_mb + 1;
  t.recompute = has_recomp;
  if (!has_up) {
    t.kind = ScheduleKind::GPipe;
  } else {
    // A microbatch appearing on both branches marks a folded wave schedule.
    mb_branches.assign(t.microbatches, {false, false});
    for (const auto& row : t.grid)
      for (const auto& c : row) {
        if (!c || c->phase == Phase::Opt) continue;
        auto& e = mb_branches[c->mb];
        (c->branch == Branch::Down ? e.first : e.second) = true;
      }
    bool folded = false;
    for (auto& e : mb_branches)
      if (e.first && e.second) folded = true;
    t.kind = folded ? ScheduleKind::Hanayo : ScheduleKind::Chimera;
  }
  return t;
}

}  // namespace pipesim
