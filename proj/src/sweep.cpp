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

#include "pipesim/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pipesim/analytic.hpp"
#include "pipesim/execgraph.hpp"
#include "pipesim/simulator.hpp"

namespace pipesim {

// ---------------------------------------------------------------------------
// Regimes
// ---------------------------------------------------------------------------

namespace {

SystemConfig scale_net(SystemConfig s, double f) {
  s.net_bandwidth *= f;
  s.net_latency /= f;
  return s;
}

SystemConfig scale_compute(SystemConfig s, double f) {
  s.peak_throughput *= f;
  s.mem_bandwidth *= f;
  s.compute_latency /= f;
  s.mem_latency /= f;
  return s;
}

}  // namespace

const SystemConfig& RegimeGrid::by_name(const std::string& name) const {
  for (const auto& r : regimes)
    if (r.name == name) return r;
  throw std::invalid_argument("unknown regime: " + name);
}

RegimeGrid build_regimes(const SystemConfig& baseline, double factor) {
  if (factor <= 1.0) throw std::invalid_argument("regime factor must be > 1");
  baseline.check();
  RegimeGrid g;
  g.baseline = baseline;
  g.factor = factor;
  const char* nw_names[3] = {"fast_nw", "mid_nw", "slow_nw"};
  const char* cp_names[3] = {"fast_cp", "mid_cp", "slow_cp"};
  const double scales[3] = {factor, 1.0, 1.0 / factor};
  for (int nw = 0; nw < 3; ++nw) {
    for (int cp = 0; cp < 3; ++cp) {
      SystemConfig s = scale_compute(scale_net(baseline, scales[nw]), scales[cp]);
      s.name = (nw == 1 && cp == 1)
                   ? "baseline"
                   : std::string(nw_names[nw]) + "_" + cp_names[cp];
      g.regimes.push_back(s);
    }
  }
  // Table order: all fast_nw rows, then mid_nw, then slow_nw.
  return g;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

void SweepSpec::check() const {
  model.check();
  baseline.check();
  if (hanayo_stages < 1) throw std::invalid_argument("bad Hanayo stage count");
  for (int b : microbatch_counts)
    if (model.minibatch % b != 0)
      throw std::invalid_argument(
          "minibatch must be divisible by every swept microbatch count");
  for (ScheduleKind k : schedules)
    if (k == ScheduleKind::Hanayo)
      throw std::invalid_argument(
          "Hanayo runs only in the restricted S = B dataset, not in general "
          "sweeps");
}

namespace {

struct CellResult {
  double t_sim = 0.0;
  double beta_idle = 0.0;
  double peak_activation = 0.0;  // max over workers, bytes
  std::string error;
};

struct CellRequest {
  ScheduleKind kind = ScheduleKind::GPipe;
  int stages = 0;
  int microbatches = 0;
  int blocks = 0;           // model copy size for this cell
  bool asymmetric = false;  // Chimera 1:2 placement
  SystemConfig system;
};

CellResult eval_cell(const CellRequest& rq, const ModelConfig& base_model) {
  CellResult out;
  try {
    ModelConfig model = base_model;
    model.blocks = rq.blocks;
    StagePlacement placement =
        rq.asymmetric ? chimera_asymmetric_placement(rq.stages, rq.blocks)
                      : default_placement(rq.kind, rq.stages, rq.blocks);
    ScheduleTable table =
        build_schedule(rq.kind, rq.stages, rq.microbatches, placement);
    ExecGraph graph = build_exec_graph(table, placement, model);
    Timeline tl = simulate(graph, rq.system);
    SimMetrics m = timeline_metrics(tl, graph.workers);
    MemoryTimeline mem = memory_timeline(tl, graph, placement, model);
    out.t_sim = m.t_sim;
    out.beta_idle = m.beta_idle;
    out.peak_activation = mem.global_peak_activation;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

std::vector<CellResult> eval_cells(const std::vector<CellRequest>& cells,
                                   const ModelConfig& model, SweepMode mode) {
  std::vector<CellResult> results(cells.size());
  if (mode == SweepMode::Parallel) {
#ifdef PIPESIM_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long i = 0; i < static_cast<long>(cells.size()); ++i)
      results[i] = eval_cell(cells[i], model);
  } else {
    for (size_t i = 0; i < cells.size(); ++i)
      results[i] = eval_cell(cells[i], model);
  }
  return results;
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

constexpr double kTiB = 1024.0 * 1024.0 * 1024.0 * 1024.0;

}  // namespace

std::map<std::string, std::string> run_sweep(const SweepSpec& spec,
                                             SweepMode mode) {
  spec.check();
  std::map<std::string, std::string> files;
  std::ostringstream errors;
  RegimeGrid grid = build_regimes(spec.baseline);
  auto wants = [&](const std::string& d) {
    return std::find(spec.datasets.begin(), spec.datasets.end(), d) !=
           spec.datasets.end();
  };
  auto note_error = [&](const std::string& where, const CellResult& r) {
    if (!r.error.empty()) errors << where << ": " << r.error << "\n";
  };

  // Level-1 vs level-2 comparison; structural, no simulation involved.
  if (wants("formula")) {
    std::ostringstream os;
    os << "B,gpipe_formula,gpipe_table,onef1b_formula,onef1b_table,"
          "chimera_formula,chimera_table\n";
    const int S = 8;
    for (int b : spec.microbatch_counts) {
      os << b;
      for (ScheduleKind k : {ScheduleKind::GPipe, ScheduleKind::OneF1B,
                             ScheduleKind::Chimera}) {
        double formula = formula_bubble_ratio(k, S, b).bubble_ratio;
        double table = 0.0;
        try {
          table = structural_metrics(build_schedule(k, S, b)).bubble_ratio;
        } catch (const std::exception& e) {
          errors << "formula_comparison " << kind_name(k) << " B=" << b << ": "
                 << e.what() << "\n";
        }
        os << "," << fmt(100.0 * formula) << "," << fmt(100.0 * table);
      }
      os << "\n";
    }
    files["formula_comparison.csv"] = os.str();
  }

  // Simulated runtime and idle ratio across the network-bound, balanced and
  // compute-bound columns of the grid.
  if (wants("timeline")) {
    const int S = 8;
    const std::vector<std::string> regimes = {"slow_nw_fast_cp", "baseline",
                                              "fast_nw_slow_cp"};
    const std::vector<ScheduleKind> kinds = {
        ScheduleKind::GPipe, ScheduleKind::OneF1B, ScheduleKind::Chimera};
    std::vector<CellRequest> cells;
    for (const auto& rn : regimes)
      for (ScheduleKind k : kinds)
        for (int b : spec.microbatch_counts)
          cells.push_back({k, S, b, spec.model.blocks, false, grid.by_name(rn)});
    auto results = eval_cells(cells, spec.model, mode);

    auto cell = [&](size_t r, size_t k, size_t b) -> const CellResult& {
      return results[(r * kinds.size() + k) * spec.microbatch_counts.size() + b];
    };
    for (int which = 0; which < 2; ++which) {
      std::ostringstream os;
      os << "B,slow_gpipe,slow_onef1b,slow_chimera,mid_gpipe,mid_onef1b,"
            "mid_chimera,fast_gpipe,fast_onef1b,fast_chimera\n";
      for (size_t b = 0; b < spec.microbatch_counts.size(); ++b) {
        os << spec.microbatch_counts[b];
        for (size_t r = 0; r < regimes.size(); ++r)
          for (size_t k = 0; k < kinds.size(); ++k) {
            const CellResult& c = cell(r, k, b);
            note_error("timeline " + regimes[r] + " " + kind_name(kinds[k]) +
                           " B=" + std::to_string(spec.microbatch_counts[b]),
                       c);
            os << ","
               << (which == 0 ? fmt(100.0 * c.beta_idle) : fmt(c.t_sim));
          }
        os << "\n";
      }
      files[which == 0 ? "timeline_comparison_bubble.csv"
                       : "timeline_comparison_runtime.csv"] = os.str();
    }
  }

  // Peak per-device activation memory, baseline system, S in {4, 8}.
  if (wants("memory")) {
    const std::vector<int> stage_counts = {4, 8};
    const std::vector<ScheduleKind> kinds = {
        ScheduleKind::GPipe, ScheduleKind::OneF1B, ScheduleKind::Chimera};
    std::vector<CellRequest> cells;
    for (int s : stage_counts)
      for (ScheduleKind k : kinds)
        for (int b : spec.microbatch_counts)
          cells.push_back({k, s, b, spec.model.blocks, false, grid.baseline});
    auto results = eval_cells(cells, spec.model, mode);
    auto cell = [&](size_t s, size_t k, size_t b) -> const CellResult& {
      return results[(s * kinds.size() + k) * spec.microbatch_counts.size() + b];
    };
    std::ostringstream os;
    os << "B,gpipe_s4,onef1b_s4,chimera_s4,gpipe_s8,onef1b_s8,chimera_s8\n";
    for (size_t b = 0; b < spec.microbatch_counts.size(); ++b) {
      os << spec.microbatch_counts[b];
      for (size_t s = 0; s < stage_counts.size(); ++s)
        for (size_t k = 0; k < kinds.size(); ++k) {
          const CellResult& c = cell(s, k, b);
          note_error("memory S=" + std::to_string(stage_counts[s]) + " " +
                         kind_name(kinds[k]) +
                         " B=" + std::to_string(spec.microbatch_counts[b]),
                     c);
          os << "," << fmt(c.peak_activation / kTiB);
        }
      os << "\n";
    }
    files["memory.csv"] = os.str();
  }

  // Asymmetric vs symmetric Chimera, N fixed to the divisible block count.
  if (wants("unbalanced")) {
    const std::vector<std::string> regimes = {"fast_nw_slow_cp", "baseline",
                                              "slow_nw_fast_cp"};
    const std::vector<int> stage_counts = {4, 8};
    std::vector<CellRequest> cells;
    for (const auto& rn : regimes)
      for (int s : stage_counts)
        for (int b : spec.microbatch_counts)
          for (bool asym : {false, true})
            cells.push_back({ScheduleKind::Chimera, s, b, spec.asym_blocks,
                             asym, grid.by_name(rn)});
    auto results = eval_cells(cells, spec.model, mode);
    auto cell = [&](size_t r, size_t s, size_t b, int asym) -> const CellResult& {
      return results[((r * stage_counts.size() + s) *
                          spec.microbatch_counts.size() +
                      b) * 2 + asym];
    };
    std::ostringstream os;
    os << "B,fast_s4_pct,fast_s8_pct,mid_s4_pct,mid_s8_pct,slow_s4_pct,"
          "slow_s8_pct\n";
    for (size_t b = 0; b < spec.microbatch_counts.size(); ++b) {
      os << spec.microbatch_counts[b];
      for (size_t r = 0; r < regimes.size(); ++r)
        for (size_t s = 0; s < stage_counts.size(); ++s) {
          const CellResult& sym = cell(r, s, b, 0);
          const CellResult& asym = cell(r, s, b, 1);
          note_error("unbalanced sym " + regimes[r], sym);
          note_error("unbalanced asym " + regimes[r], asym);
          double pct = 100.0 * (asym.t_sim - sym.t_sim) / sym.t_sim;
          os << "," << fmt(pct);
        }
      os << "\n";
    }
    files["unbalanced_runtime.csv"] = os.str();
  }

  // Two-wave Hanayo against Chimera in the restricted S = B regime.
  if (wants("hanayo")) {
    const int S = spec.hanayo_stages;
    const int B = S;
    std::vector<CellRequest> cells;
    for (const auto& r : grid.regimes) {
      cells.push_back({ScheduleKind::Chimera, S, B, spec.model.blocks, false, r});
      cells.push_back({ScheduleKind::Hanayo, S, B, spec.model.blocks, false, r});
    }
    auto results = eval_cells(cells, spec.model, mode);
    std::ostringstream os;
    os << "system,beta_c,beta_h,t_c,t_h,delta_t_pct\n";
    for (size_t i = 0; i < grid.regimes.size(); ++i) {
      const CellResult& c = results[2 * i];
      const CellResult& h = results[2 * i + 1];
      note_error("hanayo chimera " + grid.regimes[i].name, c);
      note_error("hanayo hanayo " + grid.regimes[i].name, h);
      double dt = 100.0 * (h.t_sim - c.t_sim) / c.t_sim;
      os << grid.regimes[i].name << "," << fmt(100.0 * c.beta_idle) << ","
         << fmt(100.0 * h.beta_idle) << "," << fmt(c.t_sim) << ","
         << fmt(h.t_sim) << "," << fmt(dt) << "\n";
    }
    files["hanayo_table.csv"] = os.str();
  }

  std::string err = errors.str();
  if (!err.empty()) files["sweep_errors.txt"] = err;
  return files;
}

void write_datasets(const std::map<std::string, std::string>& files,
                    const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& [name, content] : files) {
    std::ofstream f(std::filesystem::path(out_dir) / name);
    if (!f) throw std::runtime_error("cannot write " + name + " in " + out_dir);
    f << content;
  }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) row.push_back(field);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::string compare_report(const std::string& dataset_csv, ReportMode mode) {
  auto rows = parse_csv(dataset_csv);
  if (rows.size() < 2) throw std::invalid_argument("empty dataset");
  std::ostringstream os;
  if (mode == ReportMode::HanayoVsChimera) {
    if (rows[0].empty() || rows[0][0] != "system")
      throw std::invalid_argument("not a hanayo_table dataset");
    os << "Hanayo (H) vs Chimera (C), restricted S = B regime\n";
    os << "negative dT: Hanayo is faster\n\n";
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-18s %8s %8s %10s %10s %9s\n",
                  "system", "beta_C%", "beta_H%", "T_C[s]", "T_H[s]", "dT[%]");
    os << buf;
    for (size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() < 6) {
        os << rows[i][0] << ": missing cells\n";
        continue;
      }
      std::snprintf(buf, sizeof(buf), "%-18s %8.2f %8.2f %10.2f %10.2f %+9.2f\n",
                    rows[i][0].c_str(), std::stod(rows[i][1]),
                    std::stod(rows[i][2]), std::stod(rows[i][3]),
                    std::stod(rows[i][4]), std::stod(rows[i][5]));
      os << buf;
    }
    return os.str();
  }

  if (rows[0].empty() || rows[0][0] != "B")
    throw std::invalid_argument("not an unbalanced_runtime dataset");
  os << "Asymmetric 1:2 Chimera vs symmetric Chimera\n";
  os << "relative simulated runtime, negative: asymmetric is faster\n\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%6s", "B");
  os << buf;
  for (size_t c = 1; c < rows[0].size(); ++c) {
    std::snprintf(buf, sizeof(buf), " %12s", rows[0][c].c_str());
    os << buf;
  }
  os << "\n";
  for (size_t i = 1; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%6s", rows[i][0].c_str());
    os << buf;
    for (size_t c = 1; c < rows[i].size(); ++c) {
      std::snprintf(buf, sizeof(buf), " %+12.2f", std::stod(rows[i][c]));
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

AppConfig default_config() {
  AppConfig cfg;
  cfg.sweep.model = cfg.model;
  cfg.sweep.baseline = cfg.system;
  return cfg;
}

namespace {

using nlohmann::json;

void read_model(const json& j, ModelConfig& m) {
  m.blocks = j.value("blocks", m.blocks);
  m.hidden = j.value("hidden", m.hidden);
  m.heads = j.value("heads", m.heads);
  m.seq = j.value("seq", m.seq);
  m.ffn_dim = j.value("ffn_dim", m.ffn_dim);
  m.minibatch = j.value("minibatch", m.minibatch);
  m.dtype_bytes = j.value("dtype_bytes", m.dtype_bytes);
  m.act_bytes_per_token_per_block =
      j.value("act_bytes_per_token_per_block", m.act_bytes_per_token_per_block);
  m.optimizer_multiplier = j.value("optimizer_multiplier", m.optimizer_multiplier);
}

void read_system(const json& j, SystemConfig& s) {
  s.name = j.value("name", s.name);
  s.peak_throughput = j.value("peak_throughput", s.peak_throughput);
  s.compute_efficiency = j.value("compute_efficiency", s.compute_efficiency);
  s.compute_latency = j.value("compute_latency", s.compute_latency);
  s.mem_bandwidth = j.value("mem_bandwidth", s.mem_bandwidth);
  s.mem_efficiency = j.value("mem_efficiency", s.mem_efficiency);
  s.mem_latency = j.value("mem_latency", s.mem_latency);
  s.net_bandwidth = j.value("net_bandwidth", s.net_bandwidth);
  s.net_latency = j.value("net_latency", s.net_latency);
}

}  // namespace

AppConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  json j = json::parse(f);
  AppConfig cfg = default_config();
  if (j.contains("model")) read_model(j["model"], cfg.model);
  if (j.contains("system")) read_system(j["system"], cfg.system);
  cfg.sweep.model = cfg.model;
  cfg.sweep.baseline = cfg.system;
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    if (s.contains("schedules")) {
      cfg.sweep.schedules.clear();
      for (const auto& name : s["schedules"])
        cfg.sweep.schedules.push_back(kind_from_name(name.get<std::string>()));
    }
    if (s.contains("stage_counts"))
      cfg.sweep.stage_counts = s["stage_counts"].get<std::vector<int>>();
    if (s.contains("microbatch_counts"))
      cfg.sweep.microbatch_counts =
          s["microbatch_counts"].get<std::vector<int>>();
    if (s.contains("datasets"))
      cfg.sweep.datasets = s["datasets"].get<std::vector<std::string>>();
    cfg.sweep.asym_blocks = s.value("asym_blocks", cfg.sweep.asym_blocks);
    cfg.sweep.hanayo_stages = s.value("hanayo_stages", cfg.sweep.hanayo_stages);
  }
  cfg.model.check();
  cfg.system.check();
  return cfg;
}

std::string config_json(const AppConfig& cfg) {
  json j;
  j["model"] = {
      {"blocks", cfg.model.blocks},
      {"hidden", cfg.model.hidden},
      {"heads", cfg.model.heads},
      {"seq", cfg.model.seq},
      {"ffn_dim", cfg.model.ffn_dim},
      {"minibatch", cfg.model.minibatch},
      {"dtype_bytes", cfg.model.dtype_bytes},
      {"act_bytes_per_token_per_block", cfg.model.act_bytes_per_token_per_block},
      {"optimizer_multiplier", cfg.model.optimizer_multiplier},
  };
  j["system"] = {
      {"name", cfg.system.name},
      {"peak_throughput", cfg.system.peak_throughput},
      {"compute_efficiency", cfg.system.compute_efficiency},
      {"compute_latency", cfg.system.compute_latency},
      {"mem_bandwidth", cfg.system.mem_bandwidth},
      {"mem_efficiency", cfg.system.mem_efficiency},
      {"mem_latency", cfg.system.mem_latency},
      {"net_bandwidth", cfg.system.net_bandwidth},
      {"net_latency", cfg.system.net_latency},
  };
  std::vector<std::string> sched_names;
  for (auto k : cfg.sweep.schedules) sched_names.push_back(kind_name(k));
  j["sweep"] = {
      {"schedules", sched_names},
      {"stage_counts", cfg.sweep.stage_counts},
      {"microbatch_counts", cfg.sweep.microbatch_counts},
      {"datasets", cfg.sweep.datasets},
      {"asym_blocks", cfg.sweep.asym_blocks},
      {"hanayo_stages", cfg.sweep.hanayo_stages},
  };
  return j.dump(2) + "\n";
}

}  // namespace pipesim
