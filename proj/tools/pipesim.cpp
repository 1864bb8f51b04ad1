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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pipesim/analytic.hpp"
#include "pipesim/execgraph.hpp"
#include "pipesim/simulator.hpp"
#include "pipesim/sweep.hpp"

using namespace pipesim;

namespace {

struct CommonArgs {
  std::string kind = "gpipe";
  int stages = 4;
  int microbatches = 8;
  bool recompute = false;
  bool asymmetric = false;
  int blocks = 0;  // 0: use config
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("-k,--kind", a.kind,
                  "schedule kind: gpipe | 1f1b | chimera | hanayo");
  cmd->add_option("-S,--stages", a.stages, "pipeline stage count");
  cmd->add_option("-B,--microbatches", a.microbatches, "microbatch count");
  cmd->add_flag("--recompute", a.recompute, "recompute activations before backward");
  cmd->add_flag("--asymmetric", a.asymmetric, "Chimera 1:2 block placement");
  cmd->add_option("--blocks", a.blocks, "override model block count");
}

struct BuildProducts {
  ModelConfig model;
  StagePlacement placement;
  ScheduleTable table;
};

BuildProducts build_from(const AppConfig& cfg, const CommonArgs& a) {
  BuildProducts p;
  p.model = cfg.model;
  if (a.blocks > 0) p.model.blocks = a.blocks;
  ScheduleKind kind = kind_from_name(a.kind);
  if (a.asymmetric) {
    if (kind != ScheduleKind::Chimera)
      throw CLI::ValidationError("--asymmetric applies to chimera only");
    p.placement = chimera_asymmetric_placement(a.stages, p.model.blocks);
  } else {
    p.placement = default_placement(kind, a.stages, p.model.blocks);
  }
  BuildOptions opts;
  opts.recompute = a.recompute;
  p.table = build_schedule(kind, a.stages, a.microbatches, p.placement, opts);
  return p;
}

void print_structural(const ScheduleTable& table) {
  auto m = structural_metrics(table);
  std::printf("schedule_length: %g weighted slots\n", m.schedule_length);
  std::printf("bubble_ratio:    %.6f\n", m.bubble_ratio);
  std::printf("utilization:     %.6f\n", m.utilization);
  std::printf("per_worker_idle:");
  for (double v : m.per_worker_idle) std::printf(" %g", v);
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pipeline schedule laboratory: tables, formulas, graphs and "
               "communication-aware simulation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  bool seed_flag = false;
  app.add_option("--config", config_path, "JSON config file (model/system/sweep)");
  app.add_option("--out", out_dir, "output directory for datasets");
  app.add_flag("--seed-irrelevant", seed_flag,
               "reserved; every run is deterministic, so seeding is rejected");

  CommonArgs targs;
  auto* table_cmd = app.add_subcommand("table", "build a schedule table");
  add_common(table_cmd, targs);
  std::string format = "ascii";
  bool with_metrics = false;
  table_cmd->add_option("--format", format, "ascii | csv");
  table_cmd->add_flag("--metrics", with_metrics, "print structural metrics");

  CommonArgs fargs;
  auto* formula_cmd = app.add_subcommand("formula", "closed-form bubble ratio");
  add_common(formula_cmd, fargs);

  CommonArgs gargs;
  auto* graph_cmd = app.add_subcommand("graph", "build the execution graph");
  add_common(graph_cmd, gargs);
  bool do_dump = false, do_check = false;
  graph_cmd->add_flag("--dump", do_dump, "print NODE/EDGE lines");
  graph_cmd->add_flag("--check", do_check, "run the graph checker");

  CommonArgs sargs;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate one configuration");
  add_common(sim_cmd, sargs);
  std::string regime = "baseline";
  std::string trace_path, timeline_path;
  bool with_memory = false, structural = false;
  sim_cmd->add_option("--regime", regime, "system regime name (see sweep grid)");
  sim_cmd->add_option("--trace", trace_path, "write a browser-viewable trace");
  sim_cmd->add_option("--timeline-csv", timeline_path, "write the timeline CSV");
  sim_cmd->add_flag("--memory", with_memory, "print per-worker memory peaks");
  sim_cmd->add_flag("--structural", structural,
                    "ideal network, slot-weight durations");

  auto* sweep_cmd = app.add_subcommand("sweep", "run the experiment sweep");
  std::vector<std::string> datasets;
  bool serial = false;
  sweep_cmd->add_option("--dataset", datasets,
                        "subset: formula timeline memory unbalanced hanayo");
  sweep_cmd->add_flag("--serial", serial, "single-threaded reference sweep");

  auto* report_cmd = app.add_subcommand("report", "comparison report");
  std::string mode = "hanayo_vs_chimera";
  report_cmd->add_option("--mode", mode, "hanayo_vs_chimera | asym_vs_sym");

  CLI11_PARSE(app, argc, argv);

  try {
    if (seed_flag) {
      std::fprintf(stderr,
                   "--seed-irrelevant: rejected; pipesim has no randomness\n");
      return 2;
    }
    AppConfig cfg = config_path.empty() ? default_config() : load_config(config_path);

    if (table_cmd->parsed()) {
      auto p = build_from(cfg, targs);
      std::cout << render_table(
          p.table, format == "csv" ? TableFormat::Csv : TableFormat::Ascii);
      if (with_metrics) print_structural(p.table);
      return 0;
    }

    if (formula_cmd->parsed()) {
      auto r = formula_bubble_ratio(kind_from_name(fargs.kind), fargs.stages,
                                    fargs.microbatches);
      std::printf("bubble_ratio: %.6f (%.2f%%)\n", r.bubble_ratio,
                  100.0 * r.bubble_ratio);
      std::printf("assumptions:  %s\n", r.assumptions.c_str());
      return 0;
    }

    if (graph_cmd->parsed()) {
      auto p = build_from(cfg, gargs);
      auto graph = build_exec_graph(p.table, p.placement, p.model);
      if (do_dump) std::cout << dump_graph(graph);
      if (do_check || !do_dump) {
        auto rep = check_graph(graph);
        std::printf("nodes: %zu, edges: %zu\n", graph.nodes.size(),
                    graph.edges.size());
        std::cout << "check: " << rep.to_string();
        return rep.valid() ? 0 : 1;
      }
      return 0;
    }

    if (sim_cmd->parsed()) {
      auto p = build_from(cfg, sargs);
      auto graph = build_exec_graph(p.table, p.placement, p.model);
      RegimeGrid grid = build_regimes(cfg.system);
      Timeline tl = structural ? simulate_structural(graph)
                               : simulate(graph, grid.by_name(regime));
      auto m = timeline_metrics(tl, graph.workers);
      std::printf("T_sim:     %.6f s\n", m.t_sim);
      std::printf("beta_idle: %.4f (%.2f%%)\n", m.beta_idle, 100.0 * m.beta_idle);
      if (with_memory) {
        auto mem = memory_timeline(tl, graph, p.placement, p.model);
        for (int w = 0; w < graph.workers; ++w)
          std::printf("worker %d: peak activation %.3f GiB, persistent %.3f "
                      "GiB, total %.3f GiB\n",
                      w, mem.peak_activation[w] / (1 << 30),
                      mem.persistent[w] / (1 << 30),
                      mem.peak_total[w] / (1 << 30));
        std::printf("global peak activation: %.3f GiB\n",
                    mem.global_peak_activation / (1 << 30));
      }
      if (!trace_path.empty()) export_trace(tl, graph, trace_path);
      if (!timeline_path.empty()) {
        std::ofstream f(timeline_path);
        if (!f) throw std::runtime_error("cannot write " + timeline_path);
        f << timeline_csv(tl, graph);
      }
      return 0;
    }

    if (sweep_cmd->parsed()) {
      SweepSpec spec = cfg.sweep;
      if (!datasets.empty()) spec.datasets = datasets;
      auto files =
          run_sweep(spec, serial ? SweepMode::Serial : SweepMode::Parallel);
      write_datasets(files, out_dir);
      for (const auto& [name, content] : files)
        std::printf("wrote %s/%s (%zu bytes)\n", out_dir.c_str(), name.c_str(),
                    content.size());
      return files.count("sweep_errors.txt") ? 1 : 0;
    }

    if (report_cmd->parsed()) {
      std::string file = mode == "hanayo_vs_chimera" ? "hanayo_table.csv"
                                                     : "unbalanced_runtime.csv";
      std::string dataset;
      auto path = std::filesystem::path(out_dir) / file;
      if (std::filesystem::exists(path)) {
        std::ifstream f(path);
        std::stringstream ss;
        ss << f.rdbuf();
        dataset = ss.str();
      } else {
        SweepSpec spec = cfg.sweep;
        spec.datasets = {mode == "hanayo_vs_chimera" ? "hanayo" : "unbalanced"};
        dataset = run_sweep(spec).at(file);
      }
      std::cout << compare_report(dataset,
                                  mode == "hanayo_vs_chimera"
                                      ? ReportMode::HanayoVsChimera
                                      : ReportMode::AsymVsSym);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
