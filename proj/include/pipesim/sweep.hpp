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
#include <vector>

#include "pipesim/costmodel.hpp"
#include "pipesim/schedule.hpp"

namespace pipesim {

// The 3x3 scaling grid around a baseline system: network and compute
// components scaled by `factor` in both directions, bandwidth/throughput up
// and latency down for the fast variants and inversely for the slow ones.
// Regime names and order follow the comparison-table convention; the center
// cell is the baseline itself.
struct RegimeGrid {
  SystemConfig baseline;
  double factor = 10.0;
  std::vector<SystemConfig> regimes;

  const SystemConfig& by_name(const std::string& name) const;
};

RegimeGrid build_regimes(const SystemConfig& baseline, double factor = 10.0);

struct SweepSpec {
  ModelConfig model;
  SystemConfig baseline;
  std::vector<ScheduleKind> schedules = {
      ScheduleKind::GPipe, ScheduleKind::OneF1B, ScheduleKind::Chimera};
  std::vector<int> stage_counts = {4, 8};
  std::vector<int> microbatch_counts = {8, 16, 32, 64, 128, 256};
  // Dataset selection: formula, timeline, memory, unbalanced, hanayo.
  std::vector<std::string> datasets = {"formula", "timeline", "memory",
                                       "unbalanced", "hanayo"};
  int asym_blocks = 120;  // N for the asymmetric placement study
  int hanayo_stages = 8;  // restricted regime: S = B

  void check() const;
};

enum class SweepMode { Serial, Parallel };

// Runs every requested dataset and returns file name -> CSV content.
// Cells are independent; Parallel evaluates them with OpenMP while keeping
// byte-identical output to Serial. Per-cell failures are recorded in
// "sweep_errors.txt" and the sweep continues.
std::map<std::string, std::string> run_sweep(const SweepSpec& spec,
                                             SweepMode mode = SweepMode::Parallel);

// Writes the dataset map into a directory, creating it if needed.
void write_datasets(const std::map<std::string, std::string>& files,
                    const std::string& out_dir);

enum class ReportMode { HanayoVsChimera, AsymVsSym };

// Renders a dataset produced by run_sweep ("hanayo_table.csv" or
// "unbalanced_runtime.csv") as an aligned text table. Delta T [%] is
// 100 * (T_alt - T_ref) / T_ref; negative means the alternative is faster.
std::string compare_report(const std::string& dataset_csv, ReportMode mode);

// JSON config file with `model`, `system` and `sweep` sections. Missing keys
// keep their defaults.
struct AppConfig {
  ModelConfig model;
  SystemConfig system;
  SweepSpec sweep;
};

AppConfig default_config();
AppConfig load_config(const std::string& path);
std::string config_json(const AppConfig& cfg);

}  // namespace pipesim
