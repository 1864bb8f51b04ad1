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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "pipesim/analytic.hpp"
#include "pipesim/execgraph.hpp"
#include "pipesim/simulator.hpp"

using namespace pipesim;

namespace {

struct Sample {
  ScheduleKind kind;
  int stages;
  int microbatches;
};

// Random (kind, S, B) within each family's preconditions; fixed seed.
std::vector<Sample> draw_samples(int count) {
  std::mt19937 rng(20260810);
  std::uniform_int_distribution<int> kind_d(0, 3);
  std::uniform_int_distribution<int> s_d(0, 3);
  std::uniform_int_distribution<int> b_d(1, 32);
  const int stage_choices[4] = {2, 4, 8, 16};
  std::vector<Sample> out;
  while (static_cast<int>(out.size()) < count) {
    auto kind = static_cast<ScheduleKind>(kind_d(rng));
    int s = stage_choices[s_d(rng)];
    int b = 2 * b_d(rng);  // even, 2..64
    if (kind == ScheduleKind::Hanayo && b > 16) continue;  // keep runtime sane
    out.push_back({kind, s, b});
  }
  return out;
}

int model_blocks_for(ScheduleKind kind, int stages) {
  // Any count divisible by 2S works across families.
  return 2 * stages * 4;
}

}  // namespace

TEST_CASE("randomized validity and graph closure") {
  for (const auto& s : draw_samples(24)) {
    CAPTURE(kind_name(s.kind));
    CAPTURE(s.stages);
    CAPTURE(s.microbatches);
    auto table = build_schedule(s.kind, s.stages, s.microbatches);
    auto report = validate_table(table);
    INFO(report.to_string());
    REQUIRE(report.valid());

    ModelConfig m;
    m.blocks = model_blocks_for(s.kind, s.stages);
    m.minibatch = s.microbatches;  // one sequence per microbatch
    auto placement = default_placement(s.kind, s.stages, m.blocks);
    auto graph = build_exec_graph(table, placement, m);
    auto greport = check_graph(graph);
    INFO(greport.to_string());
    REQUIRE(greport.valid());
    CHECK(graph.topological_order().size() == graph.nodes.size());

    // Unidirectional transfer-count formula.
    if (s.kind == ScheduleKind::GPipe || s.kind == ScheduleKind::OneF1B) {
      int transfers = 0;
      for (const auto& n : graph.nodes)
        if (n.kind == NodeKind::Transfer) ++transfers;
      CHECK(transfers == 2 * s.microbatches * (s.stages - 1));
    }

    // Rebuild determinism.
    auto again = build_schedule(s.kind, s.stages, s.microbatches);
    CHECK(render_table(again, TableFormat::Csv) ==
          render_table(table, TableFormat::Csv));
  }
}

TEST_CASE("randomized structural equivalences") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> s_d(1, 3);
  std::uniform_int_distribution<int> b_d(1, 32);
  const int stage_choices[4] = {2, 4, 8, 16};
  for (int i = 0; i < 16; ++i) {
    int s = stage_choices[s_d(rng)];
    int b = 2 * b_d(rng);
    CAPTURE(s);
    CAPTURE(b);
    auto mg = structural_metrics(build_schedule(ScheduleKind::GPipe, s, b));
    auto mo = structural_metrics(build_schedule(ScheduleKind::OneF1B, s, b));
    CHECK(mg.bubble_ratio == mo.bubble_ratio);
    CHECK(mg.bubble_ratio ==
          formula_bubble_ratio(ScheduleKind::GPipe, s, b).bubble_ratio);
    if (s >= 4) {
      auto mc = structural_metrics(build_schedule(ScheduleKind::Chimera, s, b));
      CHECK(mc.bubble_ratio <= mg.bubble_ratio);
      CHECK(mc.bubble_ratio >=
            formula_bubble_ratio(ScheduleKind::Chimera, s, b).bubble_ratio);
    }
  }
}

TEST_CASE("randomized simulation determinism and bounds") {
  SystemConfig sys;
  for (const auto& s : draw_samples(8)) {
    CAPTURE(kind_name(s.kind));
    ModelConfig m;
    m.blocks = model_blocks_for(s.kind, s.stages);
    m.minibatch = s.microbatches;
    auto table = build_schedule(s.kind, s.stages, s.microbatches);
    auto placement = default_placement(s.kind, s.stages, m.blocks);
    auto graph = build_exec_graph(table, placement, m);
    auto a = simulate(graph, sys);
    auto b = simulate(graph, sys);
    CHECK(a.start == b.start);
    CHECK(a.end == b.end);
    for (int w = 0; w < graph.workers; ++w)
      CHECK(a.makespan >= a.busy[w] - 1e-9);

    // Ideal-cost bridge to the structural bubble.
    auto metrics = structural_metrics(table);
    auto sm = timeline_metrics(simulate_structural(graph), graph.workers);
    CHECK(sm.beta_idle == metrics.bubble_ratio);
  }
}
