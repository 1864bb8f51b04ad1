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

#include "pipesim/costmodel.hpp"
#include "pipesim/schedule.hpp"
#include "pipesim/sweep.hpp"

using namespace pipesim;

namespace {

SystemConfig baseline() { return SystemConfig{}; }

}  // namespace

TEST_CASE("hockney transfer time") {
  SystemConfig sys = baseline();
  CHECK(comm_time(1e8, sys) == doctest::Approx(0.0020005).epsilon(1e-12));
  CHECK(comm_time(0.0, sys) == sys.net_latency);

  SystemConfig fast = sys;
  fast.net_bandwidth *= 10.0;
  fast.net_latency /= 10.0;
  CHECK(comm_time(1e8, fast) == doctest::Approx(0.00020005).epsilon(1e-12));
  CHECK_THROWS_AS(comm_time(-1.0, sys), std::invalid_argument);
}

TEST_CASE("roofline compute time") {
  SystemConfig sys = baseline();
  double d = compute_time(1e12, 1e9, sys);
  CHECK(d == doctest::Approx(2.001e-3).epsilon(1e-9));

  CHECK(compute_time(0.0, 0.0, sys) ==
        std::max(sys.compute_latency, sys.mem_latency));

  // Memory-bound case: the bandwidth term dominates.
  double mem_bound = compute_time(1e9, 1e12, sys);
  double mem_term = 1e12 / (sys.mem_bandwidth * sys.mem_efficiency) + sys.mem_latency;
  CHECK(mem_bound == doctest::Approx(mem_term).epsilon(1e-12));
}

TEST_CASE("roofline monotonicity and regime scaling") {
  SystemConfig sys = baseline();
  CHECK(compute_time(2e12, 0, sys) > compute_time(1e12, 0, sys));
  CHECK(comm_time(2e8, sys) > comm_time(1e8, sys));

  SystemConfig strong = sys;
  strong.peak_throughput *= 10;
  CHECK(compute_time(1e12, 0, strong) < compute_time(1e12, 0, sys));

  // Compute-bound work scales by exactly the regime factor.
  RegimeGrid grid = build_regimes(sys);
  const SystemConfig& fast_cp = grid.by_name("mid_nw_fast_cp");
  double base = compute_time(1e15, 1e9, sys);
  double fast = compute_time(1e15, 1e9, fast_cp);
  CHECK(fast == doctest::Approx(base / 10.0).epsilon(1e-12));
}

TEST_CASE("transformer stage costs") {
  ModelConfig m;  // d = 4096, s = 4096
  int mb = 32;
  auto fwd = stage_costs(m, 1, mb, Phase::Fwd);
  // Independent arithmetic: m*s*(24*d^2 + 4*s*d).
  double expect = 32.0 * 4096.0 * (24.0 * 4096.0 * 4096.0 + 4.0 * 4096.0 * 4096.0);
  CHECK(fwd.flops == expect);
  CHECK(fwd.flops == doctest::Approx(6.16e13).epsilon(0.01));

  auto agrad = stage_costs(m, 1, mb, Phase::Agrad);
  auto wgrad = stage_costs(m, 1, mb, Phase::Wgrad);
  CHECK(agrad.flops + wgrad.flops == 2.0 * fwd.flops);

  auto big = stage_costs(m, 16, mb, Phase::Fwd);
  CHECK(big.flops == 16.0 * fwd.flops);
  CHECK(big.mem_bytes == 16.0 * fwd.mem_bytes);

  auto opt = stage_costs(m, 16, mb, Phase::Opt);
  CHECK(opt.flops == 0.0);
  CHECK(opt.mem_bytes > 0.0);
}

TEST_CASE("backward to forward duration ratio at baseline") {
  ModelConfig m;
  SystemConfig sys = baseline();
  auto fwd = stage_costs(m, 16, 32, Phase::Fwd);
  auto agrad = stage_costs(m, 16, 32, Phase::Agrad);
  auto wgrad = stage_costs(m, 16, 32, Phase::Wgrad);
  double tf = compute_time(fwd.flops, fwd.mem_bytes, sys);
  double tb = compute_time(agrad.flops, agrad.mem_bytes, sys) +
              compute_time(wgrad.flops, wgrad.mem_bytes, sys);
  CHECK(tb / tf >= 1.9);
  CHECK(tb / tf <= 2.0 + 1e-12);
}

TEST_CASE("activation payload bytes") {
  ModelConfig m;
  CHECK(activation_bytes(m, 32) == 1073741824.0);
  CHECK(activation_bytes(m, 1) == 33554432.0);
  // Halving the microbatch count at fixed minibatch doubles the payload.
  CHECK(activation_bytes(m, m.microbatch_size(64)) * 2 ==
        activation_bytes(m, m.microbatch_size(32)));
}

TEST_CASE("persistent bytes per worker") {
  ModelConfig m;
  auto gpipe = uniform_placement(8, 128);
  double per_worker = persistent_bytes(gpipe, m, 0, 6.0);
  CHECK(per_worker == 16.0 * 12.0 * 4096.0 * 4096.0 * 2.0 * 8.0);
  CHECK(per_worker == doctest::Approx(51.5e9).epsilon(0.01));

  auto chim = chimera_placement(8, 128);
  CHECK(persistent_bytes(chim, m, 3, 6.0) == 2.0 * per_worker);

  auto asym = chimera_asymmetric_placement(4, 120);
  double w0 = persistent_bytes(asym, m, 0, 6.0);
  for (int w = 1; w < 4; ++w) CHECK(persistent_bytes(asym, m, w, 6.0) == w0);
  CHECK(asym.hosted_blocks(0) == 60);

  // Hanayo hosts one model copy in total: half of Chimera per worker.
  auto han = hanayo_placement(8, 128);
  CHECK(persistent_bytes(han, m, 0, 6.0) == per_worker);
}

TEST_CASE("config validation") {
  SystemConfig sys;
  sys.compute_efficiency = 1.5;
  CHECK_THROWS_AS(sys.check(), std::invalid_argument);
  ModelConfig m;
  CHECK_THROWS_AS(m.microbatch_size(7), std::invalid_argument);
  CHECK(m.microbatch_size(256) == 1);
}
