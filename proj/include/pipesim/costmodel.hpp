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

#include <cstdint>
#include <string>

#include "pipesim/phase.hpp"

namespace pipesim {

// Modeled system: compute roofline terms plus a point-to-point network.
// Rates in FLOP/s and bytes/s, latencies in seconds, efficiencies in (0,1].
struct SystemConfig {
  std::string name = "baseline";
  double peak_throughput = 1e15;   // TP, FLOP/s
  double compute_efficiency = 0.5; // e_c
  double compute_latency = 1e-6;   // L_c, s
  double mem_bandwidth = 34e12;    // BW_m, bytes/s
  double mem_efficiency = 0.8;     // e_m
  double mem_latency = 50e-9;      // L_m, s
  double net_bandwidth = 50e9;     // BW_net, bytes/s
  double net_latency = 500e-9;     // L_net, s

  void check() const;
};

// Transformer model shape plus the byte-accounting coefficients.
struct ModelConfig {
  int blocks = 128;        // N, transformer blocks in the whole model
  int hidden = 4096;       // d
  int heads = 80;
  int seq = 4096;          // s, tokens per sequence
  int ffn_dim = 16384;     // 4*d
  int minibatch = 256;     // M_glob, sequences per training step
  int dtype_bytes = 2;
  double act_bytes_per_token_per_block = 16.0;  // c_act
  double optimizer_multiplier = 6.0;            // fp32 Adam moments + master weights

  // Sequences per microbatch at microbatch count B; must divide evenly.
  int microbatch_size(int microbatches) const;
  void check() const;
};

// Per-node work annotation. Durations are derived against a SystemConfig
// at simulation time, so one graph can be priced under many regimes.
struct CostAnnotation {
  double flops = 0.0;      // F
  double mem_bytes = 0.0;  // V_m
  double net_bytes = 0.0;  // V_net, transfers only
};

// Transfer time under the Hockney model: V/BW + L.
double comm_time(double net_bytes, const SystemConfig& sys);

// Compute time under the roofline model:
// max(F/(TP*e_c) + L_c, V_m/(BW_m*e_m) + L_m).
double compute_time(double flops, double mem_bytes, const SystemConfig& sys);

// FLOPs and memory traffic for one phase of one pipeline stage holding
// `blocks_in_stage` transformer blocks, processing m sequences.
// Per block: F_fwd = m*s*(24*d^2 + 4*s*d), F_agrad = F_wgrad = F_fwd
// (backward = 2x forward), F_recomp = F_fwd, F_opt = 0 with optimizer-state
// memory traffic only.
CostAnnotation stage_costs(const ModelConfig& model, int blocks_in_stage,
                           int microbatch_size, Phase phase);

// Bytes of one stage-boundary activation tensor: m * s * d * dtype_bytes.
// Used as the transfer payload in both directions.
double activation_bytes(const ModelConfig& model, int microbatch_size);

// Bytes of retained activations for one microbatch on one stage:
// c_act * m * s * blocks.
double stage_activation_bytes(const ModelConfig& model, int blocks_in_stage,
                              int microbatch_size);

// Parameter bytes of one transformer block: 12 * d^2 * dtype (ffn = 4d).
double block_weight_bytes(const ModelConfig& model);

}  // namespace pipesim
