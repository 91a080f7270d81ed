/* Copyright 2026 The siren Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

// Closed-form inference FLOPs: a generative guard model decoding K tokens with
// a KV cache versus the MLP head on already computed hidden states. All
// arithmetic is exact unsigned 64-bit; overflow raises kOverflow.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "siren/mlp.hpp"

namespace siren {

using Flops = std::uint64_t;

struct GuardCostSpec {
  std::uint64_t num_layers = 0;    // L
  std::uint64_t input_length = 0;  // S tokens
  std::uint64_t hidden_dim = 0;    // D_h
  std::uint64_t total_params = 0;  // N_params
  std::uint64_t generated_tokens = 4;  // K

  // L, S, D_h and N_params must be positive. K = 0 is allowed (empty sum).
  void validate() const;
};

struct SirenCostSpec {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> layer_dims;  // (d_in, d_out)

  static SirenCostSpec from_architecture(const MlpArchitecture& architecture);
  // Consecutive layers must chain (d_out of one equals d_in of the next).
  void validate() const;
};

// sum_{k=0}^{K-1} [2 L (S + k) D_h + 2 N_params]
Flops flops_guard(const GuardCostSpec& spec);

// sum_i 2 d_in_i d_out_i
Flops flops_siren(const SirenCostSpec& spec);

struct CostReport {
  GuardCostSpec guard;
  SirenCostSpec siren;
  Flops guard_flops = 0;
  Flops host_pass_flops = 0;   // guard formula at K = 1 (prefill only)
  Flops siren_flops = 0;       // MLP only
  Flops siren_total_flops = 0; // host pass + MLP
  // guard_flops / siren_total_flops in lowest terms, and as a double.
  Flops ratio_num = 0;
  Flops ratio_den = 1;
  double ratio = 0.0;
};

CostReport cost_report(const GuardCostSpec& guard, const SirenCostSpec& siren);

std::string format_cost_report(const CostReport& report);
nlohmann::json cost_report_to_json(const CostReport& report);

}  // namespace siren
