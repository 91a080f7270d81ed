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

#include "siren/efficiency.hpp"

#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "siren/error.hpp"

namespace siren {

namespace {

Flops checked_mul(Flops a, Flops b, const char* what) {
  Flops r;
  if (__builtin_mul_overflow(a, b, &r)) {
    throw Error(ErrorKind::kOverflow, std::string("FLOP count overflows 64 bits in ") + what);
  }
  return r;
}

Flops checked_add(Flops a, Flops b, const char* what) {
  Flops r;
  if (__builtin_add_overflow(a, b, &r)) {
    throw Error(ErrorKind::kOverflow, std::string("FLOP count overflows 64 bits in ") + what);
  }
  return r;
}

}  // namespace

void GuardCostSpec::validate() const {
  if (num_layers == 0 || input_length == 0 || hidden_dim == 0 || total_params == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "guard cost spec needs positive L, S, D_h and N_params");
  }
}

SirenCostSpec SirenCostSpec::from_architecture(const MlpArchitecture& architecture) {
  SirenCostSpec s;
  for (const auto& [in, out] : architecture.layer_dims) s.layer_dims.emplace_back(in, out);
  return s;
}

void SirenCostSpec::validate() const {
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    if (layer_dims[i].first == 0 || layer_dims[i].second == 0) {
      throw Error(ErrorKind::kInvalidArgument, "MLP layer with a zero dimension");
    }
    if (i > 0 && layer_dims[i].first != layer_dims[i - 1].second) {
      throw Error(ErrorKind::kInvalidArgument,
                  "MLP layer " + std::to_string(i) + " does not chain with the previous layer");
    }
  }
}

Flops flops_guard(const GuardCostSpec& spec) {
  spec.validate();
  const Flops K = spec.generated_tokens;
  if (K == 0) return 0;
  // sum_k (S + k) = K S + K (K - 1) / 2; one of K, K - 1 is even.
  const Flops tri = (K % 2 == 0) ? checked_mul(K / 2, K - 1, "guard") : checked_mul(K, (K - 1) / 2, "guard");
  const Flops positions = checked_add(checked_mul(K, spec.input_length, "guard"), tri, "guard");
  const Flops attention = checked_mul(
      checked_mul(checked_mul(2, spec.num_layers, "guard"), spec.hidden_dim, "guard"), positions,
      "guard");
  const Flops dense = checked_mul(checked_mul(2, spec.total_params, "guard"), K, "guard");
  return checked_add(attention, dense, "guard");
}

Flops flops_siren(const SirenCostSpec& spec) {
  spec.validate();
  Flops total = 0;
  for (const auto& [in, out] : spec.layer_dims) {
    total = checked_add(total, checked_mul(checked_mul(2, in, "MLP"), out, "MLP"), "MLP");
  }
  return total;
}

CostReport cost_report(const GuardCostSpec& guard, const SirenCostSpec& siren) {
  CostReport r;
  r.guard = guard;
  r.siren = siren;
  r.guard_flops = flops_guard(guard);
  GuardCostSpec prefill = guard;
  prefill.generated_tokens = 1;
  r.host_pass_flops = flops_guard(prefill);
  r.siren_flops = flops_siren(siren);
  r.siren_total_flops = checked_add(r.host_pass_flops, r.siren_flops, "cost report");
  const Flops g = std::gcd(r.guard_flops, r.siren_total_flops);
  r.ratio_num = g == 0 ? 0 : r.guard_flops / g;
  r.ratio_den = g == 0 ? 1 : r.siren_total_flops / g;
  r.ratio = static_cast<double>(r.guard_flops) / static_cast<double>(r.siren_total_flops);
  return r;
}

std::string format_cost_report(const CostReport& r) {
  std::string out;
  char line[160];
  auto row = [&](const char* name, Flops v) {
    std::snprintf(line, sizeof(line), "  %-28s %24llu\n", name, static_cast<unsigned long long>(v));
    out += line;
  };
  std::snprintf(line, sizeof(line),
                "guard: L=%llu S=%llu D_h=%llu N_params=%llu K=%llu\n",
                static_cast<unsigned long long>(r.guard.num_layers),
                static_cast<unsigned long long>(r.guard.input_length),
                static_cast<unsigned long long>(r.guard.hidden_dim),
                static_cast<unsigned long long>(r.guard.total_params),
                static_cast<unsigned long long>(r.guard.generated_tokens));
  out += line;
  out += "mlp:";
  if (r.siren.layer_dims.empty()) out += " (none)";
  for (const auto& [in, out_dim] : r.siren.layer_dims) {
    out += " " + std::to_string(in) + "x" + std::to_string(out_dim);
  }
  out += "\n";
  row("guard (K tokens)", r.guard_flops);
  row("host forward pass (K=1)", r.host_pass_flops);
  row("mlp head", r.siren_flops);
  row("host pass + mlp head", r.siren_total_flops);
  std::snprintf(line, sizeof(line), "  %-28s %24.6f  (%llu/%llu)\n", "ratio guard / (host + mlp)",
                r.ratio, static_cast<unsigned long long>(r.ratio_num),
                static_cast<unsigned long long>(r.ratio_den));
  out += line;
  return out;
}

nlohmann::json cost_report_to_json(const CostReport& r) {
  nlohmann::json dims = nlohmann::json::array();
  for (const auto& [in, out] : r.siren.layer_dims) dims.push_back({in, out});
  return {{"guard",
           {{"num_layers", r.guard.num_layers},
            {"input_length", r.guard.input_length},
            {"hidden_dim", r.guard.hidden_dim},
            {"total_params", r.guard.total_params},
            {"generated_tokens", r.guard.generated_tokens}}},
          {"mlp_layer_dims", dims},
          {"guard_flops", r.guard_flops},
          {"host_pass_flops", r.host_pass_flops},
          {"mlp_flops", r.siren_flops},
          {"host_plus_mlp_flops", r.siren_total_flops},
          {"ratio_num", r.ratio_num},
          {"ratio_den", r.ratio_den},
          {"ratio", r.ratio}};
}

}  // namespace siren
