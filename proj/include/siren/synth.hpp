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

// Gaussian class-conditional activation datasets with planted signal neurons.
//
// Every neuron is N(0, noise_std^2) noise. A planted neuron j of layer l with
// sign s_j additionally carries a mean of +s_j * mu_l on harmful examples and
// -s_j * mu_l on safe ones. In token-level mode each token draws fresh noise;
// in switching mode harmful examples follow the safe means before position
// t* and the harmful means from t* on.

#include <cstdint>
#include <filesystem>
#include <map>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "siren/activation_store.hpp"
#include "siren/probes.hpp"

namespace siren {

enum class SynthMode { kPooled, kTokenLevel, kSwitching };

std::string to_string(SynthMode mode);
SynthMode parse_synth_mode(const std::string& s);

struct SynthSpec {
  int num_layers = 4;
  std::vector<std::size_t> widths{64, 64, 64, 64};
  std::size_t num_examples = 2000;
  std::map<int, std::vector<std::size_t>> planted;  // layer (1-based) -> neurons
  std::map<int, double> informativeness;            // layer -> mu >= 0
  double noise_std = 1.0;
  double label_balance = 0.5;  // P(harmful)
  std::uint64_t seed = 42;
  SynthMode mode = SynthMode::kPooled;
  std::size_t tokens = 1;     // T, token-level and switching modes
  std::size_t switch_at = 1;  // t* (1-based), switching mode
  SplitFractions splits;

  void validate() const;
  double mu(int layer) const;
};

// Picks `count` distinct neurons per listed layer from a generator seeded
// with `seed`, and sets each listed layer's informativeness to `mu`.
void plant_random(SynthSpec& spec, const std::vector<int>& layers, std::size_t count, double mu,
                  std::uint64_t seed);

// L=4, D=64, N=2000, five planted neurons in each of layers 2 and 3 with
// mu=2, layers 1 and 4 pure noise, noise_std=1, balance 0.5, seed 42.
SynthSpec canonical_spec();

struct GroundTruth {
  std::map<int, std::vector<std::size_t>> planted;
  std::map<int, std::vector<int>> signs;  // aligned with `planted`
  std::map<int, double> informativeness;
  SynthMode mode = SynthMode::kPooled;
  std::size_t tokens = 1;
  std::size_t switch_at = 0;
  std::uint64_t seed = 0;

  bool operator==(const GroundTruth&) const = default;
};

struct SynthOutput {
  ActivationDataset dataset;
  GroundTruth truth;
};

// Deterministic in the spec; parallel across examples with per-example seeds.
SynthOutput generate(const SynthSpec& spec);

// Two views of the same examples. Harmful examples are split into two
// subtypes; subtype A carries signal only in view A's planted neurons and
// subtype B only in view B's. Labels, ids and splits are shared.
struct ComplementaryOutput {
  ActivationDataset view_a;
  ActivationDataset view_b;
  GroundTruth truth_a;
  GroundTruth truth_b;
  std::vector<int> subtype;  // per example: -1 safe, 0 = A, 1 = B
};

ComplementaryOutput generate_complementary(const SynthSpec& spec_a, const SynthSpec& spec_b);

// |S_l ∩ planted_l| / |planted_l| for each planted layer.
std::map<int, double> score_recovery(const SafetySelection& selection, const GroundTruth& truth);

nlohmann::json spec_to_json(const SynthSpec& spec);
SynthSpec spec_from_json(const nlohmann::json& doc);
nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& doc);

// Writes `<stem>.sact` and `<stem>.truth.json` into `dir`.
std::pair<std::filesystem::path, std::filesystem::path> write_synth(const SynthOutput& out,
                                                                    const std::filesystem::path& dir,
                                                                    const std::string& stem);

}  // namespace siren
