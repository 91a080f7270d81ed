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

// The deployable detector: selected neurons with their standardization, layer
// weights, feature layout and MLP parameters.
//
// File layout (little-endian): "SIRNBND1" | u32 version | u32 meta_len | meta
// (JSON provenance) | selection | weighting | layout | MLP tensors. Doubles
// are stored as raw IEEE-754 binary64 so a save/load round trip is exact.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siren/activation_store.hpp"
#include "siren/aggregate.hpp"
#include "siren/mlp.hpp"
#include "siren/probes.hpp"

namespace siren {

inline constexpr char kBundleMagic[] = "SIRNBND1";
inline constexpr std::uint32_t kBundleFormatVersion = 1;

struct SirenBundle {
  SafetySelection selection;
  LayerWeighting weighting;
  FeatureLayout layout;
  MlpModel model;
  nlohmann::json provenance = nlohmann::json::object();
  std::uint32_t format_version = kBundleFormatVersion;

  // Throws kWidthMismatch / kShapeMismatch when the parts disagree.
  void check_consistency() const;
};

SirenBundle make_bundle(SafetySelection selection, LayerWeighting weighting, MlpModel model,
                        nlohmann::json provenance = nlohmann::json::object());

std::vector<char> encode_bundle(const SirenBundle& bundle);
SirenBundle decode_bundle(std::span<const char> bytes);
void save_bundle(const SirenBundle& bundle, const std::filesystem::path& path);
SirenBundle load_bundle(const std::filesystem::path& path);

struct ScoredExample {
  std::string example_id;
  int label = 0;
  Split split = Split::kTrain;
  std::array<double, 2> logits{};
  double prob_harmful = 0.5;
};

ScoredExample score_record(const SirenBundle& bundle, const PooledRecord& record);

// Scores every record (optionally only one split), in dataset order.
std::vector<ScoredExample> score_dataset(const SirenBundle& bundle, const PooledDataset& dataset,
                                         const Split* only = nullptr);

}  // namespace siren
