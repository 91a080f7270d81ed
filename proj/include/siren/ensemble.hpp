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

// Stacked generalization over several bundles: a small meta-MLP reads the
// concatenated (safe, harmful) logits of every member, in member order.
//
// File layout: "SIRNENS1" | u32 version | u32 meta_len | meta (JSON: member
// names, member bundle SHA-256 digests, training info) | MLP tensors.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siren/bundle.hpp"
#include "siren/mlp.hpp"

namespace siren {

inline constexpr char kEnsembleMagic[] = "SIRNENS1";
inline constexpr std::uint32_t kEnsembleFormatVersion = 1;

// One member's logits on a set of examples.
struct MemberLogits {
  std::string name;
  std::string bundle_digest;
  std::vector<std::string> example_ids;
  std::vector<int> labels;
  std::vector<std::array<double, 2>> logits;
};

// Scores `split` of `dataset` with `bundle`.
MemberLogits member_logits(const SirenBundle& bundle, const PooledDataset& dataset, Split split,
                           std::string name, std::string bundle_digest = {});

struct StackedInputs {
  Matrix x;  // one row per example: member 0 (safe, harmful), member 1 ...
  std::vector<int> labels;
  std::vector<std::string> example_ids;
};

// Aligns members on the first member's example order. Throws kMisaligned
// listing the ids that are missing from some member, and
// kInvalidArgument when a shared id carries different labels.
StackedInputs stack_inputs(const std::vector<MemberLogits>& members);

struct EnsembleConfig {
  std::size_t hidden_width = 16;
  double dropout = 0.2;
  OptimizerConfig optimizer;
  // Share of the meta training rows held back for early stopping.
  double stop_fraction = 0.2;
};

struct StackedEnsemble {
  std::vector<std::string> member_names;
  std::vector<std::string> member_digests;
  MlpModel meta;
  nlohmann::json training_meta = nlohmann::json::object();
  std::uint32_t format_version = kEnsembleFormatVersion;

  std::size_t members() const { return member_names.size(); }
};

// Needs at least two members (kInvalidArgument otherwise).
StackedEnsemble stack_train(const std::vector<MemberLogits>& members,
                            const EnsembleConfig& config = {});

// `logits[m]` belongs to member m in the ensemble's stored order.
double stack_predict(const StackedEnsemble& ensemble,
                     std::span<const std::array<double, 2>> logits);
std::vector<double> stack_predict(const StackedEnsemble& ensemble, const StackedInputs& inputs);

std::vector<char> encode_ensemble(const StackedEnsemble& ensemble);
StackedEnsemble decode_ensemble(std::span<const char> bytes);
void save_ensemble(const StackedEnsemble& ensemble, const std::filesystem::path& path);
StackedEnsemble load_ensemble(const std::filesystem::path& path);

// Digest of a bundle file as stored in the ensemble.
std::string bundle_file_digest(const std::filesystem::path& path);

// Throws kDigestMismatch when a bundle file differs from the one trained with.
void verify_members(const StackedEnsemble& ensemble,
                    const std::vector<std::filesystem::path>& bundle_paths);

}  // namespace siren
