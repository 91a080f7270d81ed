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

// Activation container: per-example, per-layer token matrices as written by
// an extractor, plus the pooled (mean over tokens) view used for probing.
//
// On disk (all integers little-endian):
//   "SIRNACT1" | u32 format_version | u32 manifest_len | manifest (UTF-8 JSON)
//   | u64 record_count | records...
// Each record:
//   u32 id_len | id | u8 label | u8 split | u32 layer_count | blocks...
// Each block:
//   u32 layer_index | u32 T | u32 D | T*D float32, row-major.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "siren/matrix.hpp"

namespace siren {

inline constexpr char kActivationMagic[] = "SIRNACT1";
inline constexpr std::uint32_t kActivationFormatVersion = 1;

enum class ActivationKind { kResidualStream, kFfnActivation };

enum class Split : std::uint8_t { kTrain = 0, kValidation = 1, kTest = 2 };

std::string to_string(ActivationKind kind);
std::string to_string(Split split);
ActivationKind parse_activation_kind(const std::string& s);

// One layer's token-level representation, T rows of D floats.
struct LayerActivations {
  int layer_index = 0;  // 1-based transformer block index
  std::size_t tokens = 0;
  std::size_t width = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t t) const {
    return {values.data() + t * width, width};
  }

  bool operator==(const LayerActivations&) const = default;
};

struct ExampleRecord {
  std::string example_id;
  int label = 0;  // 0 = safe, 1 = harmful
  Split split = Split::kTrain;
  std::vector<LayerActivations> layers;

  std::size_t tokens() const { return layers.empty() ? 0 : layers.front().tokens; }

  bool operator==(const ExampleRecord&) const = default;
};

struct SplitFractions {
  double train = 0.8;
  double validation = 0.2;
  double test = 0.0;

  bool operator==(const SplitFractions&) const = default;
};

struct DatasetManifest {
  std::string dataset_name;
  std::string backbone_name;
  int num_layers = 0;
  std::vector<std::size_t> feature_widths;
  std::size_t num_examples = 0;
  ActivationKind kind = ActivationKind::kResidualStream;
  // Token matrices were reduced to their mean (stored as T = 1) before write.
  bool pooled_only = false;
  std::uint32_t format_version = kActivationFormatVersion;
  SplitFractions split_fractions;
  // Extractor's note on which token positions were kept (special tokens,
  // templates, padding).
  std::string token_policy;

  bool operator==(const DatasetManifest&) const = default;
};

struct ActivationDataset {
  DatasetManifest manifest;
  std::vector<ExampleRecord> records;

  bool operator==(const ActivationDataset&) const = default;
};

struct PooledRecord {
  std::string example_id;
  int label = 0;
  Split split = Split::kTrain;
  std::vector<std::vector<double>> vectors;  // one per layer, 1..L

  bool operator==(const PooledRecord&) const = default;
};

struct PooledDataset {
  DatasetManifest manifest;
  std::vector<PooledRecord> records;
};

// Column means of a T x D row-major token matrix. Throws kEmptySequence.
std::vector<double> mean_pool(std::span<const float> tokens, std::size_t width);
std::vector<double> mean_pool(const LayerActivations& layer);

// Builds a manifest describing `records` (widths, counts, split fractions).
DatasetManifest describe(const std::vector<ExampleRecord>& records,
                         std::string dataset_name, std::string backbone_name,
                         ActivationKind kind, bool pooled_only);

// Checks every container invariant; throws kShapeMismatch / kInvalidArgument.
void validate(const ActivationDataset& dataset);

void write_dataset(const ActivationDataset& dataset,
                   const std::filesystem::path& path);
ActivationDataset read_dataset(const std::filesystem::path& path);

// Serialized container bytes, exposed for tests that corrupt them.
std::vector<char> encode_dataset(const ActivationDataset& dataset);
ActivationDataset decode_dataset(std::span<const char> bytes);

// One PooledRecord per example, in order. Parallel across examples.
PooledDataset pool_dataset(const ActivationDataset& dataset);

// Throws kPooledOnly when the dataset no longer carries token matrices.
void require_token_level(const DatasetManifest& manifest, const char* operation);

// Largest relative deviation between `pooled` and a fresh pool of `dataset`;
// throws kShapeMismatch if it exceeds `rel_tol`.
double check_pooled_consistency(const ActivationDataset& dataset,
                                const PooledDataset& pooled,
                                double rel_tol = 1e-6);

// Rows of one layer restricted to one split, plus labels.
struct LayerSlice {
  Matrix features;
  std::vector<int> labels;
};
LayerSlice layer_slice(const PooledDataset& dataset, std::size_t layer_pos,
                       Split split);

namespace reference {
PooledDataset pool_dataset(const ActivationDataset& dataset);
}  // namespace reference

}  // namespace siren
