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

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "siren/activation_store.hpp"
#include "siren/matrix.hpp"
#include "siren/probes.hpp"

namespace siren {

enum class AggregationMode { kAdaptive, kUniform };

std::string to_string(AggregationMode mode);
AggregationMode parse_aggregation_mode(const std::string& s);

struct LayerWeighting {
  AggregationMode mode = AggregationMode::kAdaptive;
  std::vector<double> alpha;  // one per layer, in [0, 1]
  double f_min = 0.0;
  double f_max = 0.0;

  bool operator==(const LayerWeighting&) const = default;
};

// Min-max normalized probe F1; all ones when every layer scores the same.
LayerWeighting compute_layer_weights(std::span<const double> f);
LayerWeighting uniform_weights(std::span<const double> f);
LayerWeighting make_weighting(AggregationMode mode, std::span<const double> f);

// (layer_index, neuron_index) for each slot of z.
using FeatureLayout = std::vector<std::pair<int, std::size_t>>;

struct FeatureVector {
  std::vector<double> z;
  FeatureLayout layout;
};

// Concatenation order of z: retained layers ascending, neurons ascending.
FeatureLayout feature_layout(const SafetySelection& selection);

// Writes z for one record's per-layer vectors into `out` (length = layout
// size). `vectors[l]` is the pooled (or single-token, or prefix) activation
// of layer l + 1 on the raw scale.
void build_features_into(const std::vector<std::vector<double>>& vectors,
                         const SafetySelection& selection,
                         const LayerWeighting& weighting, std::span<double> out);

FeatureVector build_features(const PooledRecord& record, const SafetySelection& selection,
                             const LayerWeighting& weighting);

struct FeatureMatrix {
  Matrix features;
  std::vector<int> labels;
  std::vector<Split> splits;
  std::vector<std::string> example_ids;
  FeatureLayout layout;

  // Rows belonging to `split`, in dataset order.
  FeatureMatrix subset(Split split) const;
};

// Row i is build_features(record i). Parallel across records.
FeatureMatrix build_feature_matrix(const PooledDataset& dataset,
                                   const SafetySelection& selection,
                                   const LayerWeighting& weighting);

namespace reference {
FeatureMatrix build_feature_matrix(const PooledDataset& dataset,
                                   const SafetySelection& selection,
                                   const LayerWeighting& weighting);
}  // namespace reference

}  // namespace siren
