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

// Layer-wise sparse linear probes and safety-neuron selection.
//
// Each probe is an L1-regularized logistic regression on standardized pooled
// activations. Its objective on N training rows is
//
//   mean_i [softplus(x_i . w + b) - y_i (x_i . w + b)] + lambda * |w|_1,
//
// with lambda = 1 / (C * N) so that C acts as an inverse regularization
// strength on the summed loss. The bias is not penalized.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "siren/activation_store.hpp"
#include "siren/matrix.hpp"

namespace siren {

struct ProbeConfig {
  std::vector<double> c_grid{100.0, 200.0, 500.0, 1000.0};
  int max_iters = 2000;
  double tol = 1e-6;
  // Validation checks without improvement before stopping; 0 disables early
  // stopping and runs the solver to `tol` or `max_iters`.
  int patience = 5;
  std::uint64_t seed = 42;
};

void validate(const ProbeConfig& config);

// Per-feature affine map fit on the training split: (x - mean) / scale.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
  double apply(std::size_t j, double v) const { return (v - mean[j]) / scale[j]; }

  bool operator==(const Standardizer&) const = default;
};

struct L1LogisticOptions {
  double lambda = 0.0;
  int max_iters = 2000;
  double tol = 1e-6;
  int patience = 0;
};

struct L1LogisticFit {
  std::vector<double> weights;
  double bias = 0.0;
  double objective = 0.0;  // at the returned iterate
  double val_f1 = 0.0;     // at the returned iterate, when validation was given
  int iterations = 0;
  bool converged = false;
  // Objective after every accepted step, starting with the initial point.
  std::vector<double> objective_trace;
};

double l1_logistic_objective(const Matrix& x, std::span<const int> y,
                             std::span<const double> w, double b, double lambda);

// Proximal gradient with backtracking. When `val_x` is non-empty and
// `patience` > 0, validation macro F1 is checked after every step and the best
// iterate is returned.
L1LogisticFit fit_l1_logistic(const Matrix& x, std::span<const int> y,
                              const L1LogisticOptions& options,
                              const Matrix& val_x = {}, std::span<const int> val_y = {});

struct ProbeModel {
  int layer_index = 0;
  std::vector<double> weights;  // standardized scale
  double bias = 0.0;
  double val_f1 = 0.0;
  double chosen_c = 0.0;
  bool converged = false;
  int iterations = 0;
  Standardizer standardizer;
};

// Trains one probe per C in the grid and keeps the best by validation macro
// F1 (ties go to the smaller C). Inputs are raw pooled vectors.
ProbeModel train_probe(const Matrix& train_x, std::span<const int> train_y,
                       const Matrix& val_x, std::span<const int> val_y,
                       const ProbeConfig& config, int layer_index = 1);

// One probe per layer; parallel over (layer, C) jobs.
std::vector<ProbeModel> train_all_probes(const PooledDataset& dataset,
                                         const ProbeConfig& config);

namespace reference {
std::vector<ProbeModel> train_all_probes(const PooledDataset& dataset,
                                         const ProbeConfig& config);
}  // namespace reference

// |w_j| / sum_k |w_k|. Throws kDegenerateProbe on an all-zero vector.
std::vector<double> normalize_magnitudes(std::span<const double> weights);

// Minimal top-ranked set whose normalized mass reaches eta, sorted ascending.
std::vector<std::size_t> select_neurons(std::span<const double> normalized, double eta);

struct LayerSelection {
  int layer_index = 0;
  std::vector<std::size_t> neurons;  // S_l, ascending
  std::vector<double> normalized;    // empty when dropped
  double val_f1 = 0.0;
  bool dropped = false;  // probe had all-zero weights
  Standardizer standardizer;

  bool operator==(const LayerSelection&) const = default;
};

struct SafetySelection {
  double eta = 0.8;
  std::vector<LayerSelection> layers;

  std::size_t feature_count() const;
  std::vector<double> val_f1() const;

  bool operator==(const SafetySelection&) const = default;
};

SafetySelection select_safety_neurons(const std::vector<ProbeModel>& probes, double eta);

inline constexpr int kProbeDocumentVersion = 1;

nlohmann::json probes_to_json(const std::vector<ProbeModel>& probes);
std::vector<ProbeModel> probes_from_json(const nlohmann::json& doc);
nlohmann::json selection_to_json(const SafetySelection& selection);
SafetySelection selection_from_json(const nlohmann::json& doc);

}  // namespace siren
