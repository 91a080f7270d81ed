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

// Seeded random search over MLP shape, dropout and learning rate, scored by
// stratified k-fold cross-validation on the training split.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "siren/aggregate.hpp"
#include "siren/mlp.hpp"

namespace siren {

struct SearchSpace {
  std::vector<int> hidden_layers{2, 3};
  std::size_t hidden_min = 64;  // log-uniform
  std::size_t hidden_max = 2048;
  double dropout_min = 0.2;
  double dropout_max = 0.5;
  double lr_min = 1e-4;  // log-uniform
  double lr_max = 1e-2;
  int trials = 32;
  int cv_folds = 3;
  std::uint64_t seed = 42;

  void validate() const;
};

struct TrialConfig {
  int hidden_layers = 2;
  std::size_t hidden_width = 64;
  double dropout = 0.2;
  double learning_rate = 1e-3;

  MlpArchitecture architecture(std::size_t input_width) const;
  OptimizerConfig optimizer(const OptimizerConfig& base) const;

  bool operator==(const TrialConfig&) const = default;
};

struct TrialResult {
  TrialConfig config;
  std::vector<double> fold_scores;
  double cv_score = 0.0;
  std::string failure;  // non-empty when the trial diverged
};

struct SearchResult {
  std::size_t best_trial = 0;
  TrialConfig best;
  double best_cv_score = 0.0;
  std::vector<TrialResult> trials;
  MlpModel model;  // best config retrained on the full training split
};

std::vector<TrialConfig> sample_trials(const SearchSpace& space);

// Fold id per row; each fold keeps the class balance of `labels`.
std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed);

// Mean held-out macro F1 over the folds for one configuration.
TrialResult cross_validate(const Matrix& x, std::span<const int> y, const TrialConfig& config,
                           int folds, const OptimizerConfig& base, std::uint64_t fold_seed);

// Trials and folds run concurrently. Ties keep the earlier trial. Throws
// kAllTrialsFailed listing each trial's failure.
SearchResult hyperparameter_search(const FeatureMatrix& data, const SearchSpace& space,
                                   const OptimizerConfig& base = {});

}  // namespace siren
