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

// Feedforward harmfulness classifier: Linear -> ReLU -> Dropout blocks ending
// in a Linear layer with two logits (safe, harmful).

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "siren/aggregate.hpp"
#include "siren/matrix.hpp"

namespace siren {

struct MlpArchitecture {
  std::vector<std::pair<std::size_t, std::size_t>> layer_dims;  // (d_in, d_out)
  double dropout_rate = 0.0;

  // `hidden_layers` ReLU blocks of equal width followed by the output layer.
  static MlpArchitecture make(std::size_t input_width, std::size_t hidden_layers,
                              std::size_t hidden_width, double dropout_rate);

  void validate() const;
  std::size_t input_width() const { return layer_dims.front().first; }

  bool operator==(const MlpArchitecture&) const = default;
};

// Weights are stored (d_in x d_out) so a batch is computed as X * W + b.
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

struct TrainingMeta {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  double best_val_loss = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const TrainingMeta&) const = default;
};

struct MlpModel {
  MlpArchitecture architecture;
  std::vector<DenseLayer> layers;
  TrainingMeta meta;

  // Uniform(-1/sqrt(d_in), 1/sqrt(d_in)) for weights and biases.
  static MlpModel initialize(const MlpArchitecture& architecture, std::uint64_t seed);
  static MlpModel zeros(const MlpArchitecture& architecture);

  std::size_t input_width() const { return architecture.input_width(); }
  std::size_t parameter_count() const;

  bool operator==(const MlpModel&) const = default;
};

struct MlpOutput {
  std::array<double, 2> logits{};
  double prob_harmful = 0.5;
};

// Inference (dropout disabled). Throws kWidthMismatch.
MlpOutput mlp_forward(const MlpModel& model, std::span<const double> z);

// Batched inference; row i of the result is logits for row i of `z`. Each
// row's result is independent of the batch it is scored in.
Matrix mlp_logits(const MlpModel& model, const Matrix& z);
std::vector<double> mlp_prob_harmful(const MlpModel& model, const Matrix& z);
std::vector<int> mlp_predict(const MlpModel& model, const Matrix& z);

double prob_harmful_from_logits(double safe_logit, double harmful_logit);

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> bias;
  double loss = 0.0;  // mean cross-entropy of the batch
};

// Exact gradients of the mean batch cross-entropy with dropout disabled.
MlpGradients mlp_gradients(const MlpModel& model, const Matrix& x, std::span<const int> y);

// Mean cross-entropy of the batch with dropout disabled.
double mlp_loss(const MlpModel& model, const Matrix& x, std::span<const int> y);

struct OptimizerConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  int max_epochs = 200;
  int patience = 5;  // validation checks (one per epoch) without improvement
  // Equal validation F1 counts as an improvement when validation loss drops
  // by more than this.
  double loss_tiebreak = 1e-4;
  // Stop as soon as validation F1 reaches 1. Used for cross-validation
  // scoring, where only F1 is read.
  bool stop_on_perfect = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
};

// Adam on mini-batches with early stopping on validation macro F1; returns
// the best checkpoint. Throws kSingleClass, kDiverged.
MlpModel mlp_train(const Matrix& train_x, std::span<const int> train_y, const Matrix& val_x,
                   std::span<const int> val_y, const MlpArchitecture& architecture,
                   const OptimizerConfig& optimizer);

// Uses the train split for fitting and the validation split for stopping.
MlpModel mlp_train(const FeatureMatrix& data, const MlpArchitecture& architecture,
                   const OptimizerConfig& optimizer);

}  // namespace siren
