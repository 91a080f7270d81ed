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

#include <cmath>
#include <random>

#include <doctest.h>

#include "../oracles.hpp"
#include "siren/bundle.hpp"
#include "siren/binary_io.hpp"
#include "siren/error.hpp"
#include "siren/mlp.hpp"
#include "siren/mlp_codec.hpp"
#include "siren/search.hpp"
#include "test_util.hpp"

using namespace siren;
using siren::testing::random_matrix;

namespace {

// Two Gaussian blobs separated along the first feature.
void blobs(std::size_t n, std::size_t d, std::mt19937_64& rng, Matrix& x, std::vector<int>& y) {
  x = random_matrix(n, d, rng);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    x(i, 0) += y[i] ? 1.5 : -1.5;
  }
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("architecture") {
  const auto a = MlpArchitecture::make(10, 2, 4, 0.3);
  CHECK(a.layer_dims == std::vector<std::pair<std::size_t, std::size_t>>{{10, 4}, {4, 4}, {4, 2}});
  CHECK(MlpModel::initialize(a, 1).parameter_count() == 10 * 4 + 4 + 4 * 4 + 4 + 4 * 2 + 2);
  CHECK_THROWS_AS(MlpArchitecture::make(10, 1, 4, 1.0).validate(), Error);
}

TEST_CASE("forward pass matches a hand computation") {
  auto m = MlpModel::zeros(MlpArchitecture::make(2, 1, 2, 0.0));
  m.layers[0].weights(0, 0) = 1.0;
  m.layers[0].weights(1, 1) = -1.0;
  m.layers[0].bias = {0.5, 0.0};
  m.layers[1].weights(0, 1) = 2.0;
  m.layers[1].weights(1, 0) = 1.0;
  m.layers[1].bias = {0.0, -1.0};
  // hidden = relu([1 + 0.5, -3]) = [1.5, 0]; logits = [0, 3 - 1].
  const std::vector<double> z{1.0, 3.0};
  const auto out = mlp_forward(m, z);
  CHECK(out.logits[0] == 0.0);
  CHECK(out.logits[1] == 2.0);
  CHECK(out.prob_harmful == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
  CHECK(prob_harmful_from_logits(1000.0, -1000.0) == 0.0);
  CHECK(prob_harmful_from_logits(-1000.0, 1000.0) == 1.0);
  CHECK_THROWS_AS(mlp_forward(m, std::vector<double>{1.0}), Error);
}

TEST_CASE("analytic gradients match central differences") {
  std::mt19937_64 rng(11);
  const auto m = MlpModel::initialize(MlpArchitecture::make(6, 2, 5, 0.3), 3);
  for (int batch = 0; batch < 3; ++batch) {
    const Matrix x = random_matrix(8, 6, rng);
    std::vector<int> y(8);
    for (int& v : y) v = static_cast<int>(rng() & 1);
    CHECK(oracle::gradient_check(m, x, y) < 1e-4);
  }
}

TEST_CASE("rows are scored independently of the batch") {
  std::mt19937_64 rng(12);
  const auto m = MlpModel::initialize(MlpArchitecture::make(9, 2, 33, 0.0), 5);
  const Matrix x = random_matrix(50, 9, rng);
  const auto all = mlp_logits(m, x);
  for (std::size_t i : {0ul, 17ul, 49ul}) {
    const auto one = mlp_forward(m, x.row(i));
    CHECK(one.logits[0] == all(i, 0));
    CHECK(one.logits[1] == all(i, 1));
  }
}

TEST_CASE("training separates blobs and is deterministic") {
  std::mt19937_64 rng(13);
  Matrix xtr, xva;
  std::vector<int> ytr, yva;
  blobs(300, 4, rng, xtr, ytr);
  blobs(100, 4, rng, xva, yva);
  OptimizerConfig opt;
  opt.learning_rate = 5e-3;
  opt.batch_size = 32;
  const auto arch = MlpArchitecture::make(4, 2, 16, 0.2);
  const auto a = mlp_train(xtr, ytr, xva, yva, arch, opt);
  const auto b = mlp_train(xtr, ytr, xva, yva, arch, opt);
  CHECK(a == b);
  CHECK(a.meta.best_val_f1 > 0.8);
  CHECK(mlp_loss(a, xva, yva) < mlp_loss(MlpModel::initialize(arch, opt.seed), xva, yva));

  std::vector<int> one_class(ytr.size(), 1);
  CHECK_THROWS_AS(mlp_train(xtr, one_class, xva, yva, arch, opt), Error);
}

TEST_CASE("codec round trip is exact") {
  auto m = MlpModel::initialize(MlpArchitecture::make(7, 3, 5, 0.25), 9);
  m.meta.epochs_run = 12;
  m.meta.best_val_f1 = 0.875;
  m.meta.best_val_loss = 0.125;
  io::Writer w;
  write_mlp(w, m);
  io::Reader r(w.bytes(), "mlp");
  CHECK(read_mlp(r) == m);
  CHECK(r.remaining() == 0);
}

}

TEST_SUITE("search") {

TEST_CASE("trials are seeded and stay in range") {
  SearchSpace s;
  s.trials = 50;
  const auto a = sample_trials(s), b = sample_trials(s);
  CHECK(a == b);
  s.seed = 7;
  CHECK(sample_trials(s) != a);
  for (const auto& t : a) {
    CHECK((t.hidden_layers == 2 || t.hidden_layers == 3));
    CHECK((t.hidden_width >= 64 && t.hidden_width <= 2048));
    CHECK((t.dropout >= 0.2 && t.dropout <= 0.5));
    CHECK((t.learning_rate >= 1e-4 && t.learning_rate <= 1e-2));
  }
}

TEST_CASE("folds are stratified") {
  std::vector<int> y;
  for (int i = 0; i < 90; ++i) y.push_back(i % 3 == 0);
  const auto f = stratified_folds(y, 3, 1);
  for (int k = 0; k < 3; ++k) {
    int pos = 0, all = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (f[i] != k) continue;
      ++all;
      pos += y[i];
    }
    CHECK(all == 30);
    CHECK(pos == 10);
  }
  CHECK(stratified_folds(y, 3, 1) == f);
}

TEST_CASE("search picks a trial and refits it") {
  std::mt19937_64 rng(14);
  FeatureMatrix fm;
  std::vector<int> y;
  blobs(240, 3, rng, fm.features, y);
  fm.labels = y;
  for (std::size_t i = 0; i < y.size(); ++i) {
    fm.splits.push_back(i % 4 == 3 ? Split::kValidation : Split::kTrain);
    fm.example_ids.push_back(std::to_string(i));
  }
  SearchSpace s;
  s.trials = 3;
  s.hidden_min = 8;
  s.hidden_max = 16;
  OptimizerConfig opt;
  opt.max_epochs = 20;
  const auto r = hyperparameter_search(fm, s, opt);
  REQUIRE(r.trials.size() == 3);
  for (const auto& t : r.trials) CHECK(t.cv_score <= r.best_cv_score);
  CHECK(r.best == r.trials[r.best_trial].config);
  CHECK(r.model.input_width() == 3);
  CHECK(r.model.architecture.layer_dims.front().second == r.best.hidden_width);
}

}
