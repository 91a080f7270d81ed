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

#include <algorithm>
#include <random>

#include <doctest.h>

#include "siren/aggregate.hpp"
#include "siren/error.hpp"
#include "test_util.hpp"

using namespace siren;

namespace {

SafetySelection random_selection(const std::vector<std::size_t>& widths, std::mt19937_64& rng) {
  SafetySelection sel;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t l = 0; l < widths.size(); ++l) {
    LayerSelection ls;
    ls.layer_index = static_cast<int>(l + 1);
    ls.val_f1 = u(rng);
    ls.dropped = rng() % 7 == 0;
    for (std::size_t j = 0; j < widths[l]; ++j) {
      ls.standardizer.mean.push_back(u(rng) - 0.5);
      ls.standardizer.scale.push_back(0.5 + u(rng));
      if (!ls.dropped && rng() % 3 == 0) ls.neurons.push_back(j);
    }
    if (!ls.dropped && ls.neurons.empty()) ls.neurons.push_back(0);
    sel.layers.push_back(std::move(ls));
  }
  return sel;
}

}  // namespace

TEST_SUITE("aggregate") {

TEST_CASE("adaptive weights are min-max normalized F1") {
  const std::vector<double> f{0.6, 0.9, 0.7, 0.6};
  const auto w = compute_layer_weights(f);
  CHECK(w.alpha[0] == 0.0);
  CHECK(w.alpha[1] == 1.0);
  CHECK(w.alpha[2] == doctest::Approx(1.0 / 3.0));
  CHECK(w.f_min == 0.6);
  CHECK(w.f_max == 0.9);

  const std::vector<double> flat{0.8, 0.8, 0.8};
  CHECK(compute_layer_weights(flat).alpha == std::vector<double>{1, 1, 1});
  CHECK(uniform_weights(f).alpha == std::vector<double>(4, 1.0));
  CHECK_THROWS_AS(compute_layer_weights(std::vector<double>{}), Error);
  CHECK_THROWS_AS(compute_layer_weights(std::vector<double>{1.5}), Error);
}

TEST_CASE("argmax of alpha is the argmax of F1") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> f(1 + rng() % 12);
    for (double& v : f) v = u(rng);
    const auto w = compute_layer_weights(f);
    CHECK(std::max_element(w.alpha.begin(), w.alpha.end()) - w.alpha.begin() ==
          std::max_element(f.begin(), f.end()) - f.begin());
    for (double a : w.alpha) CHECK((a >= 0.0 && a <= 1.0));
  }
}

TEST_CASE("features are alpha times the standardized selected neurons") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::size_t> widths(1 + rng() % 5);
    for (auto& w : widths) w = 1 + rng() % 9;
    auto sel = random_selection(widths, rng);
    const auto weighting = compute_layer_weights(sel.val_f1());
    PooledRecord rec;
    for (std::size_t w : widths) {
      std::vector<double> v(w);
      for (double& x : v) x = std::normal_distribution<double>(0, 1)(rng);
      rec.vectors.push_back(v);
    }
    std::size_t expected = 0;
    for (const auto& l : sel.layers) expected += l.dropped ? 0 : l.neurons.size();
    if (expected == 0) {
      CHECK_THROWS_AS(build_features(rec, sel, weighting), Error);
      continue;
    }
    const auto fv = build_features(rec, sel, weighting);
    REQUIRE(fv.z.size() == expected);
    CHECK(sel.feature_count() == expected);
    std::size_t k = 0;
    for (std::size_t l = 0; l < sel.layers.size(); ++l) {
      const auto& ls = sel.layers[l];
      if (ls.dropped) continue;
      for (std::size_t n : ls.neurons) {
        CHECK(fv.layout[k] == std::make_pair(ls.layer_index, n));
        const double want = weighting.alpha[l] * (rec.vectors[l][n] - ls.standardizer.mean[n]) /
                            ls.standardizer.scale[n];
        CHECK(fv.z[k] == doctest::Approx(want).epsilon(1e-14));
        ++k;
      }
    }
  }
}

TEST_CASE("feature matrix matches the serial reference") {
  std::mt19937_64 rng(3);
  const auto ds = siren::testing::random_dataset(30, {6, 4, 5}, 1, 4, true);
  const auto pooled = pool_dataset(ds);
  auto sel = random_selection({6, 4, 5}, rng);
  sel.layers[0].dropped = false;
  sel.layers[0].neurons = {0, 5};
  const auto weighting = compute_layer_weights(sel.val_f1());
  const auto a = build_feature_matrix(pooled, sel, weighting);
  const auto b = reference::build_feature_matrix(pooled, sel, weighting);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.subset(Split::kValidation).features.rows() == 6);
}

TEST_CASE("out of range neurons are rejected") {
  std::mt19937_64 rng(4);
  auto sel = random_selection({3}, rng);
  sel.layers[0].dropped = false;
  sel.layers[0].neurons = {7};
  PooledRecord rec;
  rec.vectors = {{1.0, 2.0, 3.0}};
  CHECK_THROWS_AS(build_features(rec, sel, uniform_weights(sel.val_f1())), Error);
}

}
