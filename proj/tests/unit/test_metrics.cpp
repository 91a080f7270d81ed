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

#include <random>

#include <doctest.h>

#include "siren/metrics.hpp"

using namespace siren;

namespace {

// Per-class F1 from a direct count over the pairs.
double count_f1(const std::vector<int>& p, const std::vector<int>& y, int c) {
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    tp += p[i] == c && y[i] == c;
    fp += p[i] == c && y[i] != c;
    fn += p[i] != c && y[i] == c;
  }
  return tp + fp + fn == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("hand case") {
  const std::vector<int> y{1, 1, 0, 0}, p{1, 0, 0, 0};
  CHECK(macro_f1(p, y) == doctest::Approx(11.0 / 15.0).epsilon(1e-15));
  const auto pr = precision_recall(p, y, 1);
  CHECK(pr.precision == 1.0);
  CHECK(pr.recall == 0.5);
}

TEST_CASE("degenerate ratios report zero and flag it") {
  const std::vector<int> y{0, 0}, p{0, 0};
  const auto pr = precision_recall(p, y, 1);
  CHECK(pr.precision == 0.0);
  CHECK(pr.precision_degenerate);
  CHECK(pr.recall_degenerate);
  CHECK(macro_f1(p, y) == doctest::Approx(0.5));
}

TEST_CASE("agrees with a counting oracle") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<int> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(rng() & 1);
      y[i] = static_cast<int>(rng() & 1);
    }
    CHECK(macro_f1(p, y) == (count_f1(p, y, 0) + count_f1(p, y, 1)) / 2.0);
    const auto c = confusion(p, y, 1);
    CHECK(c.total() == n);
  }
}

TEST_CASE("length mismatch throws") {
  const std::vector<int> a{1}, b{1, 0};
  CHECK_THROWS(macro_f1(a, b));
}

}
