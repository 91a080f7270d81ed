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
#include <tuple>

#include <doctest.h>

#include "siren/kernels.hpp"
#include "test_util.hpp"

using namespace siren;
using siren::testing::random_matrix;

namespace {

Matrix naive(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      out(i, j) = static_cast<double>(s);
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) d = std::max(d, std::abs(a.data()[i] - b.data()[i]));
  return d;
}

const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> kShapes{
    {1, 1, 1}, {3, 5, 7}, {4, 16, 16}, {17, 33, 65}, {64, 257, 31}, {70, 300, 530}, {5, 600, 3}};

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("matmul family matches the serial reference bit for bit") {
  std::mt19937_64 rng(1);
  for (const auto& [m, k, n] : kShapes) {
    CAPTURE(m);
    CAPTURE(k);
    CAPTURE(n);
    const Matrix a = random_matrix(m, k, rng), b = random_matrix(k, n, rng);
    Matrix fast, ref;
    kernels::matmul(a, b, fast);
    reference::matmul(a, b, ref);
    CHECK(fast == ref);
    CHECK(max_abs_diff(fast, naive(a, b)) < 1e-10 * static_cast<double>(k));

    const Matrix at = transpose(a);
    kernels::matmul_at_b(at, b, fast);
    reference::matmul_at_b(at, b, ref);
    CHECK(fast == ref);
    CHECK(max_abs_diff(fast, naive(a, b)) < 1e-10 * static_cast<double>(k));

    const Matrix bt = transpose(b);
    kernels::matmul_a_bt(a, bt, fast);
    reference::matmul_a_bt(a, bt, ref);
    CHECK(fast == ref);
  }
}

TEST_CASE("row results do not depend on batch size") {
  std::mt19937_64 rng(2);
  const Matrix a = random_matrix(37, 129, rng), b = random_matrix(129, 40, rng);
  Matrix full, one;
  kernels::matmul(a, b, full);
  for (std::size_t i : {0ul, 5ul, 36ul}) {
    Matrix row(1, a.cols());
    std::copy(a.row(i).begin(), a.row(i).end(), row.row(0).begin());
    kernels::matmul(row, b, one);
    for (std::size_t j = 0; j < b.cols(); ++j) CHECK(one(0, j) == full(i, j));
  }
}

TEST_CASE("vector kernels match the reference") {
  std::mt19937_64 rng(3);
  const Matrix m = random_matrix(23, 11, rng);
  std::vector<double> w(23), v(11), out_f(11), out_r(11);
  for (double& x : w) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  for (double& x : v) x = std::uniform_real_distribution<double>(-1, 1)(rng);
  kernels::weighted_column_sums(m, w, 3.0, out_f);
  reference::weighted_column_sums(m, w, 3.0, out_r);
  CHECK(out_f == out_r);

  std::vector<double> mv_f(23), mv_r(23);
  kernels::matvec(m, v, 0.5, mv_f);
  reference::matvec(m, v, 0.5, mv_r);
  CHECK(mv_f == mv_r);

  std::vector<float> rows(9 * 4);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<float>(i);
  std::vector<double> cm_f(4), cm_r(4);
  kernels::column_means(rows, 4, cm_f);
  reference::column_means(rows, 4, cm_r);
  CHECK(cm_f == cm_r);
  CHECK(cm_f[1] == doctest::Approx(17.0));

  Matrix b1 = m, b2 = m;
  kernels::add_row_bias(b1, v);
  reference::add_row_bias(b2, v);
  CHECK(b1 == b2);
  CHECK(b1(4, 2) == m(4, 2) + v[2]);
}

}
