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


// Times each OpenMP kernel against its serial reference and checks that the
// two agree bit for bit. Usage: siren_bench [repeats]

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "siren/kernels.hpp"
#include "siren/matrix.hpp"

namespace {

using siren::Matrix;

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) m(i, j) = nd(rng);
  }
  return m;
}

double best_ms(const std::function<void()>& f, int repeats) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

bool same(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin());
}

int mismatches = 0;

void report(const char* name, double fast, double ref, bool equal) {
  mismatches += equal ? 0 : 1;
  std::printf("%-22s kernel %9.3f ms  reference %9.3f ms  speedup %6.2fx  %s\n", name, fast, ref, ref / fast,
              equal ? "identical" : "MISMATCH");
}

std::span<const double> flat(const Matrix& m) { return m.data(); }

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
  std::mt19937_64 rng(1);
  std::printf("threads: %d\n", siren::kernel_threads());

  for (const auto [m, k, n] : {std::array<std::size_t, 3>{256, 256, 256}, {2000, 64, 512}, {512, 1024, 2}}) {
    std::printf("-- m=%zu k=%zu n=%zu\n", m, k, n);
    const Matrix a = random_matrix(m, k, rng), b = random_matrix(k, n, rng);
    const Matrix at = random_matrix(k, m, rng), bt = random_matrix(n, k, rng);
    Matrix o1(m, n), o2(m, n);

    double f = best_ms([&] { siren::kernels::matmul(a, b, o1); }, repeats);
    double r = best_ms([&] { siren::reference::matmul(a, b, o2); }, repeats);
    report("matmul", f, r, same(flat(o1), flat(o2)));

    f = best_ms([&] { siren::kernels::matmul_at_b(at, b, o1); }, repeats);
    r = best_ms([&] { siren::reference::matmul_at_b(at, b, o2); }, repeats);
    report("matmul_at_b", f, r, same(flat(o1), flat(o2)));

    f = best_ms([&] { siren::kernels::matmul_a_bt(a, bt, o1); }, repeats);
    r = best_ms([&] { siren::reference::matmul_a_bt(a, bt, o2); }, repeats);
    report("matmul_a_bt", f, r, same(flat(o1), flat(o2)));

    std::vector<double> w(m), v1(k), v2(k);
    for (double& x : w) x = std::normal_distribution<double>(0, 1)(rng);
    f = best_ms([&] { siren::kernels::weighted_column_sums(a, w, 3.0, v1); }, repeats);
    r = best_ms([&] { siren::reference::weighted_column_sums(a, w, 3.0, v2); }, repeats);
    report("weighted_column_sums", f, r, same(v1, v2));

    std::vector<double> x(k), y1(m), y2(m);
    for (double& e : x) e = std::normal_distribution<double>(0, 1)(rng);
    f = best_ms([&] { siren::kernels::matvec(a, x, 0.5, y1); }, repeats);
    r = best_ms([&] { siren::reference::matvec(a, x, 0.5, y2); }, repeats);
    report("matvec", f, r, same(y1, y2));

    std::vector<float> rows(m * k);
    for (float& e : rows) e = static_cast<float>(std::normal_distribution<double>(0, 1)(rng));
    f = best_ms([&] { siren::kernels::column_means(rows, k, v1); }, repeats);
    r = best_ms([&] { siren::reference::column_means(rows, k, v2); }, repeats);
    report("column_means", f, r, same(v1, v2));
  }
  return mismatches == 0 ? 0 : 1;
}
