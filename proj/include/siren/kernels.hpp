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

#include <cstddef>
#include <span>

#include "siren/matrix.hpp"

// Dense kernels used by the probe solver, the MLP, and pooling.
//
// Every kernel in `siren::kernels` is OpenMP-parallel over output rows (or
// columns), and every output element is produced by exactly one thread with a
// fixed accumulation order. Results therefore do not depend on the thread
// count or on how many rows are in the batch. `siren::reference` holds plain
// serial versions with the same contracts; they are kept for tests and for
// the benchmark target.
namespace siren {

namespace kernels {

// out = a * b, shapes (m x k) * (k x n).
void matmul(const Matrix& a, const Matrix& b, Matrix& out);

// out = a^T * b, shapes (k x m)^T * (k x n).
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out);

// out = a * b^T, shapes (m x k) * (n x k)^T.
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out);

// Adds `bias` to every row of `m`.
void add_row_bias(Matrix& m, std::span<const double> bias);

// out[j] = mean over rows of `rows` (row-major, `cols` wide).
void column_means(std::span<const float> rows, std::size_t cols,
                  std::span<double> out);

// out[j] = sum_i m(i, j) * w[i] / scale.
void weighted_column_sums(const Matrix& m, std::span<const double> w,
                          double scale, std::span<double> out);

// out[i] = dot(m.row(i), w) + bias.
void matvec(const Matrix& m, std::span<const double> w, double bias,
            std::span<double> out);

}  // namespace kernels

namespace reference {

void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out);
void add_row_bias(Matrix& m, std::span<const double> bias);
void column_means(std::span<const float> rows, std::size_t cols,
                  std::span<double> out);
void weighted_column_sums(const Matrix& m, std::span<const double> w,
                          double scale, std::span<double> out);
void matvec(const Matrix& m, std::span<const double> w, double bias,
            std::span<double> out);

}  // namespace reference

// Number of OpenMP threads kernels will use (1 when built without OpenMP).
int kernel_threads();

}  // namespace siren
