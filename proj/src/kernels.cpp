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

#include "siren/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace siren {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

// Register tile of kTileRows x kTileCols outputs, cache blocks of kKc depth
// by kNc columns, and kMc rows per parallel task.
constexpr std::size_t kTileRows = 4;
constexpr std::size_t kTileCols = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kNc = 512;
constexpr std::size_t kMc = 64;

// out rows [i0, i0 + R), cols [j, j + C) += a(rows, k0:k1) * strip(k0:k1),
// where `strip` holds C packed columns of b for every k. Every output element
// receives its k terms in ascending order; the block starting at k0 = 0
// overwrites instead of accumulating.
template <std::size_t R, std::size_t C>
inline void tile(const double* a, std::size_t lda, const double* strip, double* out,
                 std::size_t ldo, std::size_t cols, std::size_t k0, std::size_t k1) {
  double acc[R][C];
  for (std::size_t r = 0; r < R; ++r) {
#pragma omp simd
    for (std::size_t c = 0; c < C; ++c) acc[r][c] = (k0 > 0 && c < cols) ? out[r * ldo + c] : 0.0;
  }
  for (std::size_t k = k0; k < k1; ++k) {
    const double* bk = strip + k * C;
    for (std::size_t r = 0; r < R; ++r) {
      const double av = a[r * lda + k];
#pragma omp simd
      for (std::size_t c = 0; c < C; ++c) acc[r][c] = std::fma(av, bk[c], acc[r][c]);
    }
  }
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * ldo + c] = acc[r][c];
  }
}

// b (depth x n) as consecutive kTileCols-wide column strips, each stored
// depth-major and zero padded on the right. With `b_transposed` the source is
// given as its transpose (n x depth). Reuses the calling thread's buffer.
const std::vector<double>& pack_strips(const Matrix& b, bool b_transposed) {
  thread_local std::vector<double> packed;
  const std::size_t depth = b_transposed ? b.cols() : b.rows();
  const std::size_t n = b_transposed ? b.rows() : b.cols();
  const std::size_t strips = (n + kTileCols - 1) / kTileCols;
  packed.resize(strips * depth * kTileCols);
  for (std::size_t s = 0; s < strips; ++s) {
    const std::size_t j0 = s * kTileCols;
    const std::size_t cols = std::min(kTileCols, n - j0);
    double* dst = packed.data() + s * depth * kTileCols;
    if (b_transposed) {
      for (std::size_t k = 0; k < depth; ++k) {
        std::fill(dst + k * kTileCols + cols, dst + (k + 1) * kTileCols, 0.0);
      }
      for (std::size_t c = 0; c < cols; ++c) {
        const double* src = b.row(j0 + c).data();
        for (std::size_t k = 0; k < depth; ++k) dst[k * kTileCols + c] = src[k];
      }
    } else {
      for (std::size_t k = 0; k < depth; ++k) {
        const double* src = b.row(k).data() + j0;
        std::copy(src, src + cols, dst + k * kTileCols);
        std::fill(dst + k * kTileCols + cols, dst + (k + 1) * kTileCols, 0.0);
      }
    }
  }
  return packed;
}

// out = a * b for row-major a (m x depth) and b (depth x n), or a * b^T
// when `b_transposed`.
void gemm(const Matrix& a, const Matrix& b, bool b_transposed, Matrix& out) {
  const std::size_t m = a.rows(), depth = a.cols();
  const std::size_t n = b_transposed ? b.rows() : b.cols();
  if (out.rows() != m || out.cols() != n) out.resize(m, n);
  if (m == 0 || n == 0) return;
  if (depth == 0) {
    std::fill(out.data().begin(), out.data().end(), 0.0);
    return;
  }
  const std::vector<double>& packed = pack_strips(b, b_transposed);
  const double* ad = a.data().data();
  double* od = out.data().data();
  const auto tasks = static_cast<std::ptrdiff_t>((m + kMc - 1) / kMc);
  const bool parallel = m * depth * n >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t task = 0; task < tasks; ++task) {
    const std::size_t i_begin = static_cast<std::size_t>(task) * kMc;
    const std::size_t i_end = std::min(m, i_begin + kMc);
    for (std::size_t j0 = 0; j0 < n; j0 += kNc) {
      const std::size_t j1 = std::min(n, j0 + kNc);
      for (std::size_t k0 = 0; k0 < depth; k0 += kKc) {
        const std::size_t k1 = std::min(depth, k0 + kKc);
        for (std::size_t j = j0; j < j1; j += kTileCols) {
          const std::size_t cols = std::min(kTileCols, j1 - j);
          const double* strip = packed.data() + (j / kTileCols) * depth * kTileCols;
          for (std::size_t i = i_begin; i < i_end; i += kTileRows) {
            const std::size_t rows = std::min(kTileRows, i_end - i);
            double* o = od + i * n + j;
            const double* ai = ad + i * depth;
            if (rows == kTileRows) {
              tile<kTileRows, kTileCols>(ai, depth, strip, o, n, cols, k0, k1);
            } else {
              for (std::size_t r = 0; r < rows; ++r) {
                tile<1, kTileCols>(ai + r * depth, depth, strip, o + r * n, n, cols, k0, k1);
              }
            }
          }
        }
      }
    }
  }
}

// Transpose into the calling thread's scratch matrix, in cache-sized tiles.
const Matrix& transposed(const Matrix& m) {
  thread_local Matrix t;
  t.resize(m.cols(), m.rows());
  constexpr std::size_t kBlock = 32;
  for (std::size_t i0 = 0; i0 < m.rows(); i0 += kBlock) {
    const std::size_t i1 = std::min(m.rows(), i0 + kBlock);
    for (std::size_t j0 = 0; j0 < m.cols(); j0 += kBlock) {
      const std::size_t j1 = std::min(m.cols(), j0 + kBlock);
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t j = j0; j < j1; ++j) t(j, i) = m(i, j);
      }
    }
  }
  return t;
}

}  // namespace

namespace kernels {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.rows());
  gemm(a, b, false, out);
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows() == b.rows());
  gemm(transposed(a), b, false, out);
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols() == b.cols());
  gemm(a, b, true, out);
}

void add_row_bias(Matrix& m, std::span<const double> bias) {
  assert(bias.size() == m.cols());
  const bool parallel = m.rows() * m.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m.rows()); ++i) {
    double* r = m.row(static_cast<std::size_t>(i)).data();
#pragma omp simd
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += bias[j];
  }
}

void column_means(std::span<const float> rows, std::size_t cols,
                  std::span<double> out) {
  assert(cols > 0 && rows.size() % cols == 0 && out.size() == cols);
  const std::size_t t_count = rows.size() / cols;
  const std::size_t chunk = 256;
  const auto chunks = static_cast<std::ptrdiff_t>((cols + chunk - 1) / chunk);
  const bool parallel = rows.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t j0 = static_cast<std::size_t>(c) * chunk;
    const std::size_t j1 = std::min(cols, j0 + chunk);
    for (std::size_t j = j0; j < j1; ++j) out[j] = 0.0;
    for (std::size_t t = 0; t < t_count; ++t) {
      const float* r = rows.data() + t * cols;
#pragma omp simd
      for (std::size_t j = j0; j < j1; ++j) out[j] += static_cast<double>(r[j]);
    }
    const double denom = static_cast<double>(t_count);
    for (std::size_t j = j0; j < j1; ++j) out[j] /= denom;
  }
}

void weighted_column_sums(const Matrix& m, std::span<const double> w,
                          double scale, std::span<double> out) {
  assert(w.size() == m.rows() && out.size() == m.cols());
  const std::size_t cols = m.cols();
  const std::size_t chunk = 256;
  const auto chunks = static_cast<std::ptrdiff_t>((cols + chunk - 1) / chunk);
  const bool parallel = m.rows() * cols >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t j0 = static_cast<std::size_t>(c) * chunk;
    const std::size_t j1 = std::min(cols, j0 + chunk);
    for (std::size_t j = j0; j < j1; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double* r = m.row(i).data();
      const double wi = w[i];
#pragma omp simd
      for (std::size_t j = j0; j < j1; ++j) out[j] = std::fma(r[j], wi, out[j]);
    }
    for (std::size_t j = j0; j < j1; ++j) out[j] /= scale;
  }
}

void matvec(const Matrix& m, std::span<const double> w, double bias,
            std::span<double> out) {
  assert(w.size() == m.cols() && out.size() == m.rows());
  const bool parallel = m.rows() * m.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m.rows()); ++i) {
    const double* r = m.row(static_cast<std::size_t>(i)).data();
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s = std::fma(r[j], w[j], s);
    out[static_cast<std::size_t>(i)] = s + bias;
  }
}

}  // namespace kernels

namespace reference {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  out.resize(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s = std::fma(a(i, k), b(k, j), s);
      out(i, j) = s;
    }
  }
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out) {
  out.resize(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.rows(); ++k) s = std::fma(a(k, i), b(k, j), s);
      out(i, j) = s;
    }
  }
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out) {
  out.resize(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s = std::fma(a(i, k), b(j, k), s);
      out(i, j) = s;
    }
  }
}

void add_row_bias(Matrix& m, std::span<const double> bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) += bias[j];
  }
}

void column_means(std::span<const float> rows, std::size_t cols,
                  std::span<double> out) {
  const std::size_t t_count = rows.size() / cols;
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t t = 0; t < t_count; ++t) s += rows[t * cols + j];
    out[j] = s / static_cast<double>(t_count);
  }
}

void weighted_column_sums(const Matrix& m, std::span<const double> w,
                          double scale, std::span<double> out) {
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) s = std::fma(m(i, j), w[i], s);
    out[j] = s / scale;
  }
}

void matvec(const Matrix& m, std::span<const double> w, double bias,
            std::span<double> out) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) s = std::fma(m(i, j), w[j], s);
    out[i] = s + bias;
  }
}

}  // namespace reference

int kernel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace siren
