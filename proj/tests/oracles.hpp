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

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "siren/matrix.hpp"

namespace siren::oracle {

// L1 logistic objective written out directly, in long double.
inline double l1_objective(const Matrix& x, const std::vector<int>& y, const std::vector<double>& w,
                           double b, double lambda) {
  long double loss = 0.0L;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    long double m = b;
    for (std::size_t j = 0; j < x.cols(); ++j) m += static_cast<long double>(x(i, j)) * w[j];
    const long double sp = m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
    loss += sp - y[i] * m;
  }
  long double pen = 0.0L;
  for (double v : w) pen += std::fabs(v);
  return static_cast<double>(loss / x.rows() + lambda * pen);
}

// Exhaustive grid search over [-box, box]^(D+1), then repeated grid searches
// on a shrinking box around the incumbent.
inline double grid_minimum(const Matrix& x, const std::vector<int>& y, double lambda, double box,
                           int points = 15, int levels = 12) {
  const std::size_t dims = x.cols() + 1;
  std::vector<double> center(dims, 0.0);
  double half = box;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_p = center;
  for (int level = 0; level < levels; ++level) {
    std::vector<int> idx(dims, 0);
    std::vector<double> p(dims);
    while (true) {
      for (std::size_t d = 0; d < dims; ++d) {
        p[d] = std::clamp(center[d] - half + 2.0 * half * idx[d] / (points - 1), -box, box);
      }
      const std::vector<double> w(p.begin(), p.end() - 1);
      const double f = l1_objective(x, y, w, p.back(), lambda);
      if (f < best) {
        best = f;
        best_p = p;
      }
      std::size_t d = 0;
      while (d < dims && ++idx[d] == points) idx[d++] = 0;
      if (d == dims) break;
    }
    center = best_p;
    half *= 0.35;
  }
  return best;
}

// Sum over k of [2 L (S + k) D_h + 2 N] by plain iteration; 0 on overflow.
inline unsigned __int128 guard_flops_loop(std::uint64_t L, std::uint64_t S, std::uint64_t Dh,
                                          std::uint64_t N, std::uint64_t K) {
  unsigned __int128 total = 0;
  for (std::uint64_t k = 0; k < K; ++k) {
    total += static_cast<unsigned __int128>(2) * L * (S + k) * Dh + static_cast<unsigned __int128>(2) * N;
  }
  return total;
}

inline unsigned __int128 mlp_flops_loop(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& dims) {
  unsigned __int128 total = 0;
  for (const auto& [a, b] : dims) {
    for (std::uint64_t i = 0; i < a; ++i) total += 2 * static_cast<unsigned __int128>(b);
  }
  return total;
}

// Per-class F1 from counts over the pairs, averaged over both classes.
inline double macro_f1(const std::vector<int>& p, const std::vector<int>& y) {
  double sum = 0.0;
  for (int c = 0; c < 2; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      tp += p[i] == c && y[i] == c;
      fp += p[i] == c && y[i] != c;
      fn += p[i] != c && y[i] == c;
    }
    sum += tp + fp + fn == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return sum / 2.0;
}

}  // namespace siren::oracle

#include <span>

#include "siren/mlp.hpp"

namespace siren::oracle {

// Largest relative gap between analytic gradients and central differences of
// mlp_loss over every parameter. Gaps are divided by max(|a|, |n|, floor).
inline double gradient_check(const MlpModel& model, const Matrix& x, std::span<const int> y,
                             double h = 1e-5, double floor = 1e-7) {
  const auto g = mlp_gradients(model, x, y);
  MlpModel m = model;
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = mlp_loss(m, x, y);
    param = saved - h;
    const double down = mlp_loss(m, x, y);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  };
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto w = m.layers[l].weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) probe(w[i], g.weights[l].data()[i]);
    for (std::size_t j = 0; j < m.layers[l].bias.size(); ++j) probe(m.layers[l].bias[j], g.bias[l][j]);
  }
  return worst;
}

}  // namespace siren::oracle
