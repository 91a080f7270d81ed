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

#include "siren/probes.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include <nlohmann/json.hpp>

#include "siren/error.hpp"
#include "siren/kernels.hpp"
#include "siren/metrics.hpp"

namespace siren {

using nlohmann::json;

void validate(const ProbeConfig& config) {
  if (config.c_grid.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "probe C grid is empty");
  }
  for (double c : config.c_grid) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw Error(ErrorKind::kInvalidArgument, "probe C must be positive");
    }
  }
  if (!(config.tol > 0.0)) throw Error(ErrorKind::kInvalidArgument, "probe tol must be positive");
  if (config.max_iters < 1) throw Error(ErrorKind::kInvalidArgument, "probe max_iters < 1");
  if (config.patience < 0) throw Error(ErrorKind::kInvalidArgument, "probe patience < 0");
}

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += x(i, j);
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  std::vector<double> var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x(i, j) - s.mean[j];
      var[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    // Constant features keep unit scale and standardize to zero.
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
  }
  return out;
}

namespace {

inline double softplus(double m) { return std::max(m, 0.0) + std::log1p(std::exp(-std::abs(m))); }

inline double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

double smooth_loss(std::span<const double> margins, std::span<const int> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) s += softplus(margins[i]) - y[i] * margins[i];
  return s / static_cast<double>(margins.size());
}

double l1_norm(std::span<const double> w) {
  double s = 0.0;
  for (double v : w) s += std::abs(v);
  return s;
}

double validation_f1(const Matrix& x, std::span<const int> y, std::span<const double> w,
                     double b) {
  std::vector<double> m(x.rows());
  kernels::matvec(x, w, b, m);
  std::vector<int> pred(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) pred[i] = m[i] >= 0.0 ? 1 : 0;
  return macro_f1(pred, y);
}

void require_both_classes(std::span<const int> y, const char* what) {
  bool seen[2] = {false, false};
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorKind::kInvalidArgument, "labels must be 0 or 1");
    seen[v] = true;
  }
  if (!seen[0] || !seen[1]) {
    throw Error(ErrorKind::kSingleClass, std::string(what) + " contains a single class");
  }
}

}  // namespace

double l1_logistic_objective(const Matrix& x, std::span<const int> y,
                             std::span<const double> w, double b, double lambda) {
  std::vector<double> m(x.rows());
  kernels::matvec(x, w, b, m);
  return smooth_loss(m, y) + lambda * l1_norm(w);
}

L1LogisticFit fit_l1_logistic(const Matrix& x, std::span<const int> y,
                              const L1LogisticOptions& options, const Matrix& val_x,
                              std::span<const int> val_y) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n == 0 || y.size() != n) {
    throw Error(ErrorKind::kInvalidArgument, "probe: feature rows and labels disagree");
  }
  const double lambda = options.lambda;
  const bool monitor = options.patience > 0 && val_x.rows() > 0;

  std::vector<double> w(d, 0.0);
  const double prior =
      std::clamp(std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n), 1e-6,
                 1.0 - 1e-6);
  double b = std::log(prior / (1.0 - prior));

  std::vector<double> margins(n), residual(n), grad_w(d);
  kernels::matvec(x, w, b, margins);
  double smooth = smooth_loss(margins, y);
  double grad_b = 0.0;
  auto compute_gradient = [&] {
    grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] = sigmoid(margins[i]) - y[i];
      grad_b += residual[i];
    }
    grad_b /= static_cast<double>(n);
    kernels::weighted_column_sums(x, residual, static_cast<double>(n), grad_w);
  };
  compute_gradient();

  L1LogisticFit fit;
  fit.objective_trace.push_back(smooth + lambda * l1_norm(w));

  L1LogisticFit best;
  double best_f1 = -1.0;
  int stale = 0;
  auto snapshot = [&](double f1) {
    best.weights = w;
    best.bias = b;
    best.objective = fit.objective_trace.back();
    best.val_f1 = f1;
    best.iterations = fit.iterations;
  };
  if (monitor) {
    best_f1 = validation_f1(val_x, val_y, w, b);
    snapshot(best_f1);
  }

  // Initial step from the Lipschitz bound of the mean logistic loss.
  double frob = 0.0;
  for (double v : x.data()) frob += v * v;
  double step = 4.0 / (frob / static_cast<double>(n) + 1.0);

  std::vector<double> w_next(d), m_next(n);
  bool stopped_early = false;
  for (int it = 1; it <= options.max_iters; ++it) {
    double b_next = b;
    double smooth_next = 0.0;
    double delta_max = 0.0;
    for (;;) {
      double linear = 0.0, sq = 0.0;
      delta_max = 0.0;
      const double shrink = step * lambda;
      for (std::size_t j = 0; j < d; ++j) {
        const double z = w[j] - step * grad_w[j];
        w_next[j] = z > shrink ? z - shrink : (z < -shrink ? z + shrink : 0.0);
        const double dj = w_next[j] - w[j];
        linear += grad_w[j] * dj;
        sq += dj * dj;
        delta_max = std::max(delta_max, std::abs(dj));
      }
      b_next = b - step * grad_b;
      const double db = b_next - b;
      linear += grad_b * db;
      sq += db * db;
      delta_max = std::max(delta_max, std::abs(db));
      kernels::matvec(x, w_next, b_next, m_next);
      smooth_next = smooth_loss(m_next, y);
      if (smooth_next <= smooth + linear + sq / (2.0 * step) + 1e-15 * std::abs(smooth)) break;
      step *= 0.5;
      if (step < 1e-30) break;
    }
    if (!std::isfinite(smooth_next)) {
      throw Error(ErrorKind::kDiverged, "probe solver produced a non-finite loss");
    }
    w.swap(w_next);
    b = b_next;
    margins.swap(m_next);
    smooth = smooth_next;
    fit.iterations = it;
    fit.objective_trace.push_back(smooth + lambda * l1_norm(w));
    compute_gradient();

    const double mapping_norm = delta_max / step;
    if (mapping_norm < options.tol) {
      fit.converged = true;
      break;
    }
    if (monitor) {
      const double f1 = validation_f1(val_x, val_y, w, b);
      if (f1 > best_f1) {
        best_f1 = f1;
        stale = 0;
        snapshot(f1);
      } else {
        ++stale;
      }
      // A perfect score cannot be beaten, so waiting out the patience
      // window would return the same checkpoint.
      if (stale >= options.patience || best_f1 >= 1.0) {
        stopped_early = true;
        break;
      }
    }
    step *= 1.5;
  }

  if (monitor) {
    // The final iterate may not have been scored yet (convergence exit).
    if (!stopped_early) {
      const double f1 = validation_f1(val_x, val_y, w, b);
      if (f1 > best_f1) {
        best_f1 = f1;
        snapshot(f1);
      }
    }
    best.converged = fit.converged || stopped_early;
    best.objective_trace = std::move(fit.objective_trace);
    return best;
  }
  fit.weights = w;
  fit.bias = b;
  fit.objective = fit.objective_trace.back();
  if (val_x.rows() > 0) fit.val_f1 = validation_f1(val_x, val_y, w, b);
  return fit;
}

namespace {

struct ProbeJob {
  std::size_t layer_pos = 0;
  std::size_t c_pos = 0;
};

struct PreparedLayer {
  Matrix train_x, val_x;
  std::vector<int> train_y, val_y;
  Standardizer standardizer;
};

PreparedLayer prepare_layer(const Matrix& train_x, std::span<const int> train_y,
                            const Matrix& val_x, std::span<const int> val_y) {
  if (train_x.rows() != train_y.size() || val_x.rows() != val_y.size()) {
    throw Error(ErrorKind::kInvalidArgument, "probe: rows and labels disagree");
  }
  if (val_x.rows() == 0) throw Error(ErrorKind::kInvalidArgument, "probe: empty validation split");
  if (train_x.cols() != val_x.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "probe: train and validation widths differ");
  }
  require_both_classes(train_y, "probe training split");
  for (double v : train_x.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "probe: non-finite input");
  }
  PreparedLayer p;
  p.standardizer = Standardizer::fit(train_x);
  p.train_x = p.standardizer.apply(train_x);
  p.val_x = p.standardizer.apply(val_x);
  p.train_y.assign(train_y.begin(), train_y.end());
  p.val_y.assign(val_y.begin(), val_y.end());
  return p;
}

L1LogisticFit run_job(const PreparedLayer& p, double c, const ProbeConfig& config) {
  L1LogisticOptions opt;
  opt.lambda = 1.0 / (c * static_cast<double>(p.train_x.rows()));
  opt.max_iters = config.max_iters;
  opt.tol = config.tol;
  opt.patience = config.patience;
  return fit_l1_logistic(p.train_x, p.train_y, opt, p.val_x, p.val_y);
}

ProbeModel pick_best(const PreparedLayer& p, const std::vector<L1LogisticFit>& fits,
                     const ProbeConfig& config, int layer_index) {
  // Ties resolve to the smaller C regardless of grid order.
  std::size_t best = 0;
  for (std::size_t k = 1; k < fits.size(); ++k) {
    if (fits[k].val_f1 > fits[best].val_f1 ||
        (fits[k].val_f1 == fits[best].val_f1 && config.c_grid[k] < config.c_grid[best])) {
      best = k;
    }
  }
  ProbeModel m;
  m.layer_index = layer_index;
  m.weights = fits[best].weights;
  m.bias = fits[best].bias;
  m.val_f1 = fits[best].val_f1;
  m.chosen_c = config.c_grid[best];
  m.converged = fits[best].converged;
  m.iterations = fits[best].iterations;
  m.standardizer = p.standardizer;
  return m;
}

std::vector<PreparedLayer> prepare_all(const PooledDataset& dataset) {
  if (dataset.records.empty()) throw Error(ErrorKind::kNoExamples, "no examples");
  const std::size_t layers = dataset.records.front().vectors.size();
  std::vector<PreparedLayer> prepared;
  prepared.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    auto train = layer_slice(dataset, l, Split::kTrain);
    auto val = layer_slice(dataset, l, Split::kValidation);
    try {
      prepared.push_back(prepare_layer(train.features, train.labels, val.features, val.labels));
    } catch (const Error& e) {
      rethrow_with_context(e, "layer " + std::to_string(l + 1));
    }
  }
  return prepared;
}

}  // namespace

ProbeModel train_probe(const Matrix& train_x, std::span<const int> train_y,
                       const Matrix& val_x, std::span<const int> val_y,
                       const ProbeConfig& config, int layer_index) {
  validate(config);
  const auto p = prepare_layer(train_x, train_y, val_x, val_y);
  std::vector<L1LogisticFit> fits;
  for (double c : config.c_grid) fits.push_back(run_job(p, c, config));
  return pick_best(p, fits, config, layer_index);
}

std::vector<ProbeModel> train_all_probes(const PooledDataset& dataset,
                                         const ProbeConfig& config) {
  validate(config);
  const auto prepared = prepare_all(dataset);
  const std::size_t grid = config.c_grid.size();
  std::vector<ProbeJob> jobs;
  for (std::size_t l = 0; l < prepared.size(); ++l) {
    for (std::size_t k = 0; k < grid; ++k) jobs.push_back({l, k});
  }
  std::vector<std::vector<L1LogisticFit>> fits(prepared.size(),
                                               std::vector<L1LogisticFit>(grid));
  std::vector<std::exception_ptr> failures(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(jobs.size()); ++i) {
    const auto& job = jobs[static_cast<std::size_t>(i)];
    try {
      fits[job.layer_pos][job.c_pos] =
          run_job(prepared[job.layer_pos], config.c_grid[job.c_pos], config);
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      rethrow_with_context(e, "layer " + std::to_string(jobs[i].layer_pos + 1));
    }
  }
  std::vector<ProbeModel> probes;
  for (std::size_t l = 0; l < prepared.size(); ++l) {
    probes.push_back(pick_best(prepared[l], fits[l], config, static_cast<int>(l) + 1));
  }
  return probes;
}

std::vector<ProbeModel> reference::train_all_probes(const PooledDataset& dataset,
                                                    const ProbeConfig& config) {
  validate(config);
  const auto prepared = prepare_all(dataset);
  std::vector<ProbeModel> probes;
  for (std::size_t l = 0; l < prepared.size(); ++l) {
    std::vector<L1LogisticFit> fits;
    try {
      for (double c : config.c_grid) fits.push_back(run_job(prepared[l], c, config));
    } catch (const Error& e) {
      rethrow_with_context(e, "layer " + std::to_string(l + 1));
    }
    probes.push_back(pick_best(prepared[l], fits, config, static_cast<int>(l) + 1));
  }
  return probes;
}

std::vector<double> normalize_magnitudes(std::span<const double> weights) {
  double total = 0.0;
  for (double v : weights) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kInvalidArgument, "non-finite probe weight");
    total += std::abs(v);
  }
  if (total == 0.0) throw Error(ErrorKind::kDegenerateProbe, "degenerate probe");
  std::vector<double> out(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) out[j] = std::abs(weights[j]) / total;
  return out;
}

std::vector<std::size_t> select_neurons(std::span<const double> normalized, double eta) {
  if (!(eta > 0.0 && eta <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "eta must lie in (0, 1]");
  }
  double total = 0.0;
  for (double v : normalized) {
    if (!(v >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "negative normalized magnitude");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::kInvalidArgument, "normalized magnitudes must sum to 1");
  }
  std::vector<std::size_t> order(normalized.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return normalized[a] > normalized[b];
  });
  // Cumulative sums carry rounding; a shortfall below 1e-12 counts as reached.
  constexpr double kSlack = 1e-12;
  std::vector<std::size_t> chosen;
  double cumulative = 0.0;
  for (std::size_t idx : order) {
    if (normalized[idx] == 0.0) break;
    chosen.push_back(idx);
    cumulative += normalized[idx];
    if (cumulative >= eta - kSlack) break;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::size_t SafetySelection::feature_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    if (!l.dropped) n += l.neurons.size();
  }
  return n;
}

std::vector<double> SafetySelection::val_f1() const {
  std::vector<double> f;
  for (const auto& l : layers) f.push_back(l.val_f1);
  return f;
}

SafetySelection select_safety_neurons(const std::vector<ProbeModel>& probes, double eta) {
  SafetySelection sel;
  sel.eta = eta;
  for (const auto& p : probes) {
    LayerSelection ls;
    ls.layer_index = p.layer_index;
    ls.val_f1 = p.val_f1;
    ls.standardizer = p.standardizer;
    try {
      ls.normalized = normalize_magnitudes(p.weights);
      ls.neurons = select_neurons(ls.normalized, eta);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateProbe) throw;
      ls.dropped = true;
    }
    sel.layers.push_back(std::move(ls));
  }
  return sel;
}

namespace {

json standardizer_to_json(const Standardizer& s) {
  return json{{"mean", s.mean}, {"scale", s.scale}};
}

Standardizer standardizer_from_json(const json& j) {
  return {j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
}

void check_version(const json& doc, const char* what) {
  const int v = doc.at("format_version").get<int>();
  if (v != kProbeDocumentVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                std::string(what) + " document version " + std::to_string(v));
  }
}

}  // namespace

json probes_to_json(const std::vector<ProbeModel>& probes) {
  json arr = json::array();
  for (const auto& p : probes) {
    arr.push_back({{"layer_index", p.layer_index},
                   {"weights", p.weights},
                   {"bias", p.bias},
                   {"val_f1", p.val_f1},
                   {"chosen_c", p.chosen_c},
                   {"converged", p.converged},
                   {"iterations", p.iterations},
                   {"standardizer", standardizer_to_json(p.standardizer)}});
  }
  return json{{"format_version", kProbeDocumentVersion}, {"probes", arr}};
}

std::vector<ProbeModel> probes_from_json(const json& doc) {
  try {
    check_version(doc, "probe");
    std::vector<ProbeModel> out;
    for (const auto& j : doc.at("probes")) {
      ProbeModel p;
      p.layer_index = j.at("layer_index").get<int>();
      p.weights = j.at("weights").get<std::vector<double>>();
      p.bias = j.at("bias").get<double>();
      p.val_f1 = j.at("val_f1").get<double>();
      p.chosen_c = j.at("chosen_c").get<double>();
      p.converged = j.at("converged").get<bool>();
      p.iterations = j.at("iterations").get<int>();
      p.standardizer = standardizer_from_json(j.at("standardizer"));
      out.push_back(std::move(p));
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("probe document: ") + e.what());
  }
}

json selection_to_json(const SafetySelection& selection) {
  json arr = json::array();
  for (const auto& l : selection.layers) {
    arr.push_back({{"layer_index", l.layer_index},
                   {"neurons", l.neurons},
                   {"normalized", l.normalized},
                   {"val_f1", l.val_f1},
                   {"dropped", l.dropped},
                   {"standardizer", standardizer_to_json(l.standardizer)}});
  }
  return json{{"format_version", kProbeDocumentVersion}, {"eta", selection.eta}, {"layers", arr}};
}

SafetySelection selection_from_json(const json& doc) {
  try {
    check_version(doc, "selection");
    SafetySelection sel;
    sel.eta = doc.at("eta").get<double>();
    for (const auto& j : doc.at("layers")) {
      LayerSelection l;
      l.layer_index = j.at("layer_index").get<int>();
      l.neurons = j.at("neurons").get<std::vector<std::size_t>>();
      l.normalized = j.at("normalized").get<std::vector<double>>();
      l.val_f1 = j.at("val_f1").get<double>();
      l.dropped = j.at("dropped").get<bool>();
      l.standardizer = standardizer_from_json(j.at("standardizer"));
      sel.layers.push_back(std::move(l));
    }
    return sel;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("selection document: ") + e.what());
  }
}

}  // namespace siren
