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

#include "siren/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "siren/error.hpp"
#include "siren/kernels.hpp"
#include "siren/metrics.hpp"

namespace siren {

MlpArchitecture MlpArchitecture::make(std::size_t input_width, std::size_t hidden_layers,
                                      std::size_t hidden_width, double dropout_rate) {
  MlpArchitecture a;
  a.dropout_rate = dropout_rate;
  std::size_t in = input_width;
  for (std::size_t i = 0; i < hidden_layers; ++i) {
    a.layer_dims.emplace_back(in, hidden_width);
    in = hidden_width;
  }
  a.layer_dims.emplace_back(in, 2);
  a.validate();
  return a;
}

void MlpArchitecture::validate() const {
  if (layer_dims.empty()) throw Error(ErrorKind::kInvalidArgument, "MLP has no layers");
  for (std::size_t i = 0; i < layer_dims.size(); ++i) {
    if (layer_dims[i].first == 0 || layer_dims[i].second == 0) {
      throw Error(ErrorKind::kInvalidArgument, "MLP layer with zero width");
    }
    if (i + 1 < layer_dims.size() && layer_dims[i].second != layer_dims[i + 1].first) {
      throw Error(ErrorKind::kInvalidArgument, "MLP layer dims do not chain");
    }
  }
  if (layer_dims.back().second != 2) {
    throw Error(ErrorKind::kInvalidArgument, "MLP must end in two logits");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "dropout must lie in [0, 1)");
  }
}

MlpModel MlpModel::initialize(const MlpArchitecture& architecture, std::uint64_t seed) {
  architecture.validate();
  MlpModel m;
  m.architecture = architecture;
  m.meta.seed = seed;
  std::mt19937_64 rng(seed);
  for (const auto& [in, out] : architecture.layer_dims) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    DenseLayer layer{Matrix(in, out), std::vector<double>(out)};
    for (double& w : layer.weights.data()) w = u(rng);
    for (double& b : layer.bias) b = u(rng);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

MlpModel MlpModel::zeros(const MlpArchitecture& architecture) {
  architecture.validate();
  MlpModel m;
  m.architecture = architecture;
  for (const auto& [in, out] : architecture.layer_dims) {
    m.layers.push_back({Matrix(in, out), std::vector<double>(out, 0.0)});
  }
  return m;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [in, out] : architecture.layer_dims) n += in * out + out;
  return n;
}

double prob_harmful_from_logits(double safe_logit, double harmful_logit) {
  const double d = safe_logit - harmful_logit;
  if (d >= 0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

namespace {

// Activations of one forward pass. acts[0] aliases the input batch;
// acts[i + 1] is the output of layer i (post ReLU and dropout for hidden
// layers, logits for the last).
struct Forward {
  const Matrix* input = nullptr;
  std::vector<Matrix> outputs;

  const Matrix& act(std::size_t i) const { return i == 0 ? *input : outputs[i - 1]; }
  const Matrix& logits() const { return outputs.back(); }
};

void forward(const MlpModel& model, const Matrix& x, Forward& fw, std::mt19937_64* dropout_rng) {
  if (x.cols() != model.input_width()) {
    throw Error(ErrorKind::kWidthMismatch,
                "MLP expects width " + std::to_string(model.input_width()) + ", got " +
                    std::to_string(x.cols()));
  }
  fw.input = &x;
  fw.outputs.resize(model.layers.size());
  const double p = model.architecture.dropout_rate;
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    Matrix& out = fw.outputs[i];
    kernels::matmul(fw.act(i), layer.weights, out);
    kernels::add_row_bias(out, layer.bias);
    if (i + 1 == model.layers.size()) break;
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    if (dropout_rng != nullptr && p > 0.0) {
      // Keep when a uniform 64-bit draw falls below (1 - p) * 2^64.
      const auto cutoff = static_cast<std::uint64_t>(std::ldexp(1.0 - p, 64) - 1.0);
      for (double& v : out.data()) v = (*dropout_rng)() <= cutoff ? v * keep_scale : 0.0;
    }
  }
}

// Scale applied to kept hidden units (1 at inference).
void backward(const MlpModel& model, const Forward& fw, std::span<const int> y,
              double hidden_scale, MlpGradients& g) {
  const Matrix& logits = fw.logits();
  const std::size_t batch = logits.rows();
  g.weights.resize(model.layers.size());
  g.bias.resize(model.layers.size());

  Matrix grad(batch, 2);
  double loss = 0.0;
  for (std::size_t r = 0; r < batch; ++r) {
    const double l0 = logits(r, 0), l1 = logits(r, 1);
    const double mx = std::max(l0, l1);
    const double lse = mx + std::log(std::exp(l0 - mx) + std::exp(l1 - mx));
    loss += lse - (y[r] == 1 ? l1 : l0);
    const double p1 = prob_harmful_from_logits(l0, l1);
    grad(r, 0) = ((1.0 - p1) - (y[r] == 0 ? 1.0 : 0.0)) / static_cast<double>(batch);
    grad(r, 1) = (p1 - (y[r] == 1 ? 1.0 : 0.0)) / static_cast<double>(batch);
  }
  g.loss = loss / static_cast<double>(batch);

  Matrix upstream;
  for (std::size_t i = model.layers.size(); i-- > 0;) {
    const Matrix& input = fw.act(i);
    kernels::matmul_at_b(input, grad, g.weights[i]);
    auto& db = g.bias[i];
    db.assign(grad.cols(), 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
      for (std::size_t j = 0; j < grad.cols(); ++j) db[j] += grad(r, j);
    }
    if (i == 0) break;
    kernels::matmul_a_bt(grad, model.layers[i].weights, upstream);
    // Units that were zeroed (inactive ReLU or dropped) pass no gradient.
    for (std::size_t k = 0; k < upstream.data().size(); ++k) {
      upstream.data()[k] = input.data()[k] > 0.0 ? upstream.data()[k] * hidden_scale : 0.0;
    }
    std::swap(grad, upstream);
  }
}

void check_labels(std::span<const int> y, std::size_t rows) {
  if (y.size() != rows) throw Error(ErrorKind::kInvalidArgument, "labels and rows disagree");
  for (int v : y) {
    if (v != 0 && v != 1) throw Error(ErrorKind::kInvalidArgument, "labels must be 0 or 1");
  }
}

}  // namespace

Matrix mlp_logits(const MlpModel& model, const Matrix& z) {
  Forward fw;
  forward(model, z, fw, nullptr);
  return std::move(fw.outputs.back());
}

std::vector<double> mlp_prob_harmful(const MlpModel& model, const Matrix& z) {
  const Matrix logits = mlp_logits(model, z);
  std::vector<double> p(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    p[r] = prob_harmful_from_logits(logits(r, 0), logits(r, 1));
  }
  return p;
}

std::vector<int> mlp_predict(const MlpModel& model, const Matrix& z) {
  const auto p = mlp_prob_harmful(model, z);
  std::vector<int> pred(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) pred[i] = p[i] >= 0.5 ? 1 : 0;
  return pred;
}

MlpOutput mlp_forward(const MlpModel& model, std::span<const double> z) {
  Matrix row(1, z.size());
  std::copy(z.begin(), z.end(), row.row(0).begin());
  const Matrix logits = mlp_logits(model, row);
  MlpOutput out;
  out.logits = {logits(0, 0), logits(0, 1)};
  out.prob_harmful = prob_harmful_from_logits(logits(0, 0), logits(0, 1));
  return out;
}

MlpGradients mlp_gradients(const MlpModel& model, const Matrix& x, std::span<const int> y) {
  check_labels(y, x.rows());
  Forward fw;
  forward(model, x, fw, nullptr);
  MlpGradients g;
  backward(model, fw, y, 1.0, g);
  return g;
}

double mlp_loss(const MlpModel& model, const Matrix& x, std::span<const int> y) {
  check_labels(y, x.rows());
  const Matrix logits = mlp_logits(model, x);
  double loss = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const double l0 = logits(r, 0), l1 = logits(r, 1);
    const double mx = std::max(l0, l1);
    loss += mx + std::log(std::exp(l0 - mx) + std::exp(l1 - mx)) - (y[r] == 1 ? l1 : l0);
  }
  return loss / static_cast<double>(logits.rows());
}

namespace {

struct AdamState {
  std::vector<Matrix> m_w, v_w;
  std::vector<std::vector<double>> m_b, v_b;
  long step = 0;

  explicit AdamState(const MlpModel& model) {
    for (const auto& l : model.layers) {
      m_w.emplace_back(l.weights.rows(), l.weights.cols());
      v_w.emplace_back(l.weights.rows(), l.weights.cols());
      m_b.emplace_back(l.bias.size(), 0.0);
      v_b.emplace_back(l.bias.size(), 0.0);
    }
  }
};

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m,
                 std::span<double> v, const OptimizerConfig& opt, double c1, double c2) {
  const double lr = opt.learning_rate, b1 = opt.beta1, b2 = opt.beta2, eps = opt.epsilon;
#pragma omp simd
  for (std::size_t k = 0; k < param.size(); ++k) {
    m[k] = b1 * m[k] + (1.0 - b1) * grad[k];
    v[k] = b2 * v[k] + (1.0 - b2) * grad[k] * grad[k];
    param[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
  }
}

void adam_step(MlpModel& model, const MlpGradients& g, AdamState& s, const OptimizerConfig& opt) {
  ++s.step;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    adam_update(model.layers[i].weights.data(), g.weights[i].data(), s.m_w[i].data(),
                s.v_w[i].data(), opt, c1, c2);
    adam_update(model.layers[i].bias, g.bias[i], s.m_b[i], s.v_b[i], opt, c1, c2);
  }
}

}  // namespace

MlpModel mlp_train(const Matrix& train_x, std::span<const int> train_y, const Matrix& val_x,
                   std::span<const int> val_y, const MlpArchitecture& architecture,
                   const OptimizerConfig& opt) {
  architecture.validate();
  check_labels(train_y, train_x.rows());
  check_labels(val_y, val_x.rows());
  if (train_x.cols() != architecture.input_width() ||
      (val_x.rows() > 0 && val_x.cols() != architecture.input_width())) {
    throw Error(ErrorKind::kWidthMismatch, "training features do not match MLP input width");
  }
  if (std::find(train_y.begin(), train_y.end(), 0) == train_y.end() ||
      std::find(train_y.begin(), train_y.end(), 1) == train_y.end()) {
    throw Error(ErrorKind::kSingleClass, "MLP training split contains a single class");
  }
  if (val_x.rows() == 0) throw Error(ErrorKind::kInvalidArgument, "MLP needs a validation split");
  if (opt.batch_size == 0 || opt.max_epochs < 1 || !(opt.learning_rate > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid optimizer configuration");
  }

  MlpModel model = MlpModel::initialize(architecture, opt.seed);
  MlpModel best = model;
  best.meta.best_val_f1 = -1.0;
  AdamState adam(model);
  std::mt19937_64 shuffle_rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 dropout_rng(opt.seed + 0x632be59bd9b4e019ULL);

  const std::size_t n = train_x.rows();
  const std::size_t d = train_x.cols();
  const double hidden_scale = 1.0 / (1.0 - architecture.dropout_rate);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Matrix batch_x;
  std::vector<int> batch_y;
  Forward fw;
  MlpGradients g;
  int stale = 0;

  for (int epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += opt.batch_size) {
      const std::size_t rows = std::min(opt.batch_size, n - start);
      if (batch_x.rows() != rows) batch_x.resize(rows, d);
      batch_y.resize(rows);
      for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t src = order[start + r];
        std::copy(train_x.row(src).begin(), train_x.row(src).end(), batch_x.row(r).begin());
        batch_y[r] = train_y[src];
      }
      forward(model, batch_x, fw, &dropout_rng);
      backward(model, fw, batch_y, hidden_scale, g);
      if (!std::isfinite(g.loss)) {
        throw Error(ErrorKind::kDiverged,
                    "MLP loss became non-finite at epoch " + std::to_string(epoch));
      }
      adam_step(model, g, adam, opt);
    }
    model.meta.epochs_run = epoch;

    const auto prob = mlp_prob_harmful(model, val_x);
    std::vector<int> pred(prob.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred[i] = prob[i] >= 0.5 ? 1 : 0;
      const double p = std::clamp(val_y[i] == 1 ? prob[i] : 1.0 - prob[i], 1e-300, 1.0);
      loss -= std::log(p);
    }
    loss /= static_cast<double>(pred.size());
    const double f1 = macro_f1(pred, val_y);
    if (f1 > best.meta.best_val_f1 ||
        (f1 == best.meta.best_val_f1 && loss < best.meta.best_val_loss - opt.loss_tiebreak)) {
      best = model;
      best.meta.best_val_f1 = f1;
      best.meta.best_val_loss = loss;
      best.meta.best_epoch = epoch;
      stale = 0;
    } else {
      ++stale;
    }
    if ((opt.patience > 0 && stale >= opt.patience) ||
        (opt.stop_on_perfect && best.meta.best_val_f1 >= 1.0)) {
      break;
    }
  }
  best.meta.epochs_run = model.meta.epochs_run;
  best.meta.seed = opt.seed;
  return best;
}

MlpModel mlp_train(const FeatureMatrix& data, const MlpArchitecture& architecture,
                   const OptimizerConfig& optimizer) {
  const auto train = data.subset(Split::kTrain);
  const auto val = data.subset(Split::kValidation);
  return mlp_train(train.features, train.labels, val.features, val.labels, architecture,
                   optimizer);
}

}  // namespace siren
