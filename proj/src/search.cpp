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

#include "siren/search.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "siren/error.hpp"
#include "siren/metrics.hpp"

namespace siren {

void SearchSpace::validate() const {
  if (hidden_layers.empty()) throw Error(ErrorKind::kInvalidArgument, "no hidden layer counts");
  if (hidden_min == 0 || hidden_min > hidden_max) {
    throw Error(ErrorKind::kInvalidArgument, "invalid hidden width range");
  }
  if (!(dropout_min >= 0.0 && dropout_min <= dropout_max && dropout_max < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid dropout range");
  }
  if (!(lr_min > 0.0 && lr_min <= lr_max)) {
    throw Error(ErrorKind::kInvalidArgument, "invalid learning-rate range");
  }
  if (trials < 1) throw Error(ErrorKind::kInvalidArgument, "trials must be >= 1");
  if (cv_folds < 2) throw Error(ErrorKind::kInvalidArgument, "cv_folds must be >= 2");
}

MlpArchitecture TrialConfig::architecture(std::size_t input_width) const {
  return MlpArchitecture::make(input_width, static_cast<std::size_t>(hidden_layers),
                               hidden_width, dropout);
}

OptimizerConfig TrialConfig::optimizer(const OptimizerConfig& base) const {
  OptimizerConfig o = base;
  o.learning_rate = learning_rate;
  return o;
}

std::vector<TrialConfig> sample_trials(const SearchSpace& space) {
  space.validate();
  std::mt19937_64 rng(space.seed);
  std::uniform_int_distribution<std::size_t> pick_layers(0, space.hidden_layers.size() - 1);
  std::uniform_real_distribution<double> log_width(std::log(static_cast<double>(space.hidden_min)),
                                                   std::log(static_cast<double>(space.hidden_max)));
  std::uniform_real_distribution<double> dropout(space.dropout_min, space.dropout_max);
  std::uniform_real_distribution<double> log_lr(std::log(space.lr_min), std::log(space.lr_max));
  std::vector<TrialConfig> trials;
  for (int t = 0; t < space.trials; ++t) {
    TrialConfig c;
    c.hidden_layers = space.hidden_layers[pick_layers(rng)];
    c.hidden_width = std::clamp(static_cast<std::size_t>(std::llround(std::exp(log_width(rng)))),
                                space.hidden_min, space.hidden_max);
    c.dropout = dropout(rng);
    c.learning_rate = std::exp(log_lr(rng));
    trials.push_back(c);
  }
  return trials;
}

std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorKind::kInvalidArgument, "need at least two folds");
  std::mt19937_64 rng(seed);
  std::vector<int> assignment(labels.size(), 0);
  for (int cls = 0; cls <= 1; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      assignment[idx[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
    }
  }
  return assignment;
}

namespace {

struct FoldData {
  Matrix train_x, val_x;
  std::vector<int> train_y, val_y;
};

FoldData split_fold(const Matrix& x, std::span<const int> y, std::span<const int> fold_of,
                    int fold) {
  std::size_t n_val = 0;
  for (int f : fold_of) n_val += (f == fold);
  FoldData d;
  d.train_x.resize(x.rows() - n_val, x.cols());
  d.val_x.resize(n_val, x.cols());
  std::size_t ti = 0, vi = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const bool held_out = fold_of[i] == fold;
    auto dst = held_out ? d.val_x.row(vi++) : d.train_x.row(ti++);
    std::copy(x.row(i).begin(), x.row(i).end(), dst.begin());
    (held_out ? d.val_y : d.train_y).push_back(y[i]);
  }
  return d;
}

double fold_score(const Matrix& x, std::span<const int> y, std::span<const int> fold_of, int fold,
                  const TrialConfig& config, const OptimizerConfig& base) {
  const FoldData d = split_fold(x, y, fold_of, fold);
  OptimizerConfig opt = config.optimizer(base);
  opt.stop_on_perfect = true;
  opt.seed = base.seed + static_cast<std::uint64_t>(fold);
  const MlpModel m =
      mlp_train(d.train_x, d.train_y, d.val_x, d.val_y, config.architecture(x.cols()), opt);
  return m.meta.best_val_f1;
}

}  // namespace

TrialResult cross_validate(const Matrix& x, std::span<const int> y, const TrialConfig& config,
                           int folds, const OptimizerConfig& base, std::uint64_t fold_seed) {
  const auto fold_of = stratified_folds(y, folds, fold_seed);
  TrialResult r{config, {}, 0.0, {}};
  for (int f = 0; f < folds; ++f) r.fold_scores.push_back(fold_score(x, y, fold_of, f, config, base));
  r.cv_score = std::accumulate(r.fold_scores.begin(), r.fold_scores.end(), 0.0) / folds;
  return r;
}

SearchResult hyperparameter_search(const FeatureMatrix& data, const SearchSpace& space,
                                   const OptimizerConfig& base) {
  space.validate();
  const auto train = data.subset(Split::kTrain);
  const auto val = data.subset(Split::kValidation);
  if (train.features.rows() == 0) throw Error(ErrorKind::kNoExamples, "empty training split");

  const auto configs = sample_trials(space);
  const auto fold_of = stratified_folds(train.labels, space.cv_folds, space.seed);
  const std::size_t folds = static_cast<std::size_t>(space.cv_folds);
  std::vector<double> scores(configs.size() * folds, 0.0);
  std::vector<std::string> errors(configs.size() * folds);

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t job = 0; job < static_cast<std::ptrdiff_t>(scores.size()); ++job) {
    const auto j = static_cast<std::size_t>(job);
    try {
      scores[j] = fold_score(train.features, train.labels, fold_of, static_cast<int>(j % folds),
                             configs[j / folds], base);
    } catch (const std::exception& e) {
      errors[j] = e.what();
    }
  }

  SearchResult result;
  bool any_ok = false;
  std::string failures;
  for (std::size_t t = 0; t < configs.size(); ++t) {
    TrialResult tr{configs[t], {}, 0.0, {}};
    for (std::size_t f = 0; f < folds; ++f) {
      const std::size_t j = t * folds + f;
      if (!errors[j].empty() && tr.failure.empty()) tr.failure = errors[j];
      tr.fold_scores.push_back(scores[j]);
    }
    if (tr.failure.empty()) {
      tr.cv_score = std::accumulate(tr.fold_scores.begin(), tr.fold_scores.end(), 0.0) /
                    static_cast<double>(folds);
      if (!any_ok || tr.cv_score > result.best_cv_score) {
        result.best_trial = t;
        result.best_cv_score = tr.cv_score;
        any_ok = true;
      }
    } else {
      failures += "\n  trial " + std::to_string(t) + ": " + tr.failure;
    }
    result.trials.push_back(std::move(tr));
  }
  if (!any_ok) throw Error(ErrorKind::kAllTrialsFailed, "all search trials failed:" + failures);

  result.best = configs[result.best_trial];
  result.model = mlp_train(train.features, train.labels, val.features, val.labels,
                           result.best.architecture(data.features.cols()),
                           result.best.optimizer(base));
  return result;
}

}  // namespace siren
