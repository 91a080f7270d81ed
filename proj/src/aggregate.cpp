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

#include "siren/aggregate.hpp"

#include <algorithm>
#include <exception>

#include "siren/error.hpp"

namespace siren {

std::string to_string(AggregationMode mode) {
  return mode == AggregationMode::kAdaptive ? "adaptive" : "uniform";
}

AggregationMode parse_aggregation_mode(const std::string& s) {
  if (s == "adaptive") return AggregationMode::kAdaptive;
  if (s == "uniform") return AggregationMode::kUniform;
  throw Error(ErrorKind::kInvalidArgument, "aggregation mode must be adaptive or uniform");
}

namespace {

void check_scores(std::span<const double> f) {
  if (f.empty()) throw Error(ErrorKind::kInvalidArgument, "no layer scores");
  for (double v : f) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorKind::kInvalidArgument, "layer F1 outside [0, 1]");
    }
  }
}

}  // namespace

LayerWeighting compute_layer_weights(std::span<const double> f) {
  check_scores(f);
  LayerWeighting w;
  w.mode = AggregationMode::kAdaptive;
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  w.f_min = *lo;
  w.f_max = *hi;
  const double range = w.f_max - w.f_min;
  w.alpha.resize(f.size(), 1.0);
  if (range > 0.0) {
    for (std::size_t l = 0; l < f.size(); ++l) w.alpha[l] = (f[l] - w.f_min) / range;
  }
  return w;
}

LayerWeighting uniform_weights(std::span<const double> f) {
  check_scores(f);
  LayerWeighting w;
  w.mode = AggregationMode::kUniform;
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  w.f_min = *lo;
  w.f_max = *hi;
  w.alpha.assign(f.size(), 1.0);
  return w;
}

LayerWeighting make_weighting(AggregationMode mode, std::span<const double> f) {
  return mode == AggregationMode::kAdaptive ? compute_layer_weights(f) : uniform_weights(f);
}

FeatureLayout feature_layout(const SafetySelection& selection) {
  FeatureLayout layout;
  for (const auto& l : selection.layers) {
    if (l.dropped) continue;
    for (std::size_t n : l.neurons) layout.emplace_back(l.layer_index, n);
  }
  return layout;
}

void build_features_into(const std::vector<std::vector<double>>& vectors,
                         const SafetySelection& selection, const LayerWeighting& weighting,
                         std::span<double> out) {
  if (vectors.size() != selection.layers.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "record has " + std::to_string(vectors.size()) + " layers, selection has " +
                    std::to_string(selection.layers.size()));
  }
  if (weighting.alpha.size() != selection.layers.size()) {
    throw Error(ErrorKind::kShapeMismatch, "layer weighting and selection disagree on L");
  }
  std::size_t k = 0;
  for (std::size_t l = 0; l < selection.layers.size(); ++l) {
    const auto& ls = selection.layers[l];
    if (ls.dropped) continue;
    const auto& v = vectors[l];
    const double alpha = weighting.alpha[l];
    for (std::size_t n : ls.neurons) {
      if (n >= v.size() || n >= ls.standardizer.mean.size()) {
        throw Error(ErrorKind::kIndexOutOfRange,
                    "layer " + std::to_string(ls.layer_index) + " neuron " + std::to_string(n) +
                        " out of range (width " + std::to_string(v.size()) + ")");
      }
      if (k >= out.size()) throw Error(ErrorKind::kShapeMismatch, "feature buffer too small");
      out[k++] = alpha * ls.standardizer.apply(n, v[n]);
    }
  }
  if (k != out.size()) throw Error(ErrorKind::kShapeMismatch, "feature buffer size mismatch");
}

FeatureVector build_features(const PooledRecord& record, const SafetySelection& selection,
                             const LayerWeighting& weighting) {
  FeatureVector fv;
  fv.layout = feature_layout(selection);
  if (fv.layout.empty()) throw Error(ErrorKind::kEmptyFeatureSpace, "empty feature space");
  fv.z.resize(fv.layout.size());
  build_features_into(record.vectors, selection, weighting, fv.z);
  return fv;
}

FeatureMatrix FeatureMatrix::subset(Split split) const {
  FeatureMatrix out;
  out.layout = layout;
  std::size_t rows = 0;
  for (Split s : splits) rows += (s == split);
  out.features.resize(rows, features.cols());
  std::size_t r = 0;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] != split) continue;
    std::copy(features.row(i).begin(), features.row(i).end(), out.features.row(r).begin());
    out.labels.push_back(labels[i]);
    out.splits.push_back(splits[i]);
    out.example_ids.push_back(example_ids[i]);
    ++r;
  }
  return out;
}

namespace {

FeatureMatrix allocate(const PooledDataset& dataset, const SafetySelection& selection) {
  FeatureMatrix fm;
  fm.layout = feature_layout(selection);
  if (fm.layout.empty()) throw Error(ErrorKind::kEmptyFeatureSpace, "empty feature space");
  if (dataset.records.empty()) throw Error(ErrorKind::kNoExamples, "no examples");
  fm.features.resize(dataset.records.size(), fm.layout.size());
  for (const auto& r : dataset.records) {
    fm.labels.push_back(r.label);
    fm.splits.push_back(r.split);
    fm.example_ids.push_back(r.example_id);
  }
  return fm;
}

}  // namespace

FeatureMatrix build_feature_matrix(const PooledDataset& dataset,
                                   const SafetySelection& selection,
                                   const LayerWeighting& weighting) {
  auto fm = allocate(dataset, selection);
  const auto n = static_cast<std::ptrdiff_t>(dataset.records.size());
  std::vector<std::exception_ptr> failures(dataset.records.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    try {
      build_features_into(dataset.records[row].vectors, selection, weighting,
                          fm.features.row(row));
    } catch (...) {
      failures[row] = std::current_exception();
    }
  }
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      rethrow_with_context(e, "example '" + dataset.records[i].example_id + "'");
    }
  }
  return fm;
}

FeatureMatrix reference::build_feature_matrix(const PooledDataset& dataset,
                                              const SafetySelection& selection,
                                              const LayerWeighting& weighting) {
  auto fm = allocate(dataset, selection);
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    try {
      build_features_into(dataset.records[i].vectors, selection, weighting, fm.features.row(i));
    } catch (const Error& e) {
      rethrow_with_context(e, "example '" + dataset.records[i].example_id + "'");
    }
  }
  return fm;
}

}  // namespace siren
