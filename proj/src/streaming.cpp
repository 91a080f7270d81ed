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

#include "siren/streaming.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "siren/error.hpp"

namespace siren {

using nlohmann::json;

double ThresholdSchedule::at(std::size_t position) const {
  double t = base;
  for (const auto& [from, value] : steps) {
    if (position < from) break;
    t = value;
  }
  return t;
}

void ThresholdSchedule::validate() const {
  auto check = [](double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "threshold outside [0, 1]");
  };
  check(base);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    check(steps[i].second);
    if (i > 0 && steps[i].first <= steps[i - 1].first) {
      throw Error(ErrorKind::kInvalidArgument, "threshold steps must be strictly increasing");
    }
  }
}

std::optional<std::size_t> first_flag(const std::vector<double>& scores,
                                      const ThresholdSchedule& schedule) {
  for (std::size_t t = 1; t <= scores.size(); ++t) {
    if (scores[t - 1] >= schedule.at(t)) return t;
  }
  return std::nullopt;
}

namespace {

void check_record(const ExampleRecord& record, const DatasetManifest& manifest,
                  const SafetySelection& selection, const char* operation) {
  require_token_level(manifest, operation);
  if (record.layers.size() != selection.layers.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "example '" + record.example_id + "' has " + std::to_string(record.layers.size()) +
                    " layers, selection has " + std::to_string(selection.layers.size()));
  }
  if (record.tokens() == 0) {
    throw Error(ErrorKind::kEmptySequence, "example '" + record.example_id + "': empty sequence");
  }
}

// z rows for every prefix t = 1..T, via a running mean over selected neurons.
Matrix prefix_feature_rows(const ExampleRecord& record, const SirenBundle& bundle) {
  const auto& sel = bundle.selection;
  const std::size_t T = record.tokens();
  Matrix z(T, bundle.layout.size());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < sel.layers.size(); ++l) {
    const auto& ls = sel.layers[l];
    if (ls.dropped) continue;
    const auto& layer = record.layers[l];
    const double alpha = bundle.weighting.alpha[l];
    std::vector<double> mean(ls.neurons.size(), 0.0);
    for (std::size_t n : ls.neurons) {
      if (n >= layer.width) {
        throw Error(ErrorKind::kIndexOutOfRange,
                    "layer " + std::to_string(ls.layer_index) + " neuron " + std::to_string(n));
      }
    }
    for (std::size_t t = 0; t < T; ++t) {
      const auto row = layer.row(t);
      const double inv = 1.0 / static_cast<double>(t + 1);
      for (std::size_t k = 0; k < ls.neurons.size(); ++k) {
        const std::size_t n = ls.neurons[k];
        mean[k] += (static_cast<double>(row[n]) - mean[k]) * inv;
        z(t, offset + k) = alpha * ls.standardizer.apply(n, mean[k]);
      }
    }
    offset += ls.neurons.size();
  }
  return z;
}

}  // namespace

FeatureVector prefix_features(const ExampleRecord& record, const DatasetManifest& manifest,
                              const SafetySelection& selection, const LayerWeighting& weighting,
                              std::size_t t) {
  check_record(record, manifest, selection, "prefix_features");
  if (t < 1 || t > record.tokens()) {
    throw Error(ErrorKind::kInvalidArgument,
                "prefix length " + std::to_string(t) + " outside [1, " +
                    std::to_string(record.tokens()) + "]");
  }
  PooledRecord pooled{record.example_id, record.label, record.split, {}};
  for (const auto& layer : record.layers) {
    pooled.vectors.push_back(
        mean_pool(std::span<const float>(layer.values.data(), t * layer.width), layer.width));
  }
  return build_features(pooled, selection, weighting);
}

ScoreTrace stream_score(const ExampleRecord& record, const DatasetManifest& manifest,
                        const SirenBundle& bundle, const ThresholdSchedule& threshold) {
  threshold.validate();
  check_record(record, manifest, bundle.selection, "stream_score");
  ScoreTrace trace;
  trace.example_id = record.example_id;
  trace.threshold = threshold;
  trace.scores = mlp_prob_harmful(bundle.model, prefix_feature_rows(record, bundle));
  trace.flagged_at = first_flag(trace.scores, threshold);
  return trace;
}

std::vector<ScoreTrace> stream_dataset(const ActivationDataset& dataset, const SirenBundle& bundle,
                                       const ThresholdSchedule& threshold, const Split* only) {
  require_token_level(dataset.manifest, "stream_score");
  std::vector<const ExampleRecord*> picked;
  for (const auto& r : dataset.records) {
    if (only == nullptr || r.split == *only) picked.push_back(&r);
  }
  std::vector<ScoreTrace> traces(picked.size());
  std::vector<std::exception_ptr> failures(picked.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(picked.size()); ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      traces[k] = stream_score(*picked[k], dataset.manifest, bundle, threshold);
    } catch (...) {
      failures[k] = std::current_exception();
    }
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return traces;
}

std::vector<double> token_attribution(const ExampleRecord& record, const DatasetManifest& manifest,
                                      const SirenBundle& bundle) {
  check_record(record, manifest, bundle.selection, "token_attribution");
  const std::size_t T = record.tokens();
  Matrix z(T, bundle.layout.size());
  std::vector<std::vector<double>> vectors(record.layers.size());
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t l = 0; l < record.layers.size(); ++l) {
      const auto row = record.layers[l].row(t);
      vectors[l].assign(row.begin(), row.end());
    }
    build_features_into(vectors, bundle.selection, bundle.weighting, z.row(t));
  }
  return mlp_prob_harmful(bundle.model, z);
}

LatencyReport latency_eval(const std::vector<ScoreTrace>& traces,
                           const std::vector<UnsafeSpanAnnotation>& annotations,
                           const std::vector<std::size_t>& offsets) {
  std::unordered_map<std::string, std::size_t> span_end;
  for (const auto& a : annotations) span_end[a.example_id] = a.span_end;
  LatencyReport report;
  report.offsets = offsets;
  std::vector<std::size_t> hits(offsets.size(), 0);
  for (const auto& trace : traces) {
    const auto it = span_end.find(trace.example_id);
    if (it == span_end.end()) {
      ++report.missing_annotations;
      continue;
    }
    const std::size_t T = trace.scores.size();
    if (it->second < 1 || it->second > T) {
      throw Error(ErrorKind::kInvalidArgument,
                  "annotation for '" + trace.example_id + "' has span_end outside [1, T]");
    }
    ++report.evaluated;
    if (!trace.flagged_at) continue;
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      if (*trace.flagged_at <= std::min(it->second + offsets[k], T)) ++hits[k];
    }
  }
  for (std::size_t h : hits) {
    report.rates.push_back(report.evaluated == 0
                               ? 0.0
                               : static_cast<double>(h) / static_cast<double>(report.evaluated));
  }
  return report;
}

json trace_to_json(const ScoreTrace& trace) {
  json steps = json::array();
  for (const auto& [from, value] : trace.threshold.steps) steps.push_back({from, value});
  return json{{"example_id", trace.example_id},
              {"threshold", trace.threshold.base},
              {"threshold_steps", steps},
              {"flagged_at", trace.flagged_at ? json(*trace.flagged_at) : json(nullptr)},
              {"scores", trace.scores}};
}

json latency_to_json(const LatencyReport& report) {
  json rates = json::array();
  for (std::size_t k = 0; k < report.offsets.size(); ++k) {
    rates.push_back({{"offset", report.offsets[k]}, {"rate", report.rates[k]}});
  }
  return json{{"evaluated", report.evaluated},
              {"missing_annotations", report.missing_annotations},
              {"detection", rates}};
}

std::vector<UnsafeSpanAnnotation> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<UnsafeSpanAnnotation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("example_id").get<std::string>(), j.at("span_end").get<std::size_t>()});
    } catch (const json::exception& e) {
      throw Error(ErrorKind::kParse,
                  path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string annotations_to_jsonl(const std::vector<UnsafeSpanAnnotation>& annotations) {
  std::string s;
  for (const auto& a : annotations) {
    s += json{{"example_id", a.example_id}, {"span_end", a.span_end}}.dump();
    s += '\n';
  }
  return s;
}

}  // namespace siren
