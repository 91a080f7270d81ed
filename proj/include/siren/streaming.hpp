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

// Prefix-pooled streaming scores, per-token attribution, and detection rates
// at fixed latencies past an annotated unsafe-span boundary.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "siren/activation_store.hpp"
#include "siren/aggregate.hpp"
#include "siren/bundle.hpp"

namespace siren {

// Piecewise-constant decision threshold over token positions (1-based).
// `steps` holds (first_position, threshold) pairs sorted by position; before
// the first step `base` applies.
struct ThresholdSchedule {
  double base = 0.5;
  std::vector<std::pair<std::size_t, double>> steps;

  static ThresholdSchedule constant(double threshold) { return {threshold, {}}; }
  double at(std::size_t position) const;
  void validate() const;
};

struct ScoreTrace {
  std::string example_id;
  std::vector<double> scores;  // h_t for t = 1..T
  ThresholdSchedule threshold;
  std::optional<std::size_t> flagged_at;  // first t (1-based) with h_t >= threshold
};

// First position whose score reaches the schedule, if any.
std::optional<std::size_t> first_flag(const std::vector<double>& scores,
                                      const ThresholdSchedule& schedule);

// z for the mean of tokens 1..t. Throws kPooledOnly, kInvalidArgument.
FeatureVector prefix_features(const ExampleRecord& record, const DatasetManifest& manifest,
                              const SafetySelection& selection, const LayerWeighting& weighting,
                              std::size_t t);

// h_t at every position using a running mean over the selected neurons.
ScoreTrace stream_score(const ExampleRecord& record, const DatasetManifest& manifest,
                        const SirenBundle& bundle,
                        const ThresholdSchedule& threshold = ThresholdSchedule::constant(0.5));

// Traces for every record, parallel across records.
std::vector<ScoreTrace> stream_dataset(const ActivationDataset& dataset, const SirenBundle& bundle,
                                       const ThresholdSchedule& threshold,
                                       const Split* only = nullptr);

// Per-token probability of the harmful class, each token scored on its own.
std::vector<double> token_attribution(const ExampleRecord& record, const DatasetManifest& manifest,
                                      const SirenBundle& bundle);

struct UnsafeSpanAnnotation {
  std::string example_id;
  std::size_t span_end = 1;  // 1-based token index
};

inline const std::vector<std::size_t> kLatencyOffsets{0, 32, 64, 128, 256};

struct LatencyReport {
  std::vector<std::size_t> offsets;
  std::vector<double> rates;
  std::size_t evaluated = 0;
  std::size_t missing_annotations = 0;
};

// Detection rate at span_end + p (capped at T) for each offset p. Traces
// without an annotation are skipped and counted.
LatencyReport latency_eval(const std::vector<ScoreTrace>& traces,
                           const std::vector<UnsafeSpanAnnotation>& annotations,
                           const std::vector<std::size_t>& offsets = kLatencyOffsets);

nlohmann::json trace_to_json(const ScoreTrace& trace);
nlohmann::json latency_to_json(const LatencyReport& report);

// One JSON object per line: {"example_id": ..., "span_end": ...}.
std::vector<UnsafeSpanAnnotation> read_annotations(const std::filesystem::path& path);
std::string annotations_to_jsonl(const std::vector<UnsafeSpanAnnotation>& annotations);

}  // namespace siren
