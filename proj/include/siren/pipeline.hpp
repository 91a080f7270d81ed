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

// End-to-end training and ablation runs shared by the command-line tool and
// the acceptance suite. Failures are rethrown with the stage name prepended.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "siren/activation_store.hpp"
#include "siren/aggregate.hpp"
#include "siren/bundle.hpp"
#include "siren/probes.hpp"
#include "siren/search.hpp"
#include "siren/synth.hpp"

namespace siren {

struct RunConfig {
  double eta = 0.8;
  AggregationMode aggregation = AggregationMode::kAdaptive;
  ProbeConfig probe;
  SearchSpace search;
  OptimizerConfig optimizer;
  double threshold = 0.5;
  std::uint64_t seed = 42;

  // Copies `seed` into every seeded component.
  void apply_seed();
  void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& config);
// Keys absent from `doc` keep the values already in `config`.
void merge_run_config(RunConfig& config, const nlohmann::json& doc);

struct LayerReport {
  int layer_index = 0;
  double probe_f1 = 0.0;
  double chosen_c = 0.0;
  std::size_t selected = 0;
  double alpha = 0.0;
  bool dropped = false;
  std::optional<double> recovery;
};

struct TrainOutcome {
  std::vector<ProbeModel> probes;
  SirenBundle bundle;
  SearchResult search;
  std::vector<LayerReport> layers;
  double val_macro_f1 = 0.0;
  std::size_t feature_count = 0;
};

// Probes -> selection -> weights -> features -> search -> final MLP.
// `truth`, when given, adds per-layer recovery to the report.
TrainOutcome run_train(const PooledDataset& data, const RunConfig& config,
                       const GroundTruth* truth = nullptr);

// Same, reusing already trained probes.
TrainOutcome run_train_with_probes(const PooledDataset& data, std::vector<ProbeModel> probes,
                                   const RunConfig& config, const GroundTruth* truth = nullptr);

nlohmann::json train_report_json(const TrainOutcome& outcome, const RunConfig& config);
std::string train_report_text(const TrainOutcome& outcome);

inline const std::vector<double> kEtaGrid{0.2, 0.4, 0.6, 0.8, 0.9, 1.0};

struct AblationRow {
  std::string label;  // "adaptive", "uniform" or "eta=<value>"
  double eta = 0.0;
  AggregationMode aggregation = AggregationMode::kAdaptive;
  std::vector<std::size_t> selected;  // |S_l| per layer
  std::size_t feature_count = 0;
  double val_macro_f1 = 0.0;
};

// Adaptive and uniform at config.eta, then the eta grid under
// config.aggregation; probes are trained once and shared by every row.
std::vector<AblationRow> run_ablate(const PooledDataset& data, const RunConfig& config,
                                    const std::vector<double>& eta_grid = kEtaGrid);

std::string ablation_text(const std::vector<AblationRow>& rows);
std::string ablation_jsonl(const std::vector<AblationRow>& rows);

// Pools a token-level dataset; passes a pooled_only one through.
PooledDataset pooled_view(const ActivationDataset& dataset);

}  // namespace siren
