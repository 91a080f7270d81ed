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

#include "siren/pipeline.hpp"

#include <cstdio>

#include "siren/error.hpp"
#include "siren/metrics.hpp"

namespace siren {

using nlohmann::json;

void RunConfig::apply_seed() {
  probe.seed = seed;
  search.seed = seed;
  optimizer.seed = seed;
}

void RunConfig::validate() const {
  if (!(eta > 0.0 && eta <= 1.0)) throw Error(ErrorKind::kInvalidArgument, "eta must be in (0, 1]");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "threshold must be in [0, 1]");
  }
  siren::validate(probe);
  search.validate();
}

json run_config_to_json(const RunConfig& c) {
  return {{"eta", c.eta},
          {"agg", to_string(c.aggregation)},
          {"c_grid", c.probe.c_grid},
          {"probe_max_iters", c.probe.max_iters},
          {"probe_patience", c.probe.patience},
          {"trials", c.search.trials},
          {"folds", c.search.cv_folds},
          {"hidden_layers", c.search.hidden_layers},
          {"hidden_min", c.search.hidden_min},
          {"hidden_max", c.search.hidden_max},
          {"dropout_min", c.search.dropout_min},
          {"dropout_max", c.search.dropout_max},
          {"lr_min", c.search.lr_min},
          {"lr_max", c.search.lr_max},
          {"batch_size", c.optimizer.batch_size},
          {"max_epochs", c.optimizer.max_epochs},
          {"patience", c.optimizer.patience},
          {"threshold", c.threshold},
          {"seed", c.seed}};
}

void merge_run_config(RunConfig& c, const json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorKind::kParse, "config must be a JSON object");
    c.eta = j.value("eta", c.eta);
    if (j.contains("agg")) c.aggregation = parse_aggregation_mode(j.at("agg").get<std::string>());
    c.probe.c_grid = j.value("c_grid", c.probe.c_grid);
    c.probe.max_iters = j.value("probe_max_iters", c.probe.max_iters);
    c.probe.patience = j.value("probe_patience", c.probe.patience);
    c.search.trials = j.value("trials", c.search.trials);
    c.search.cv_folds = j.value("folds", c.search.cv_folds);
    c.search.hidden_layers = j.value("hidden_layers", c.search.hidden_layers);
    c.search.hidden_min = j.value("hidden_min", c.search.hidden_min);
    c.search.hidden_max = j.value("hidden_max", c.search.hidden_max);
    c.search.dropout_min = j.value("dropout_min", c.search.dropout_min);
    c.search.dropout_max = j.value("dropout_max", c.search.dropout_max);
    c.search.lr_min = j.value("lr_min", c.search.lr_min);
    c.search.lr_max = j.value("lr_max", c.search.lr_max);
    c.optimizer.batch_size = j.value("batch_size", c.optimizer.batch_size);
    c.optimizer.max_epochs = j.value("max_epochs", c.optimizer.max_epochs);
    c.optimizer.patience = j.value("patience", c.optimizer.patience);
    c.threshold = j.value("threshold", c.threshold);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("config: ") + e.what());
  }
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_with_context(e, std::string("stage ") + name);
  }
}

double split_macro_f1(const MlpModel& model, const FeatureMatrix& fm, Split split) {
  const auto part = fm.subset(split);
  if (part.labels.empty()) return 0.0;
  const auto pred = mlp_predict(model, part.features);
  return macro_f1(pred, part.labels);
}

}  // namespace

TrainOutcome run_train(const PooledDataset& data, const RunConfig& config, const GroundTruth* truth) {
  config.validate();
  auto probes = stage("probes", [&] { return train_all_probes(data, config.probe); });
  return run_train_with_probes(data, std::move(probes), config, truth);
}

TrainOutcome run_train_with_probes(const PooledDataset& data, std::vector<ProbeModel> probes,
                                   const RunConfig& config, const GroundTruth* truth) {
  config.validate();
  TrainOutcome out;
  out.probes = std::move(probes);
  auto selection = stage("select", [&] { return select_safety_neurons(out.probes, config.eta); });
  auto weighting =
      stage("aggregate", [&] { return make_weighting(config.aggregation, selection.val_f1()); });
  const auto fm =
      stage("features", [&] { return build_feature_matrix(data, selection, weighting); });
  out.search = stage("search", [&] { return hyperparameter_search(fm, config.search, config.optimizer); });
  json provenance = {{"dataset", data.manifest.dataset_name},
                     {"backbone", data.manifest.backbone_name},
                     {"config", run_config_to_json(config)},
                     {"best_trial", out.search.best_trial},
                     {"cv_score", out.search.best_cv_score}};
  out.bundle = stage("bundle", [&] {
    return make_bundle(selection, weighting, out.search.model, std::move(provenance));
  });
  out.val_macro_f1 = split_macro_f1(out.bundle.model, fm, Split::kValidation);
  out.feature_count = out.bundle.layout.size();

  std::map<int, double> recovery;
  if (truth != nullptr) recovery = score_recovery(out.bundle.selection, *truth);
  for (std::size_t l = 0; l < out.bundle.selection.layers.size(); ++l) {
    const auto& ls = out.bundle.selection.layers[l];
    LayerReport r;
    r.layer_index = ls.layer_index;
    r.probe_f1 = ls.val_f1;
    r.chosen_c = out.probes[l].chosen_c;
    r.selected = ls.neurons.size();
    r.alpha = out.bundle.weighting.alpha[l];
    r.dropped = ls.dropped;
    if (const auto it = recovery.find(ls.layer_index); it != recovery.end()) r.recovery = it->second;
    out.layers.push_back(r);
  }
  return out;
}

json train_report_json(const TrainOutcome& o, const RunConfig& config) {
  json layers = json::array();
  for (const auto& l : o.layers) {
    layers.push_back({{"layer", l.layer_index},
                      {"probe_f1", l.probe_f1},
                      {"chosen_c", l.chosen_c},
                      {"selected", l.selected},
                      {"alpha", l.alpha},
                      {"dropped", l.dropped},
                      {"recovery", l.recovery ? json(*l.recovery) : json(nullptr)}});
  }
  const auto& best = o.search.best;
  return {{"config", run_config_to_json(config)},
          {"layers", layers},
          {"feature_count", o.feature_count},
          {"best_trial",
           {{"index", o.search.best_trial},
            {"hidden_layers", best.hidden_layers},
            {"hidden_width", best.hidden_width},
            {"dropout", best.dropout},
            {"learning_rate", best.learning_rate},
            {"cv_macro_f1", o.search.best_cv_score}}},
          {"epochs_run", o.bundle.model.meta.epochs_run},
          {"val_macro_f1", o.val_macro_f1}};
}

std::string train_report_text(const TrainOutcome& o) {
  std::string s;
  char line[200];
  s += "layer  probe_f1  C          |S_l|  alpha   recovery\n";
  for (const auto& l : o.layers) {
    char rec[16] = "-";
    if (l.recovery) std::snprintf(rec, sizeof(rec), "%.3f", *l.recovery);
    std::snprintf(line, sizeof(line), "%5d  %8.4f  %-9g  %5zu  %6.4f  %s%s\n", l.layer_index,
                  l.probe_f1, l.chosen_c, l.selected, l.alpha, rec, l.dropped ? "  (dropped)" : "");
    s += line;
  }
  const auto& b = o.search.best;
  std::snprintf(line, sizeof(line),
                "features: %zu\nbest trial: #%zu  layers=%d width=%zu dropout=%.3f lr=%.2e  cv "
                "macro F1=%.4f\nvalidation macro F1: %.4f\n",
                o.feature_count, o.search.best_trial, b.hidden_layers, b.hidden_width, b.dropout,
                b.learning_rate, o.search.best_cv_score, o.val_macro_f1);
  s += line;
  return s;
}

std::vector<AblationRow> run_ablate(const PooledDataset& data, const RunConfig& config,
                                    const std::vector<double>& eta_grid) {
  config.validate();
  const auto probes = stage("probes", [&] { return train_all_probes(data, config.probe); });
  std::vector<AblationRow> rows;
  auto run = [&](std::string label, double eta, AggregationMode mode) {
    RunConfig c = config;
    c.eta = eta;
    c.aggregation = mode;
    const auto o = run_train_with_probes(data, probes, c);
    AblationRow r{std::move(label), eta, mode, {}, o.feature_count, o.val_macro_f1};
    for (const auto& l : o.layers) r.selected.push_back(l.selected);
    rows.push_back(std::move(r));
  };
  run("adaptive", config.eta, AggregationMode::kAdaptive);
  run("uniform", config.eta, AggregationMode::kUniform);
  for (double eta : eta_grid) {
    char label[32];
    std::snprintf(label, sizeof(label), "eta=%g", eta);
    run(label, eta, config.aggregation);
  }
  return rows;
}

std::string ablation_text(const std::vector<AblationRow>& rows) {
  std::string s = "row        eta    agg       features  val_macro_f1  |S_l|\n";
  char line[200];
  for (const auto& r : rows) {
    std::string sizes;
    for (std::size_t k : r.selected) sizes += (sizes.empty() ? "" : ",") + std::to_string(k);
    std::snprintf(line, sizeof(line), "%-9s  %4.2f  %-8s  %8zu  %12.4f  %s\n", r.label.c_str(),
                  r.eta, to_string(r.aggregation).c_str(), r.feature_count, r.val_macro_f1,
                  sizes.c_str());
    s += line;
  }
  return s;
}

std::string ablation_jsonl(const std::vector<AblationRow>& rows) {
  std::string s;
  for (const auto& r : rows) {
    s += json{{"row", r.label},
              {"eta", r.eta},
              {"agg", to_string(r.aggregation)},
              {"selected", r.selected},
              {"feature_count", r.feature_count},
              {"val_macro_f1", r.val_macro_f1}}
             .dump();
    s += '\n';
  }
  return s;
}

PooledDataset pooled_view(const ActivationDataset& dataset) { return pool_dataset(dataset); }

}  // namespace siren
