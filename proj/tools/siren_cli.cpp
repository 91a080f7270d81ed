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

// siren: command-line driver for training, ablation, scoring, streaming,
// attribution, FLOPs accounting, ensembling and synthetic data.
//
// Every command writes its machine-readable outputs under --out and prints a
// human-readable table to stdout. Settings come from --config (JSON), then
// command-line flags override the file.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <algorithm>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "siren/activation_store.hpp"
#include "siren/binary_io.hpp"
#include "siren/bundle.hpp"
#include "siren/efficiency.hpp"
#include "siren/ensemble.hpp"
#include "siren/error.hpp"
#include "siren/metrics.hpp"
#include "siren/pipeline.hpp"
#include "siren/streaming.hpp"
#include "siren/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using siren::Error;
using siren::ErrorKind;

// Flags shared by every subcommand.
struct Common {
  std::string config_path;
  std::string out = "siren_out";
  std::uint64_t seed = 42;
  CLI::Option* seed_opt = nullptr;
};

// Flags that feed RunConfig.
struct RunFlags {
  double eta = 0.8;
  std::string agg = "adaptive";
  std::vector<double> c_grid;
  double threshold = 0.5;
  int trials = 32;
  int folds = 3;
  CLI::Option* eta_opt = nullptr;
  CLI::Option* agg_opt = nullptr;
  CLI::Option* c_grid_opt = nullptr;
  CLI::Option* threshold_opt = nullptr;
  CLI::Option* trials_opt = nullptr;
  CLI::Option* folds_opt = nullptr;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file; flags override it");
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  c.seed_opt = cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  f.eta_opt = cmd->add_option("--eta", f.eta, "cumulative weight threshold in (0, 1]")
                  ->capture_default_str();
  f.agg_opt = cmd->add_option("--agg", f.agg, "layer aggregation")
                  ->check(CLI::IsMember({"adaptive", "uniform"}))
                  ->capture_default_str();
  f.c_grid_opt = cmd->add_option("--c-grid", f.c_grid, "probe inverse regularization grid")
                     ->delimiter(',');
  f.trials_opt = cmd->add_option("--trials", f.trials, "random search trials")->capture_default_str();
  f.folds_opt = cmd->add_option("--folds", f.folds, "cross-validation folds")->capture_default_str();
}

void add_threshold(CLI::App* cmd, RunFlags& f) {
  f.threshold_opt =
      cmd->add_option("--threshold", f.threshold, "decision threshold")->capture_default_str();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, path + ": " + e.what());
  }
}

// defaults < config file < flags.
siren::RunConfig resolve(const Common& c, const RunFlags& f) {
  siren::RunConfig rc;
  if (!c.config_path.empty()) siren::merge_run_config(rc, read_json_file(c.config_path));
  if (c.seed_opt != nullptr && c.seed_opt->count() > 0) rc.seed = c.seed;
  if (f.eta_opt != nullptr && f.eta_opt->count() > 0) rc.eta = f.eta;
  if (f.agg_opt != nullptr && f.agg_opt->count() > 0) rc.aggregation = siren::parse_aggregation_mode(f.agg);
  if (f.c_grid_opt != nullptr && f.c_grid_opt->count() > 0) rc.probe.c_grid = f.c_grid;
  if (f.trials_opt != nullptr && f.trials_opt->count() > 0) rc.search.trials = f.trials;
  if (f.folds_opt != nullptr && f.folds_opt->count() > 0) rc.search.cv_folds = f.folds;
  if (f.threshold_opt != nullptr && f.threshold_opt->count() > 0) rc.threshold = f.threshold;
  rc.apply_seed();
  rc.validate();
  return rc;
}

template <typename F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    siren::rethrow_with_context(e, "stage " + name);
  }
}

fs::path out_dir(const Common& c) {
  fs::create_directories(c.out);
  return fs::path(c.out);
}

void write_out(const fs::path& path, const std::string& text) { siren::io::write_text(path, text); }

std::optional<siren::Split> parse_split(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "train") return siren::Split::kTrain;
  if (s == "validation") return siren::Split::kValidation;
  if (s == "test") return siren::Split::kTest;
  throw Error(ErrorKind::kInvalidArgument, "unknown split '" + s + "'");
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  Common common;
  RunFlags run;
  std::string data;
  std::string truth;
};

int cmd_train(const TrainArgs& a) {
  const auto config = resolve(a.common, a.run);
  const auto dataset = stage("load", [&] { return siren::read_dataset(a.data); });
  const auto pooled = stage("pool", [&] { return siren::pooled_view(dataset); });
  std::optional<siren::GroundTruth> truth;
  if (!a.truth.empty()) {
    truth = stage("load", [&] { return siren::truth_from_json(read_json_file(a.truth)); });
  }
  const auto outcome = siren::run_train(pooled, config, truth ? &*truth : nullptr);
  const auto dir = out_dir(a.common);
  siren::save_bundle(outcome.bundle, dir / "bundle.sbnd");
  write_out(dir / "probes.json", siren::probes_to_json(outcome.probes).dump(2) + "\n");
  write_out(dir / "selection.json",
            siren::selection_to_json(outcome.bundle.selection).dump(2) + "\n");
  const json report = siren::train_report_json(outcome, config);
  write_out(dir / "train_report.json", report.dump(2) + "\n");
  std::string layers;
  for (const auto& l : report.at("layers")) layers += l.dump() + "\n";
  write_out(dir / "train_layers.jsonl", layers);
  std::string trials;
  for (std::size_t t = 0; t < outcome.search.trials.size(); ++t) {
    const auto& tr = outcome.search.trials[t];
    trials += json{{"trial", t},
                   {"hidden_layers", tr.config.hidden_layers},
                   {"hidden_width", tr.config.hidden_width},
                   {"dropout", tr.config.dropout},
                   {"learning_rate", tr.config.learning_rate},
                   {"fold_scores", tr.fold_scores},
                   {"cv_macro_f1", tr.cv_score},
                   {"failure", tr.failure}}
                  .dump() +
              "\n";
  }
  write_out(dir / "search_trials.jsonl", trials);
  const auto text = siren::train_report_text(outcome);
  write_out(dir / "train_report.txt", text);
  std::cout << text;
  return 0;
}

// --------------------------------------------------------------- ablate

int cmd_ablate(const TrainArgs& a) {
  const auto config = resolve(a.common, a.run);
  const auto dataset = stage("load", [&] { return siren::read_dataset(a.data); });
  const auto pooled = stage("pool", [&] { return siren::pooled_view(dataset); });
  const auto rows = siren::run_ablate(pooled, config);
  const auto dir = out_dir(a.common);
  const auto text = siren::ablation_text(rows);
  write_out(dir / "ablation.txt", text);
  write_out(dir / "ablation.jsonl", siren::ablation_jsonl(rows));
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------- score

struct ScoreArgs {
  Common common;
  RunFlags run;
  std::string bundle;
  std::string data;
  std::string split = "all";
};

int cmd_score(const ScoreArgs& a) {
  const auto config = resolve(a.common, a.run);
  const auto bundle = stage("load", [&] { return siren::load_bundle(a.bundle); });
  const auto dataset = stage("load", [&] { return siren::read_dataset(a.data); });
  const auto pooled = stage("pool", [&] { return siren::pooled_view(dataset); });
  const auto only = parse_split(a.split);
  const auto scored = stage("score", [&] {
    return siren::score_dataset(bundle, pooled, only ? &*only : nullptr);
  });
  std::string lines;
  std::vector<int> pred, labels;
  for (const auto& s : scored) {
    const int p = s.prob_harmful >= config.threshold ? 1 : 0;
    pred.push_back(p);
    labels.push_back(s.label);
    lines += json{{"example_id", s.example_id},
                  {"split", siren::to_string(s.split)},
                  {"label", s.label},
                  {"logits", s.logits},
                  {"prob_harmful", s.prob_harmful},
                  {"prediction", p}}
                 .dump() +
             "\n";
  }
  if (scored.empty()) throw Error(ErrorKind::kNoExamples, "stage score: no examples in split " + a.split);
  const auto pr = siren::precision_recall(pred, labels, 1);
  const double f1 = siren::macro_f1(pred, labels);
  const json summary = {{"split", a.split},
                        {"examples", scored.size()},
                        {"threshold", config.threshold},
                        {"macro_f1", f1},
                        {"precision_harmful", pr.precision},
                        {"recall_harmful", pr.recall}};
  const auto dir = out_dir(a.common);
  write_out(dir / "scores.jsonl", lines);
  write_out(dir / "score_summary.json", summary.dump(2) + "\n");
  std::printf("split: %s  examples: %zu  threshold: %.3f\nmacro F1: %.4f  precision: %.4f  recall: %.4f\n",
              a.split.c_str(), scored.size(), config.threshold, f1, pr.precision, pr.recall);
  return 0;
}

// --------------------------------------------------------------- stream

struct StreamArgs {
  Common common;
  RunFlags run;
  std::string bundle;
  std::string data;
  std::string annotations;
  std::string split = "all";
};

int cmd_stream(const StreamArgs& a) {
  const auto config = resolve(a.common, a.run);
  const auto bundle = stage("load", [&] { return siren::load_bundle(a.bundle); });
  const auto dataset = stage("load", [&] { return siren::read_dataset(a.data); });
  const auto only = parse_split(a.split);
  const auto threshold = siren::ThresholdSchedule::constant(config.threshold);
  const auto traces = stage("stream", [&] {
    return siren::stream_dataset(dataset, bundle, threshold, only ? &*only : nullptr);
  });
  std::string lines;
  std::size_t flagged = 0;
  for (const auto& t : traces) {
    lines += siren::trace_to_json(t).dump() + "\n";
    flagged += t.flagged_at.has_value() ? 1 : 0;
  }
  const auto dir = out_dir(a.common);
  write_out(dir / "traces.jsonl", lines);
  std::printf("sequences: %zu  flagged: %zu  threshold: %.3f\n", traces.size(), flagged,
              config.threshold);
  if (!a.annotations.empty()) {
    const auto ann = stage("load", [&] { return siren::read_annotations(a.annotations); });
    const auto report = stage("latency", [&] { return siren::latency_eval(traces, ann); });
    write_out(dir / "latency.json", siren::latency_to_json(report).dump(2) + "\n");
    std::printf("offset  detection_rate  (evaluated %zu, missing annotations %zu)\n",
                report.evaluated, report.missing_annotations);
    for (std::size_t k = 0; k < report.offsets.size(); ++k) {
      std::printf("%6zu  %14.4f\n", report.offsets[k], report.rates[k]);
    }
  }
  return 0;
}

// ------------------------------------------------------------ attribute

struct AttributeArgs {
  Common common;
  RunFlags run;
  std::string bundle;
  std::string data;
  std::vector<std::string> examples;
};

int cmd_attribute(const AttributeArgs& a) {
  const auto config = resolve(a.common, a.run);
  const auto bundle = stage("load", [&] { return siren::load_bundle(a.bundle); });
  const auto dataset = stage("load", [&] { return siren::read_dataset(a.data); });
  std::vector<const siren::ExampleRecord*> picked;
  for (const auto& r : dataset.records) {
    if (a.examples.empty() ||
        std::find(a.examples.begin(), a.examples.end(), r.example_id) != a.examples.end()) {
      picked.push_back(&r);
    }
  }
  for (const auto& id : a.examples) {
    const bool found = std::any_of(picked.begin(), picked.end(),
                                   [&](const auto* r) { return r->example_id == id; });
    if (!found) throw Error(ErrorKind::kInvalidArgument, "stage attribute: unknown example '" + id + "'");
  }
  std::string lines;
  std::printf("example_id        tokens  max_score  tokens>=threshold\n");
  for (const auto* r : picked) {
    const auto scores = stage("attribute", [&] {
      return siren::token_attribution(*r, dataset.manifest, bundle);
    });
    std::size_t above = 0;
    double mx = 0.0;
    for (double s : scores) {
      above += s >= config.threshold ? 1 : 0;
      mx = std::max(mx, s);
    }
    lines += json{{"example_id", r->example_id}, {"label", r->label}, {"scores", scores}}.dump() + "\n";
    std::printf("%-16s  %6zu  %9.4f  %17zu\n", r->example_id.c_str(), scores.size(), mx, above);
  }
  write_out(out_dir(a.common) / "attribution.jsonl", lines);
  return 0;
}

// ---------------------------------------------------------------- flops

struct FlopsArgs {
  Common common;
  siren::GuardCostSpec guard{28, 512, 2048, 4000000000ULL, 4};
  std::string mlp;
  std::string bundle;
  std::map<std::string, CLI::Option*> opts;
};

siren::SirenCostSpec parse_mlp_dims(const std::string& s) {
  siren::SirenCostSpec spec;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto x = item.find('x');
    if (x == std::string::npos) throw Error(ErrorKind::kParse, "MLP dims must look like 10x4,4x2");
    try {
      spec.layer_dims.emplace_back(std::stoull(item.substr(0, x)), std::stoull(item.substr(x + 1)));
    } catch (const std::exception&) {
      throw Error(ErrorKind::kParse, "bad MLP dimension '" + item + "'");
    }
  }
  return spec;
}

int cmd_flops(const FlopsArgs& a) {
  siren::GuardCostSpec guard = a.guard;
  std::string mlp_dims = a.mlp;
  if (!a.common.config_path.empty()) {
    const json file = read_json_file(a.common.config_path);
    const json j = file.contains("flops") ? file.at("flops") : file;
    // The file only fills keys whose flag was not given.
    auto take = [&](const char* key, auto& field) {
      if (j.contains(key) && a.opts.at(key)->count() == 0) {
        try {
          j.at(key).get_to(field);
        } catch (const json::exception& e) {
          throw Error(ErrorKind::kParse, std::string("config ") + key + ": " + e.what());
        }
      }
    };
    take("layers", guard.num_layers);
    take("seq_len", guard.input_length);
    take("hidden", guard.hidden_dim);
    take("params", guard.total_params);
    take("gen_tokens", guard.generated_tokens);
    take("mlp", mlp_dims);
  }
  siren::SirenCostSpec mlp;
  if (!a.bundle.empty()) {
    mlp = siren::SirenCostSpec::from_architecture(
        stage("load", [&] { return siren::load_bundle(a.bundle); }).model.architecture);
  } else if (!mlp_dims.empty()) {
    mlp = parse_mlp_dims(mlp_dims);
  }
  const auto report = stage("flops", [&] { return siren::cost_report(guard, mlp); });
  const auto dir = out_dir(a.common);
  const auto text = siren::format_cost_report(report);
  write_out(dir / "flops.txt", text);
  write_out(dir / "flops.json", siren::cost_report_to_json(report).dump(2) + "\n");
  std::cout << text;
  return 0;
}

// ------------------------------------------------------------- ensemble

struct EnsembleArgs {
  Common common;
  RunFlags run;
  std::vector<std::string> bundles;
  std::vector<std::string> data;
  std::string ensemble;
};

int cmd_ensemble(const EnsembleArgs& a) {
  const auto config = resolve(a.common, a.run);
  if (a.bundles.size() != a.data.size()) {
    throw Error(ErrorKind::kInvalidArgument, "give one --data per --bundle");
  }
  std::vector<siren::MemberLogits> meta_train, held_out;
  for (std::size_t k = 0; k < a.bundles.size(); ++k) {
    const auto bundle = stage("load", [&] { return siren::load_bundle(a.bundles[k]); });
    const auto digest = siren::bundle_file_digest(a.bundles[k]);
    const auto dataset = stage("load", [&] { return siren::read_dataset(a.data[k]); });
    const auto pooled = stage("pool", [&] { return siren::pooled_view(dataset); });
    const auto name = fs::path(a.bundles[k]).filename().string();
    meta_train.push_back(siren::member_logits(bundle, pooled, siren::Split::kValidation, name, digest));
    held_out.push_back(siren::member_logits(bundle, pooled, siren::Split::kTest, name, digest));
  }
  const auto dir = out_dir(a.common);
  siren::StackedEnsemble ens;
  if (a.ensemble.empty()) {
    siren::EnsembleConfig ec;
    ec.optimizer = config.optimizer;
    ens = stage("ensemble", [&] { return siren::stack_train(meta_train, ec); });
    siren::save_ensemble(ens, dir / "ensemble.sens");
  } else {
    ens = stage("load", [&] { return siren::load_ensemble(a.ensemble); });
    std::vector<fs::path> paths(a.bundles.begin(), a.bundles.end());
    stage("verify", [&] {
      siren::verify_members(ens, paths);
      return 0;
    });
  }
  const auto inputs = stage("ensemble", [&] { return siren::stack_inputs(held_out); });
  const auto probs = siren::stack_predict(ens, inputs);
  std::vector<int> pred;
  std::string lines;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    pred.push_back(probs[i] >= config.threshold ? 1 : 0);
    lines += json{{"example_id", inputs.example_ids[i]},
                  {"label", inputs.labels[i]},
                  {"prob_harmful", probs[i]},
                  {"prediction", pred.back()}}
                 .dump() +
             "\n";
  }
  if (probs.empty()) throw Error(ErrorKind::kNoExamples, "stage ensemble: empty test split");
  json members = json::array();
  std::printf("member                     test macro F1\n");
  for (std::size_t k = 0; k < held_out.size(); ++k) {
    std::vector<int> mp;
    for (const auto& l : held_out[k].logits) {
      mp.push_back(siren::prob_harmful_from_logits(l[0], l[1]) >= config.threshold ? 1 : 0);
    }
    const double f1 = siren::macro_f1(mp, held_out[k].labels);
    members.push_back({{"name", held_out[k].name}, {"digest", held_out[k].bundle_digest}, {"test_macro_f1", f1}});
    std::printf("%-25s  %13.4f\n", held_out[k].name.c_str(), f1);
  }
  const double f1 = siren::macro_f1(pred, inputs.labels);
  std::printf("%-25s  %13.4f\n", "stacked", f1);
  write_out(dir / "ensemble_predictions.jsonl", lines);
  write_out(dir / "ensemble_report.json",
            json{{"members", members}, {"test_examples", probs.size()}, {"stacked_test_macro_f1", f1}}
                    .dump(2) +
                "\n");
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  Common common;
  std::string spec_path;
  std::string mode;
  std::size_t tokens = 0;
  std::size_t switch_at = 0;
  double mu = -1.0;
  std::size_t examples = 0;
  std::string stem = "synth";
  std::vector<double> splits;
  bool complementary = false;
};

int cmd_synth(const SynthArgs& a) {
  siren::SynthSpec spec = siren::canonical_spec();
  if (!a.common.config_path.empty()) {
    const json j = read_json_file(a.common.config_path);
    if (j.contains("synth")) spec = siren::spec_from_json(j.at("synth"));
  }
  if (!a.spec_path.empty()) spec = siren::spec_from_json(read_json_file(a.spec_path));
  if (a.common.seed_opt->count() > 0) spec.seed = a.common.seed;
  if (a.examples > 0) spec.num_examples = a.examples;
  if (a.mu >= 0.0) {
    for (auto& [layer, mu] : spec.informativeness) {
      if (spec.planted.contains(layer)) mu = a.mu;
    }
  }
  if (!a.mode.empty()) spec.mode = siren::parse_synth_mode(a.mode);
  if (!a.splits.empty()) {
    if (a.splits.size() != 3) throw Error(ErrorKind::kInvalidArgument, "--splits takes train,val,test");
    spec.splits = {a.splits[0], a.splits[1], a.splits[2]};
  } else if (a.complementary && spec.splits.test == 0.0) {
    // Ensembles are fit on validation and evaluated on test.
    spec.splits = {0.6, 0.2, 0.2};
  }
  if (spec.mode == siren::SynthMode::kPooled) {
    spec.tokens = 1;
  } else {
    if (a.tokens > 0) spec.tokens = a.tokens;
    if (spec.tokens == 1) spec.tokens = 32;
    if (a.switch_at > 0) spec.switch_at = a.switch_at;
    if (spec.mode == siren::SynthMode::kSwitching && a.switch_at == 0) spec.switch_at = spec.tokens / 2;
  }
  const auto dir = out_dir(a.common);
  if (a.complementary) {
    siren::SynthSpec spec_b = spec;
    spec_b.seed = spec.seed + 1;
    spec_b.planted.clear();
    spec_b.informativeness.clear();
    std::vector<int> layers;
    double mu = 2.0;
    for (const auto& [layer, idx] : spec.planted) {
      layers.push_back(layer);
      mu = spec.mu(layer);
    }
    siren::plant_random(spec_b, layers, spec.planted.empty() ? 5 : spec.planted.begin()->second.size(),
                        mu, spec_b.seed);
    const auto out = stage("synth", [&] { return siren::generate_complementary(spec, spec_b); });
    siren::write_dataset(out.view_a, dir / (a.stem + "_a.sact"));
    siren::write_dataset(out.view_b, dir / (a.stem + "_b.sact"));
    write_out(dir / (a.stem + "_a.truth.json"), siren::truth_to_json(out.truth_a).dump(2) + "\n");
    write_out(dir / (a.stem + "_b.truth.json"), siren::truth_to_json(out.truth_b).dump(2) + "\n");
    std::printf("wrote %s_a.sact and %s_b.sact: %zu examples\n", a.stem.c_str(), a.stem.c_str(),
                out.view_a.records.size());
  } else {
    const auto out = stage("synth", [&] { return siren::generate(spec); });
    siren::write_synth(out, dir, a.stem);
    std::size_t harmful = 0;
    for (const auto& r : out.dataset.records) harmful += r.label;
    std::printf("wrote %s.sact: %zu examples (%zu harmful), L=%d, mode=%s, T=%zu\n", a.stem.c_str(),
                out.dataset.records.size(), harmful, spec.num_layers,
                siren::to_string(spec.mode).c_str(), spec.tokens);
    std::string planted;
    for (const auto& [layer, idx] : spec.planted) {
      planted += " layer " + std::to_string(layer) + ": " + std::to_string(idx.size()) + " (mu " +
                 std::to_string(spec.mu(layer)) + ")";
    }
    std::printf("planted:%s\n", planted.empty() ? " none" : planted.c_str());
  }
  write_out(dir / (a.stem + ".spec.json"), siren::spec_to_json(spec).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"siren: sparse-neuron harmfulness detector toolkit"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "probe, select, aggregate and fit a bundle");
  add_common(c_train, train.common);
  add_run_flags(c_train, train.run);
  c_train->add_option("--data", train.data, "activation container")->required();
  c_train->add_option("--truth", train.truth, "synthetic ground-truth sidecar");

  TrainArgs ablate;
  auto* c_ablate = app.add_subcommand("ablate", "adaptive vs uniform and the eta grid");
  add_common(c_ablate, ablate.common);
  add_run_flags(c_ablate, ablate.run);
  c_ablate->add_option("--data", ablate.data, "activation container")->required();

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "score pooled examples with a bundle");
  add_common(c_score, score.common);
  add_threshold(c_score, score.run);
  c_score->add_option("--bundle", score.bundle)->required();
  c_score->add_option("--data", score.data)->required();
  c_score->add_option("--split", score.split, "train, validation, test or all")->capture_default_str();

  StreamArgs stream;
  auto* c_stream = app.add_subcommand("stream", "prefix scores over token positions");
  add_common(c_stream, stream.common);
  add_threshold(c_stream, stream.run);
  c_stream->add_option("--bundle", stream.bundle)->required();
  c_stream->add_option("--data", stream.data, "token-level activation container")->required();
  c_stream->add_option("--annotations", stream.annotations, "JSONL unsafe-span boundaries");
  c_stream->add_option("--split", stream.split)->capture_default_str();

  AttributeArgs attribute;
  auto* c_attr = app.add_subcommand("attribute", "per-token harmfulness scores");
  add_common(c_attr, attribute.common);
  add_threshold(c_attr, attribute.run);
  c_attr->add_option("--bundle", attribute.bundle)->required();
  c_attr->add_option("--data", attribute.data)->required();
  c_attr->add_option("--example", attribute.examples, "example id (repeatable; default all)");

  FlopsArgs flops;
  auto* c_flops = app.add_subcommand("flops", "guard vs detector inference FLOPs");
  add_common(c_flops, flops.common);
  flops.opts["layers"] =
      c_flops->add_option("--layers", flops.guard.num_layers, "guard L")->capture_default_str();
  flops.opts["seq_len"] =
      c_flops->add_option("--seq-len", flops.guard.input_length, "input tokens S")->capture_default_str();
  flops.opts["hidden"] =
      c_flops->add_option("--hidden", flops.guard.hidden_dim, "hidden size D_h")->capture_default_str();
  flops.opts["params"] =
      c_flops->add_option("--params", flops.guard.total_params, "guard parameters")->capture_default_str();
  flops.opts["gen_tokens"] =
      c_flops->add_option("--gen-tokens", flops.guard.generated_tokens, "generated tokens K")
          ->capture_default_str();
  flops.opts["mlp"] = c_flops->add_option("--mlp", flops.mlp, "MLP dims, e.g. 10x4,4x2");
  c_flops->add_option("--bundle", flops.bundle, "take MLP dims from a bundle");

  EnsembleArgs ensemble;
  auto* c_ens = app.add_subcommand("ensemble", "stack bundles with a meta-MLP");
  add_common(c_ens, ensemble.common);
  add_threshold(c_ens, ensemble.run);
  c_ens->add_option("--bundle", ensemble.bundles, "member bundle (repeatable)")->required();
  c_ens->add_option("--data", ensemble.data, "member dataset, one per bundle")->required();
  c_ens->add_option("--ensemble", ensemble.ensemble, "evaluate an existing ensemble file");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic activation dataset");
  add_common(c_synth, synth.common);
  c_synth->add_option("--spec", synth.spec_path, "synth spec JSON (default: canonical)");
  c_synth->add_option("--mode", synth.mode)->check(CLI::IsMember({"pooled", "token_level", "switching"}));
  c_synth->add_option("--tokens", synth.tokens, "T for token-level modes");
  c_synth->add_option("--switch-at", synth.switch_at, "t* for switching mode (default T/2)");
  c_synth->add_option("--mu", synth.mu, "signal strength for planted layers");
  c_synth->add_option("--examples", synth.examples, "number of examples");
  c_synth->add_option("--stem", synth.stem, "output file stem")->capture_default_str();
  c_synth->add_option("--splits", synth.splits, "train,validation,test fractions")->delimiter(',');
  c_synth->add_flag("--complementary", synth.complementary, "two views with disjoint signals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) std::cerr << "\n" << app.help();
    return code;
  }

  auto* cmd = app.get_subcommands().front();
  try {
    if (cmd == c_train) return cmd_train(train);
    if (cmd == c_ablate) return cmd_ablate(ablate);
    if (cmd == c_score) return cmd_score(score);
    if (cmd == c_stream) return cmd_stream(stream);
    if (cmd == c_attr) return cmd_attribute(attribute);
    if (cmd == c_flops) return cmd_flops(flops);
    if (cmd == c_ens) return cmd_ensemble(ensemble);
    if (cmd == c_synth) return cmd_synth(synth);
  } catch (const Error& e) {
    std::cerr << "siren " << cmd->get_name() << ": " << siren::to_string(e.kind()) << ": "
              << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "siren " << cmd->get_name() << ": " << e.what() << "\n";
    return 2;
  }
  return 1;
}
