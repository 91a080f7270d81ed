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

#include "siren/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "siren/binary_io.hpp"
#include "siren/error.hpp"

namespace siren {

using nlohmann::json;

std::string to_string(SynthMode mode) {
  switch (mode) {
    case SynthMode::kPooled: return "pooled";
    case SynthMode::kTokenLevel: return "token_level";
    case SynthMode::kSwitching: return "switching";
  }
  return "pooled";
}

SynthMode parse_synth_mode(const std::string& s) {
  if (s == "pooled") return SynthMode::kPooled;
  if (s == "token_level") return SynthMode::kTokenLevel;
  if (s == "switching") return SynthMode::kSwitching;
  throw Error(ErrorKind::kInvalidArgument, "unknown synth mode '" + s + "'");
}

void SynthSpec::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::kInvalidArgument, "synth: " + m); };
  if (num_layers < 1) bad("num_layers must be >= 1");
  if (widths.size() != static_cast<std::size_t>(num_layers)) bad("need one width per layer");
  for (std::size_t w : widths) {
    if (w == 0) bad("layer width must be positive");
  }
  if (num_examples == 0) bad("num_examples must be positive");
  if (!(label_balance > 0.0 && label_balance < 1.0)) bad("label_balance must be in (0, 1)");
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) bad("noise_std must be >= 0");
  for (const auto& [layer, idx] : planted) {
    if (layer < 1 || layer > num_layers) bad("planted layer " + std::to_string(layer) + " out of range");
    std::set<std::size_t> seen;
    for (std::size_t j : idx) {
      if (j >= widths[static_cast<std::size_t>(layer - 1)]) {
        bad("planted neuron " + std::to_string(j) + " >= D in layer " + std::to_string(layer));
      }
      if (!seen.insert(j).second) bad("duplicate planted neuron " + std::to_string(j));
    }
  }
  for (const auto& [layer, m] : informativeness) {
    if (layer < 1 || layer > num_layers) bad("informativeness layer out of range");
    if (!(m >= 0.0) || !std::isfinite(m)) bad("informativeness must be >= 0");
  }
  if (mode == SynthMode::kPooled && tokens != 1) bad("pooled mode has T = 1");
  if (tokens == 0) bad("T must be positive");
  if (mode == SynthMode::kSwitching && (switch_at < 1 || switch_at > tokens)) {
    bad("switch position must be in [1, T]");
  }
  const double total = splits.train + splits.validation + splits.test;
  if (splits.train < 0 || splits.validation < 0 || splits.test < 0 || std::abs(total - 1.0) > 1e-9) {
    bad("split fractions must be non-negative and sum to 1");
  }
}

double SynthSpec::mu(int layer) const {
  const auto it = informativeness.find(layer);
  return it == informativeness.end() ? 0.0 : it->second;
}

void plant_random(SynthSpec& spec, const std::vector<int>& layers, std::size_t count, double mu,
                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (int layer : layers) {
    if (layer < 1 || layer > spec.num_layers) {
      throw Error(ErrorKind::kInvalidArgument, "plant_random: layer out of range");
    }
    const std::size_t d = spec.widths[static_cast<std::size_t>(layer - 1)];
    if (count > d) throw Error(ErrorKind::kInvalidArgument, "plant_random: count > D");
    std::vector<std::size_t> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    spec.planted[layer] = idx;
    spec.informativeness[layer] = mu;
  }
}

SynthSpec canonical_spec() {
  SynthSpec s;
  plant_random(s, {2, 3}, 5, 2.0, s.seed);
  s.informativeness[1] = 0.0;
  s.informativeness[4] = 0.0;
  return s;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ splitmix64(stream)) + index);
}

std::map<int, std::vector<int>> draw_signs(const SynthSpec& spec) {
  std::mt19937_64 rng(derive_seed(spec.seed, 3, 0));
  std::map<int, std::vector<int>> signs;
  for (const auto& [layer, idx] : spec.planted) {
    auto& s = signs[layer];
    for (std::size_t k = 0; k < idx.size(); ++k) s.push_back((rng() & 1U) ? 1 : -1);
  }
  return signs;
}

std::vector<Split> assign_splits(const SynthSpec& spec) {
  const std::size_t n = spec.num_examples;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(spec.seed, 2, 0));
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(spec.splits.train * static_cast<double>(n)));
  const auto n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(spec.splits.validation * static_cast<double>(n))));
  std::vector<Split> split(n, Split::kTest);
  for (std::size_t k = 0; k < n; ++k) {
    split[order[k]] = k < n_train ? Split::kTrain : (k < n_train + n_val ? Split::kValidation : Split::kTest);
  }
  return split;
}

std::string example_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ex-%06zu", i);
  return buf;
}

// `active` says whether the planted signal is present for this example at
// all (harmful examples of the other subtype in a complementary pair look
// like safe ones on this view's planted neurons).
ExampleRecord make_record(const SynthSpec& spec, const std::map<int, std::vector<int>>& signs,
                          std::size_t i, int label, Split split, bool active) {
  ExampleRecord r;
  r.example_id = example_id(i);
  r.label = label;
  r.split = split;
  std::mt19937_64 rng(derive_seed(spec.seed, 1, i));
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t T = spec.tokens;
  for (int l = 1; l <= spec.num_layers; ++l) {
    const std::size_t d = spec.widths[static_cast<std::size_t>(l - 1)];
    LayerActivations layer;
    layer.layer_index = l;
    layer.tokens = T;
    layer.width = d;
    layer.values.resize(T * d);
    for (auto& v : layer.values) v = static_cast<float>(spec.noise_std * noise(rng));
    const auto it = spec.planted.find(l);
    const double mu = spec.mu(l);
    if (it != spec.planted.end() && mu > 0.0) {
      const auto& s = signs.at(l);
      for (std::size_t t = 0; t < T; ++t) {
        bool harmful_pattern = label == 1 && active;
        if (spec.mode == SynthMode::kSwitching && t + 1 < spec.switch_at) harmful_pattern = false;
        const double shift = harmful_pattern ? mu : -mu;
        for (std::size_t k = 0; k < it->second.size(); ++k) {
          float& v = layer.values[t * d + it->second[k]];
          v = static_cast<float>(static_cast<double>(v) + s[k] * shift);
        }
      }
    }
    r.layers.push_back(std::move(layer));
  }
  return r;
}

GroundTruth truth_of(const SynthSpec& spec, std::map<int, std::vector<int>> signs) {
  GroundTruth g;
  g.planted = spec.planted;
  g.signs = std::move(signs);
  g.informativeness = spec.informativeness;
  g.mode = spec.mode;
  g.tokens = spec.tokens;
  g.switch_at = spec.mode == SynthMode::kSwitching ? spec.switch_at : 0;
  g.seed = spec.seed;
  return g;
}

std::vector<int> draw_labels(const SynthSpec& spec) {
  std::vector<int> labels(spec.num_examples);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::mt19937_64 rng(derive_seed(spec.seed, 0, i));
    labels[i] = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < spec.label_balance ? 1 : 0;
  }
  return labels;
}

ActivationDataset build(const SynthSpec& spec, const std::map<int, std::vector<int>>& signs,
                        const std::vector<int>& labels, const std::vector<Split>& splits,
                        const std::vector<bool>& active, const std::string& name) {
  ActivationDataset ds;
  ds.records.resize(spec.num_examples);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(spec.num_examples); ++i) {
    const auto k = static_cast<std::size_t>(i);
    ds.records[k] = make_record(spec, signs, k, labels[k], splits[k], active[k]);
  }
  ds.manifest = describe(ds.records, name, "synthetic", ActivationKind::kResidualStream,
                         spec.mode == SynthMode::kPooled);
  ds.manifest.token_policy = "synthetic, mode=" + to_string(spec.mode);
  validate(ds);
  return ds;
}

}  // namespace

SynthOutput generate(const SynthSpec& spec) {
  spec.validate();
  auto signs = draw_signs(spec);
  const auto labels = draw_labels(spec);
  const auto splits = assign_splits(spec);
  SynthOutput out;
  out.dataset = build(spec, signs, labels, splits, std::vector<bool>(spec.num_examples, true),
                      "synth-" + to_string(spec.mode));
  out.truth = truth_of(spec, std::move(signs));
  return out;
}

ComplementaryOutput generate_complementary(const SynthSpec& spec_a, const SynthSpec& spec_b) {
  spec_a.validate();
  spec_b.validate();
  if (spec_a.num_examples != spec_b.num_examples || spec_a.label_balance != spec_b.label_balance ||
      spec_a.splits != spec_b.splits) {
    throw Error(ErrorKind::kInvalidArgument,
                "complementary views need equal N, label balance and split fractions");
  }
  // Labels, subtypes and splits come from view A's seed so both views agree.
  const auto labels = draw_labels(spec_a);
  const auto splits = assign_splits(spec_a);
  ComplementaryOutput out;
  out.subtype.assign(labels.size(), -1);
  std::vector<bool> active_a(labels.size(), false), active_b(labels.size(), false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) continue;
    std::mt19937_64 rng(derive_seed(spec_a.seed, 4, i));
    out.subtype[i] = static_cast<int>(rng() & 1U);
    (out.subtype[i] == 0 ? active_a : active_b)[i] = true;
  }
  auto signs_a = draw_signs(spec_a);
  auto signs_b = draw_signs(spec_b);
  out.view_a = build(spec_a, signs_a, labels, splits, active_a, "synth-view-a");
  out.view_b = build(spec_b, signs_b, labels, splits, active_b, "synth-view-b");
  out.truth_a = truth_of(spec_a, std::move(signs_a));
  out.truth_b = truth_of(spec_b, std::move(signs_b));
  return out;
}

std::map<int, double> score_recovery(const SafetySelection& selection, const GroundTruth& truth) {
  std::map<int, double> out;
  for (const auto& [layer, planted] : truth.planted) {
    if (planted.empty()) continue;
    const LayerSelection* ls = nullptr;
    for (const auto& l : selection.layers) {
      if (l.layer_index == layer) ls = &l;
    }
    std::size_t hit = 0;
    if (ls != nullptr) {
      for (std::size_t j : planted) {
        hit += std::binary_search(ls->neurons.begin(), ls->neurons.end(), j) ? 1 : 0;
      }
    }
    out[layer] = static_cast<double>(hit) / static_cast<double>(planted.size());
  }
  return out;
}

namespace {

template <typename V>
json int_map(const std::map<int, V>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) j[std::to_string(k)] = v;
  return j;
}

template <typename V>
std::map<int, V> int_map_from(const json& j) {
  std::map<int, V> m;
  for (const auto& [k, v] : j.items()) m[std::stoi(k)] = v.template get<V>();
  return m;
}

}  // namespace

json spec_to_json(const SynthSpec& s) {
  return {{"num_layers", s.num_layers},
          {"widths", s.widths},
          {"num_examples", s.num_examples},
          {"planted", int_map(s.planted)},
          {"informativeness", int_map(s.informativeness)},
          {"noise_std", s.noise_std},
          {"label_balance", s.label_balance},
          {"seed", s.seed},
          {"mode", to_string(s.mode)},
          {"tokens", s.tokens},
          {"switch_at", s.switch_at},
          {"splits", {s.splits.train, s.splits.validation, s.splits.test}}};
}

SynthSpec spec_from_json(const json& j) {
  try {
    SynthSpec s;
    s.num_layers = j.value("num_layers", s.num_layers);
    if (j.contains("widths")) {
      s.widths = j.at("widths").get<std::vector<std::size_t>>();
    } else if (j.contains("width")) {
      s.widths.assign(static_cast<std::size_t>(s.num_layers), j.at("width").get<std::size_t>());
    } else {
      s.widths.assign(static_cast<std::size_t>(s.num_layers), 64);
    }
    s.num_examples = j.value("num_examples", s.num_examples);
    if (j.contains("planted")) s.planted = int_map_from<std::vector<std::size_t>>(j.at("planted"));
    if (j.contains("informativeness")) s.informativeness = int_map_from<double>(j.at("informativeness"));
    s.noise_std = j.value("noise_std", s.noise_std);
    s.label_balance = j.value("label_balance", s.label_balance);
    s.seed = j.value("seed", s.seed);
    s.mode = parse_synth_mode(j.value("mode", std::string("pooled")));
    s.tokens = j.value("tokens", s.tokens);
    s.switch_at = j.value("switch_at", s.switch_at);
    if (j.contains("splits")) {
      const auto v = j.at("splits").get<std::vector<double>>();
      if (v.size() != 3) throw Error(ErrorKind::kParse, "synth spec: splits needs 3 fractions");
      s.splits = {v[0], v[1], v[2]};
    }
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("synth spec: ") + e.what());
  }
}

json truth_to_json(const GroundTruth& g) {
  return {{"planted", int_map(g.planted)},
          {"signs", int_map(g.signs)},
          {"informativeness", int_map(g.informativeness)},
          {"mode", to_string(g.mode)},
          {"tokens", g.tokens},
          {"switch_at", g.switch_at},
          {"seed", g.seed}};
}

GroundTruth truth_from_json(const json& j) {
  try {
    GroundTruth g;
    g.planted = int_map_from<std::vector<std::size_t>>(j.at("planted"));
    g.signs = int_map_from<std::vector<int>>(j.at("signs"));
    g.informativeness = int_map_from<double>(j.at("informativeness"));
    g.mode = parse_synth_mode(j.at("mode").get<std::string>());
    g.tokens = j.at("tokens").get<std::size_t>();
    g.switch_at = j.at("switch_at").get<std::size_t>();
    g.seed = j.at("seed").get<std::uint64_t>();
    return g;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("ground truth: ") + e.what());
  }
}

std::pair<std::filesystem::path, std::filesystem::path> write_synth(const SynthOutput& out,
                                                                    const std::filesystem::path& dir,
                                                                    const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto data = dir / (stem + ".sact");
  const auto truth = dir / (stem + ".truth.json");
  write_dataset(out.dataset, data);
  io::write_text(truth, truth_to_json(out.truth).dump(2) + "\n");
  return {data, truth};
}

}  // namespace siren
