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

#include "siren/bundle.hpp"

#include <cstring>

#include "siren/binary_io.hpp"
#include "siren/error.hpp"
#include "siren/mlp_codec.hpp"

namespace siren {

using nlohmann::json;

void SirenBundle::check_consistency() const {
  model.architecture.validate();
  if (layout != feature_layout(selection)) {
    throw Error(ErrorKind::kShapeMismatch, "bundle layout does not match its selection");
  }
  if (layout.size() != model.input_width()) {
    throw Error(ErrorKind::kWidthMismatch,
                "bundle layout has " + std::to_string(layout.size()) +
                    " slots but MLP input width is " + std::to_string(model.input_width()));
  }
  if (weighting.alpha.size() != selection.layers.size()) {
    throw Error(ErrorKind::kShapeMismatch, "bundle weighting and selection disagree on L");
  }
  for (const auto& l : selection.layers) {
    if (l.standardizer.mean.size() != l.standardizer.scale.size()) {
      throw Error(ErrorKind::kShapeMismatch, "bundle standardizer sizes disagree");
    }
    for (std::size_t n : l.neurons) {
      if (n >= l.standardizer.mean.size()) {
        throw Error(ErrorKind::kIndexOutOfRange,
                    "layer " + std::to_string(l.layer_index) + " neuron " + std::to_string(n));
      }
    }
  }
}

SirenBundle make_bundle(SafetySelection selection, LayerWeighting weighting, MlpModel model,
                        json provenance) {
  SirenBundle b;
  b.layout = feature_layout(selection);
  b.selection = std::move(selection);
  b.weighting = std::move(weighting);
  b.model = std::move(model);
  json dropped = json::array();
  for (const auto& l : b.selection.layers) {
    if (l.dropped) dropped.push_back(l.layer_index);
  }
  provenance["dropped_layers"] = dropped;
  b.provenance = std::move(provenance);
  b.check_consistency();
  return b;
}

void write_mlp(io::Writer& w, const MlpModel& model) {
  w.put(model.architecture.dropout_rate);
  w.put(static_cast<std::uint32_t>(model.layers.size()));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& [in, out] = model.architecture.layer_dims[i];
    w.put(static_cast<std::uint32_t>(in));
    w.put(static_cast<std::uint32_t>(out));
    w.put_array(model.layers[i].weights.data());
    w.put_array(std::span<const double>(model.layers[i].bias));
  }
  w.put(static_cast<std::int32_t>(model.meta.epochs_run));
  w.put(static_cast<std::int32_t>(model.meta.best_epoch));
  w.put(model.meta.best_val_f1);
  w.put(model.meta.best_val_loss);
  w.put(model.meta.seed);
}

MlpModel read_mlp(io::Reader& r) {
  MlpModel m;
  m.architecture.dropout_rate = r.get<double>();
  const auto layers = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < layers; ++i) {
    const std::size_t in = r.get<std::uint32_t>();
    const std::size_t out = r.get<std::uint32_t>();
    r.need(in * out * sizeof(double));
    DenseLayer layer{Matrix(in, out), std::vector<double>(out)};
    r.get_array(layer.weights.data());
    r.get_array(std::span<double>(layer.bias));
    m.architecture.layer_dims.emplace_back(in, out);
    m.layers.push_back(std::move(layer));
  }
  m.meta.epochs_run = r.get<std::int32_t>();
  m.meta.best_epoch = r.get<std::int32_t>();
  m.meta.best_val_f1 = r.get<double>();
  m.meta.best_val_loss = r.get<double>();
  m.meta.seed = r.get<std::uint64_t>();
  m.architecture.validate();
  return m;
}

namespace {

void write_doubles(io::Writer& w, const std::vector<double>& v) {
  w.put(static_cast<std::uint32_t>(v.size()));
  w.put_array(std::span<const double>(v));
}

std::vector<double> read_doubles(io::Reader& r) {
  const std::size_t n = r.get<std::uint32_t>();
  r.need(n * sizeof(double));
  std::vector<double> v(n);
  r.get_array(std::span<double>(v));
  return v;
}

}  // namespace

std::vector<char> encode_bundle(const SirenBundle& bundle) {
  bundle.check_consistency();
  io::Writer w;
  w.put_bytes(std::string_view(kBundleMagic, 8));
  w.put(bundle.format_version);
  w.put_string(bundle.provenance.dump());

  w.put(bundle.selection.eta);
  w.put(static_cast<std::uint32_t>(bundle.selection.layers.size()));
  for (const auto& l : bundle.selection.layers) {
    w.put(static_cast<std::int32_t>(l.layer_index));
    w.put(static_cast<std::uint8_t>(l.dropped ? 1 : 0));
    w.put(l.val_f1);
    write_doubles(w, l.standardizer.mean);
    write_doubles(w, l.standardizer.scale);
    write_doubles(w, l.normalized);
    w.put(static_cast<std::uint32_t>(l.neurons.size()));
    for (std::size_t n : l.neurons) w.put(static_cast<std::uint32_t>(n));
  }

  w.put(static_cast<std::uint8_t>(bundle.weighting.mode == AggregationMode::kAdaptive ? 0 : 1));
  w.put(bundle.weighting.f_min);
  w.put(bundle.weighting.f_max);
  write_doubles(w, bundle.weighting.alpha);

  w.put(static_cast<std::uint32_t>(bundle.layout.size()));
  for (const auto& [layer, neuron] : bundle.layout) {
    w.put(static_cast<std::int32_t>(layer));
    w.put(static_cast<std::uint32_t>(neuron));
  }
  write_mlp(w, bundle.model);
  return w.bytes();
}

SirenBundle decode_bundle(std::span<const char> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kBundleMagic, 8) != 0) {
    throw Error(ErrorKind::kNotAContainer, "not a bundle file");
  }
  io::Reader r(bytes, "bundle");
  r.get_bytes(8);
  SirenBundle b;
  b.format_version = r.get<std::uint32_t>();
  if (b.format_version != kBundleFormatVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                "bundle version " + std::to_string(b.format_version) + ", expected " +
                    std::to_string(kBundleFormatVersion));
  }
  try {
    b.provenance = json::parse(r.get_string());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("bundle provenance: ") + e.what());
  }

  b.selection.eta = r.get<double>();
  const auto layers = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < layers; ++i) {
    LayerSelection l;
    l.layer_index = r.get<std::int32_t>();
    l.dropped = r.get<std::uint8_t>() != 0;
    l.val_f1 = r.get<double>();
    l.standardizer.mean = read_doubles(r);
    l.standardizer.scale = read_doubles(r);
    l.normalized = read_doubles(r);
    const std::size_t n = r.get<std::uint32_t>();
    r.need(n * sizeof(std::uint32_t));
    for (std::size_t k = 0; k < n; ++k) l.neurons.push_back(r.get<std::uint32_t>());
    b.selection.layers.push_back(std::move(l));
  }

  const auto mode = r.get<std::uint8_t>();
  if (mode > 1) throw Error(ErrorKind::kParse, "bundle: invalid aggregation mode");
  b.weighting.mode = mode == 0 ? AggregationMode::kAdaptive : AggregationMode::kUniform;
  b.weighting.f_min = r.get<double>();
  b.weighting.f_max = r.get<double>();
  b.weighting.alpha = read_doubles(r);

  const std::size_t slots = r.get<std::uint32_t>();
  r.need(slots * 8);
  for (std::size_t k = 0; k < slots; ++k) {
    const int layer = r.get<std::int32_t>();
    const std::size_t neuron = r.get<std::uint32_t>();
    b.layout.emplace_back(layer, neuron);
  }
  b.model = read_mlp(r);
  if (r.remaining() != 0) throw Error(ErrorKind::kParse, "bundle: trailing bytes");
  b.check_consistency();
  return b;
}

void save_bundle(const SirenBundle& bundle, const std::filesystem::path& path) {
  io::write_file(path, encode_bundle(bundle));
}

SirenBundle load_bundle(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return decode_bundle(bytes);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

ScoredExample score_record(const SirenBundle& bundle, const PooledRecord& record) {
  const auto fv = build_features(record, bundle.selection, bundle.weighting);
  const auto out = mlp_forward(bundle.model, fv.z);
  return {record.example_id, record.label, record.split, out.logits, out.prob_harmful};
}

std::vector<ScoredExample> score_dataset(const SirenBundle& bundle, const PooledDataset& dataset,
                                         const Split* only) {
  auto fm = build_feature_matrix(dataset, bundle.selection, bundle.weighting);
  if (only != nullptr) fm = fm.subset(*only);
  const Matrix logits = mlp_logits(bundle.model, fm.features);
  std::vector<ScoredExample> out;
  out.reserve(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    out.push_back({fm.example_ids[i], fm.labels[i], fm.splits[i], {logits(i, 0), logits(i, 1)},
                   prob_harmful_from_logits(logits(i, 0), logits(i, 1))});
  }
  return out;
}

}  // namespace siren
