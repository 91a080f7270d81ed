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

#include "siren/activation_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "siren/binary_io.hpp"
#include "siren/error.hpp"
#include "siren/kernels.hpp"

namespace siren {

using nlohmann::json;

std::string to_string(ActivationKind kind) {
  return kind == ActivationKind::kResidualStream ? "residual_stream" : "ffn_activation";
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

ActivationKind parse_activation_kind(const std::string& s) {
  if (s == "residual_stream") return ActivationKind::kResidualStream;
  if (s == "ffn_activation") return ActivationKind::kFfnActivation;
  throw Error(ErrorKind::kParse, "unknown activation kind '" + s + "'");
}

std::vector<double> mean_pool(std::span<const float> tokens, std::size_t width) {
  if (width == 0 || tokens.empty()) {
    throw Error(ErrorKind::kEmptySequence, "empty sequence");
  }
  if (tokens.size() % width != 0) {
    throw Error(ErrorKind::kShapeMismatch, "token buffer is not a multiple of width");
  }
  std::vector<double> out(width);
  kernels::column_means(tokens, width, out);
  return out;
}

std::vector<double> mean_pool(const LayerActivations& layer) {
  if (layer.tokens == 0) throw Error(ErrorKind::kEmptySequence, "empty sequence");
  return mean_pool(layer.values, layer.width);
}

DatasetManifest describe(const std::vector<ExampleRecord>& records,
                         std::string dataset_name, std::string backbone_name,
                         ActivationKind kind, bool pooled_only) {
  DatasetManifest m;
  m.dataset_name = std::move(dataset_name);
  m.backbone_name = std::move(backbone_name);
  m.kind = kind;
  m.pooled_only = pooled_only;
  m.num_examples = records.size();
  if (!records.empty()) {
    m.num_layers = static_cast<int>(records.front().layers.size());
    for (const auto& layer : records.front().layers) m.feature_widths.push_back(layer.width);
  }
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& r : records) ++counts[static_cast<int>(r.split)];
  if (!records.empty()) {
    const double n = static_cast<double>(records.size());
    m.split_fractions = {counts[0] / n, counts[1] / n, counts[2] / n};
  }
  return m;
}

void validate(const ActivationDataset& dataset) {
  const auto& m = dataset.manifest;
  if (m.format_version != kActivationFormatVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                "manifest format_version " + std::to_string(m.format_version));
  }
  if (dataset.records.empty() || m.num_examples == 0) {
    throw Error(ErrorKind::kNoExamples, "no examples");
  }
  if (m.num_examples != dataset.records.size()) {
    throw Error(ErrorKind::kShapeMismatch,
                "manifest num_examples=" + std::to_string(m.num_examples) +
                    " but container holds " + std::to_string(dataset.records.size()));
  }
  if (m.num_layers < 1 || m.feature_widths.size() != static_cast<std::size_t>(m.num_layers)) {
    throw Error(ErrorKind::kShapeMismatch, "manifest layer count and widths disagree");
  }
  for (const auto& rec : dataset.records) {
    const std::string where = "example '" + rec.example_id + "'";
    if (rec.layers.size() != static_cast<std::size_t>(m.num_layers)) {
      throw Error(ErrorKind::kShapeMismatch,
                  where + ": manifest says L=" + std::to_string(m.num_layers) +
                      ", record carries " + std::to_string(rec.layers.size()) + " layers");
    }
    if (rec.label != 0 && rec.label != 1) {
      throw Error(ErrorKind::kInvalidArgument, where + ": label must be 0 or 1");
    }
    const std::size_t t = rec.layers.front().tokens;
    for (std::size_t l = 0; l < rec.layers.size(); ++l) {
      const auto& layer = rec.layers[l];
      if (layer.layer_index != static_cast<int>(l) + 1) {
        throw Error(ErrorKind::kShapeMismatch,
                    where + ": layer indices must run 1..L in order");
      }
      if (layer.tokens == 0 || layer.width == 0) {
        throw Error(ErrorKind::kShapeMismatch, where + ": empty layer block");
      }
      if (layer.tokens != t) {
        throw Error(ErrorKind::kShapeMismatch, where + ": layers disagree on T");
      }
      if (layer.width != m.feature_widths[l]) {
        throw Error(ErrorKind::kShapeMismatch,
                    where + ": layer " + std::to_string(l + 1) + " width " +
                        std::to_string(layer.width) + " != manifest " +
                        std::to_string(m.feature_widths[l]));
      }
      if (layer.values.size() != layer.tokens * layer.width) {
        throw Error(ErrorKind::kShapeMismatch, where + ": block size != T*D");
      }
      if (m.pooled_only && layer.tokens != 1) {
        throw Error(ErrorKind::kShapeMismatch, where + ": pooled_only requires T=1");
      }
      for (float v : layer.values) {
        if (!std::isfinite(v)) {
          throw Error(ErrorKind::kInvalidArgument, where + ": non-finite activation");
        }
      }
    }
  }
}

namespace {

json manifest_to_json(const DatasetManifest& m) {
  return json{
      {"dataset_name", m.dataset_name},
      {"backbone_name", m.backbone_name},
      {"num_layers", m.num_layers},
      {"feature_widths", m.feature_widths},
      {"num_examples", m.num_examples},
      {"kind", to_string(m.kind)},
      {"pooled_only", m.pooled_only},
      {"format_version", m.format_version},
      {"split_fractions",
       {{"train", m.split_fractions.train},
        {"validation", m.split_fractions.validation},
        {"test", m.split_fractions.test}}},
      {"token_policy", m.token_policy},
  };
}

DatasetManifest manifest_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    DatasetManifest m;
    m.dataset_name = j.at("dataset_name").get<std::string>();
    m.backbone_name = j.at("backbone_name").get<std::string>();
    m.num_layers = j.at("num_layers").get<int>();
    m.feature_widths = j.at("feature_widths").get<std::vector<std::size_t>>();
    m.num_examples = j.at("num_examples").get<std::size_t>();
    m.kind = parse_activation_kind(j.at("kind").get<std::string>());
    m.pooled_only = j.at("pooled_only").get<bool>();
    m.format_version = j.at("format_version").get<std::uint32_t>();
    const auto& sf = j.at("split_fractions");
    m.split_fractions = {sf.at("train").get<double>(), sf.at("validation").get<double>(),
                         sf.at("test").get<double>()};
    m.token_policy = j.value("token_policy", std::string{});
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("activation manifest: ") + e.what());
  }
}

}  // namespace

std::vector<char> encode_dataset(const ActivationDataset& dataset) {
  validate(dataset);
  io::Writer w;
  w.put_bytes(std::string_view(kActivationMagic, 8));
  w.put(kActivationFormatVersion);
  w.put_string(manifest_to_json(dataset.manifest).dump());
  w.put(static_cast<std::uint64_t>(dataset.records.size()));
  for (const auto& rec : dataset.records) {
    w.put_string(rec.example_id);
    w.put(static_cast<std::uint8_t>(rec.label));
    w.put(static_cast<std::uint8_t>(rec.split));
    w.put(static_cast<std::uint32_t>(rec.layers.size()));
    for (const auto& layer : rec.layers) {
      w.put(static_cast<std::uint32_t>(layer.layer_index));
      w.put(static_cast<std::uint32_t>(layer.tokens));
      w.put(static_cast<std::uint32_t>(layer.width));
      w.put_array(std::span<const float>(layer.values));
    }
  }
  return w.bytes();
}

ActivationDataset decode_dataset(std::span<const char> bytes) {
  io::Reader r(bytes, "activation container");
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kActivationMagic, 8) != 0) {
    throw Error(ErrorKind::kNotAContainer, "not an activation container");
  }
  r.get_bytes(8);
  const auto version = r.get<std::uint32_t>();
  if (version != kActivationFormatVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                "activation container version " + std::to_string(version) +
                    ", expected " + std::to_string(kActivationFormatVersion));
  }
  ActivationDataset ds;
  ds.manifest = manifest_from_json(r.get_string());
  if (ds.manifest.format_version != version) {
    throw Error(ErrorKind::kVersionMismatch, "manifest and header versions disagree");
  }
  const auto count = r.get<std::uint64_t>();
  // Each record needs at least 10 bytes; reject absurd counts before reserving.
  if (count > r.remaining() / 10) {
    throw Error(ErrorKind::kTruncated, "activation container: truncated file (record count)");
  }
  ds.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    ExampleRecord rec;
    rec.example_id = r.get_string();
    rec.label = r.get<std::uint8_t>();
    const auto split = r.get<std::uint8_t>();
    if (split > 2) throw Error(ErrorKind::kParse, "invalid split code");
    rec.split = static_cast<Split>(split);
    const auto layers = r.get<std::uint32_t>();
    for (std::uint32_t l = 0; l < layers; ++l) {
      LayerActivations la;
      la.layer_index = static_cast<int>(r.get<std::uint32_t>());
      la.tokens = r.get<std::uint32_t>();
      la.width = r.get<std::uint32_t>();
      const std::size_t n = la.tokens * la.width;
      r.need(n * sizeof(float));
      la.values.resize(n);
      r.get_array(std::span<float>(la.values));
      rec.layers.push_back(std::move(la));
    }
    ds.records.push_back(std::move(rec));
  }
  if (r.remaining() != 0) {
    throw Error(ErrorKind::kShapeMismatch, "trailing bytes after last record");
  }
  validate(ds);
  return ds;
}

void write_dataset(const ActivationDataset& dataset, const std::filesystem::path& path) {
  const auto bytes = encode_dataset(dataset);
  io::write_file(path, bytes);
}

ActivationDataset read_dataset(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return decode_dataset(bytes);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

namespace {

PooledRecord pool_record(const ExampleRecord& rec,
                         void (*means)(std::span<const float>, std::size_t,
                                       std::span<double>)) {
  PooledRecord out{rec.example_id, rec.label, rec.split, {}};
  out.vectors.reserve(rec.layers.size());
  for (const auto& layer : rec.layers) {
    std::vector<double> v(layer.width);
    means(layer.values, layer.width, v);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

void check_poolable(const ActivationDataset& dataset) {
  if (dataset.records.empty()) throw Error(ErrorKind::kNoExamples, "no examples");
  for (const auto& rec : dataset.records) {
    for (const auto& layer : rec.layers) {
      if (layer.tokens == 0 || layer.width == 0 || layer.values.empty()) {
        throw Error(ErrorKind::kEmptySequence,
                    "example '" + rec.example_id + "': empty sequence");
      }
    }
  }
}

}  // namespace

PooledDataset pool_dataset(const ActivationDataset& dataset) {
  check_poolable(dataset);
  PooledDataset out{dataset.manifest, std::vector<PooledRecord>(dataset.records.size())};
  const auto n = static_cast<std::ptrdiff_t>(dataset.records.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out.records[static_cast<std::size_t>(i)] =
        pool_record(dataset.records[static_cast<std::size_t>(i)], &kernels::column_means);
  }
  return out;
}

PooledDataset reference::pool_dataset(const ActivationDataset& dataset) {
  check_poolable(dataset);
  PooledDataset out{dataset.manifest, {}};
  for (const auto& rec : dataset.records) {
    out.records.push_back(pool_record(rec, &reference::column_means));
  }
  return out;
}

void require_token_level(const DatasetManifest& manifest, const char* operation) {
  if (manifest.pooled_only) {
    throw Error(ErrorKind::kPooledOnly,
                std::string(operation) + " needs token-level activations but dataset '" +
                    manifest.dataset_name + "' is pooled_only");
  }
}

double check_pooled_consistency(const ActivationDataset& dataset,
                                const PooledDataset& pooled, double rel_tol) {
  if (dataset.records.size() != pooled.records.size()) {
    throw Error(ErrorKind::kShapeMismatch, "pooled and token datasets differ in size");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const auto& rec = dataset.records[i];
    const auto& pr = pooled.records[i];
    if (rec.example_id != pr.example_id || rec.layers.size() != pr.vectors.size()) {
      throw Error(ErrorKind::kShapeMismatch, "record " + rec.example_id + " misaligned");
    }
    for (std::size_t l = 0; l < rec.layers.size(); ++l) {
      const auto fresh = mean_pool(rec.layers[l]);
      if (fresh.size() != pr.vectors[l].size()) {
        throw Error(ErrorKind::kShapeMismatch, "record " + rec.example_id + " width");
      }
      for (std::size_t j = 0; j < fresh.size(); ++j) {
        const double scale = std::max(1.0, std::abs(fresh[j]));
        worst = std::max(worst, std::abs(fresh[j] - pr.vectors[l][j]) / scale);
      }
    }
  }
  if (worst > rel_tol) {
    throw Error(ErrorKind::kShapeMismatch,
                "pooled vectors deviate from token means by " + std::to_string(worst));
  }
  return worst;
}

LayerSlice layer_slice(const PooledDataset& dataset, std::size_t layer_pos, Split split) {
  std::size_t rows = 0;
  for (const auto& r : dataset.records) rows += (r.split == split);
  const std::size_t width =
      dataset.records.empty() ? 0 : dataset.records.front().vectors.at(layer_pos).size();
  LayerSlice slice{Matrix(rows, width), {}};
  slice.labels.reserve(rows);
  std::size_t i = 0;
  for (const auto& r : dataset.records) {
    if (r.split != split) continue;
    const auto& v = r.vectors.at(layer_pos);
    std::copy(v.begin(), v.end(), slice.features.row(i).begin());
    slice.labels.push_back(r.label);
    ++i;
  }
  return slice;
}

}  // namespace siren
