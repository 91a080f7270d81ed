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

#include "siren/ensemble.hpp"

#include <cstring>
#include <unordered_map>

#include "siren/binary_io.hpp"
#include "siren/error.hpp"
#include "siren/mlp_codec.hpp"
#include "siren/search.hpp"

namespace siren {

using nlohmann::json;

MemberLogits member_logits(const SirenBundle& bundle, const PooledDataset& dataset, Split split,
                           std::string name, std::string bundle_digest) {
  MemberLogits m;
  m.name = std::move(name);
  m.bundle_digest = std::move(bundle_digest);
  for (const auto& s : score_dataset(bundle, dataset, &split)) {
    m.example_ids.push_back(s.example_id);
    m.labels.push_back(s.label);
    m.logits.push_back(s.logits);
  }
  return m;
}

StackedInputs stack_inputs(const std::vector<MemberLogits>& members) {
  if (members.empty()) throw Error(ErrorKind::kInvalidArgument, "no ensemble members");
  for (const auto& m : members) {
    if (m.example_ids.size() != m.logits.size() || m.example_ids.size() != m.labels.size()) {
      throw Error(ErrorKind::kShapeMismatch, "member '" + m.name + "': ids, labels, logits differ in length");
    }
  }
  const auto& first = members.front();
  std::vector<std::unordered_map<std::string, std::size_t>> index(members.size());
  for (std::size_t k = 0; k < members.size(); ++k) {
    for (std::size_t i = 0; i < members[k].example_ids.size(); ++i) {
      index[k].emplace(members[k].example_ids[i], i);
    }
  }
  // Every member must cover exactly the first member's ids.
  std::string missing;
  std::size_t n_missing = 0;
  auto note = [&](const std::string& id, const std::string& where) {
    if (n_missing++ < 20) missing += "\n  " + id + " (" + where + ")";
  };
  for (std::size_t k = 1; k < members.size(); ++k) {
    for (const auto& id : first.example_ids) {
      if (!index[k].contains(id)) note(id, "missing from member '" + members[k].name + "'");
    }
    for (const auto& id : members[k].example_ids) {
      if (!index[0].contains(id)) note(id, "missing from member '" + first.name + "'");
    }
  }
  if (n_missing > 0) {
    throw Error(ErrorKind::kMisaligned,
                std::to_string(n_missing) + " example ids not shared by all members:" + missing);
  }

  StackedInputs in;
  in.x.resize(first.example_ids.size(), 2 * members.size());
  for (std::size_t i = 0; i < first.example_ids.size(); ++i) {
    const auto& id = first.example_ids[i];
    for (std::size_t k = 0; k < members.size(); ++k) {
      const std::size_t j = index[k].at(id);
      if (members[k].labels[j] != first.labels[i]) {
        throw Error(ErrorKind::kInvalidArgument, "example '" + id + "' has different labels across members");
      }
      in.x(i, 2 * k) = members[k].logits[j][0];
      in.x(i, 2 * k + 1) = members[k].logits[j][1];
    }
    in.labels.push_back(first.labels[i]);
    in.example_ids.push_back(id);
  }
  return in;
}

StackedEnsemble stack_train(const std::vector<MemberLogits>& members, const EnsembleConfig& config) {
  if (members.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "an ensemble needs at least two members");
  }
  if (!(config.stop_fraction > 0.0 && config.stop_fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "stop_fraction must be in (0, 1)");
  }
  const StackedInputs in = stack_inputs(members);
  const int folds = std::max(2, static_cast<int>(std::lround(1.0 / config.stop_fraction)));
  const auto fold_of = stratified_folds(in.labels, folds, config.optimizer.seed);
  std::size_t n_stop = 0;
  for (int f : fold_of) n_stop += (f == 0);
  Matrix fit_x(in.x.rows() - n_stop, in.x.cols()), stop_x(n_stop, in.x.cols());
  std::vector<int> fit_y, stop_y;
  for (std::size_t i = 0, a = 0, b = 0; i < in.x.rows(); ++i) {
    const bool stop = fold_of[i] == 0;
    auto dst = stop ? stop_x.row(b++) : fit_x.row(a++);
    std::copy(in.x.row(i).begin(), in.x.row(i).end(), dst.begin());
    (stop ? stop_y : fit_y).push_back(in.labels[i]);
  }

  StackedEnsemble e;
  for (const auto& m : members) {
    e.member_names.push_back(m.name);
    e.member_digests.push_back(m.bundle_digest);
  }
  const auto arch = MlpArchitecture::make(2 * members.size(), 1, config.hidden_width, config.dropout);
  e.meta = mlp_train(fit_x, fit_y, stop_x, stop_y, arch, config.optimizer);
  e.training_meta = {{"examples", in.x.rows()},
                     {"fit_examples", fit_x.rows()},
                     {"stop_examples", stop_x.rows()},
                     {"hidden_width", config.hidden_width},
                     {"dropout", config.dropout},
                     {"learning_rate", config.optimizer.learning_rate},
                     {"seed", config.optimizer.seed},
                     {"epochs_run", e.meta.meta.epochs_run},
                     {"best_val_f1", e.meta.meta.best_val_f1}};
  return e;
}

double stack_predict(const StackedEnsemble& ensemble, std::span<const std::array<double, 2>> logits) {
  if (logits.size() != ensemble.members()) {
    throw Error(ErrorKind::kWidthMismatch,
                "ensemble has " + std::to_string(ensemble.members()) + " members, got logits for " +
                    std::to_string(logits.size()));
  }
  std::vector<double> z;
  for (const auto& l : logits) {
    z.push_back(l[0]);
    z.push_back(l[1]);
  }
  return mlp_forward(ensemble.meta, z).prob_harmful;
}

std::vector<double> stack_predict(const StackedEnsemble& ensemble, const StackedInputs& inputs) {
  if (inputs.x.cols() != 2 * ensemble.members()) {
    throw Error(ErrorKind::kWidthMismatch, "stacked inputs do not match the ensemble's member count");
  }
  return mlp_prob_harmful(ensemble.meta, inputs.x);
}

std::vector<char> encode_ensemble(const StackedEnsemble& e) {
  if (e.member_names.size() != e.member_digests.size() || e.meta.input_width() != 2 * e.members()) {
    throw Error(ErrorKind::kWidthMismatch, "ensemble meta-MLP input width must be 2 x members");
  }
  io::Writer w;
  w.put_bytes(std::string_view(kEnsembleMagic, 8));
  w.put(e.format_version);
  const json meta = {{"member_names", e.member_names},
                     {"member_digests", e.member_digests},
                     {"training", e.training_meta}};
  w.put_string(meta.dump());
  write_mlp(w, e.meta);
  return w.bytes();
}

StackedEnsemble decode_ensemble(std::span<const char> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kEnsembleMagic, 8) != 0) {
    throw Error(ErrorKind::kNotAContainer, "not an ensemble file");
  }
  io::Reader r(bytes, "ensemble");
  r.get_bytes(8);
  StackedEnsemble e;
  e.format_version = r.get<std::uint32_t>();
  if (e.format_version != kEnsembleFormatVersion) {
    throw Error(ErrorKind::kVersionMismatch, "ensemble version " + std::to_string(e.format_version));
  }
  try {
    const json meta = json::parse(r.get_string());
    e.member_names = meta.at("member_names").get<std::vector<std::string>>();
    e.member_digests = meta.at("member_digests").get<std::vector<std::string>>();
    e.training_meta = meta.at("training");
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::kParse, std::string("ensemble metadata: ") + ex.what());
  }
  e.meta = read_mlp(r);
  if (r.remaining() != 0) throw Error(ErrorKind::kParse, "ensemble: trailing bytes");
  if (e.member_names.size() != e.member_digests.size() || e.meta.input_width() != 2 * e.members()) {
    throw Error(ErrorKind::kWidthMismatch, "ensemble meta-MLP input width must be 2 x members");
  }
  return e;
}

void save_ensemble(const StackedEnsemble& ensemble, const std::filesystem::path& path) {
  io::write_file(path, encode_ensemble(ensemble));
}

StackedEnsemble load_ensemble(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  try {
    return decode_ensemble(bytes);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

std::string bundle_file_digest(const std::filesystem::path& path) {
  return io::sha256_hex(io::read_file(path));
}

void verify_members(const StackedEnsemble& ensemble,
                    const std::vector<std::filesystem::path>& bundle_paths) {
  if (bundle_paths.size() != ensemble.members()) {
    throw Error(ErrorKind::kInvalidArgument,
                "ensemble has " + std::to_string(ensemble.members()) + " members, got " +
                    std::to_string(bundle_paths.size()) + " bundles");
  }
  for (std::size_t k = 0; k < bundle_paths.size(); ++k) {
    const auto digest = bundle_file_digest(bundle_paths[k]);
    if (digest != ensemble.member_digests[k]) {
      throw Error(ErrorKind::kDigestMismatch,
                  "member " + std::to_string(k) + " ('" + ensemble.member_names[k] + "'): " +
                      bundle_paths[k].string() + " has digest " + digest + ", ensemble expects " +
                      ensemble.member_digests[k]);
    }
  }
}

}  // namespace siren
