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

#include <cstring>
#include <random>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "siren/activation_store.hpp"
#include "siren/binary_io.hpp"
#include "siren/error.hpp"
#include "test_util.hpp"

using namespace siren;
using siren::testing::random_dataset;
using siren::testing::TempDir;

namespace {

// Writes a container byte by byte, as an external extractor would.
struct RawWriter {
  std::string out;
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
  void f32(float f) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    le(u);
  }
  void str(const std::string& s) {
    le(static_cast<std::uint32_t>(s.size()));
    out += s;
  }
};

std::string extractor_bytes() {
  const nlohmann::json manifest = {
      {"dataset_name", "toy"},
      {"backbone_name", "tiny-lm"},
      {"num_layers", 2},
      {"feature_widths", {3, 2}},
      {"num_examples", 2},
      {"kind", "residual_stream"},
      {"pooled_only", false},
      {"format_version", 1},
      {"split_fractions", {{"train", 0.5}, {"validation", 0.5}, {"test", 0.0}}},
      {"token_policy", "drop special tokens"}};
  RawWriter w;
  w.out = "SIRNACT1";
  w.le(std::uint32_t{1});
  w.str(manifest.dump());
  w.le(std::uint64_t{2});
  for (int i = 0; i < 2; ++i) {
    w.str(i == 0 ? "a" : "b");
    w.le(static_cast<std::uint8_t>(i));  // label
    w.le(static_cast<std::uint8_t>(i));  // split
    w.le(std::uint32_t{2});
    const std::uint32_t tokens = 2;
    for (std::uint32_t layer = 1; layer <= 2; ++layer) {
      const std::uint32_t width = layer == 1 ? 3 : 2;
      w.le(layer);
      w.le(tokens);
      w.le(width);
      for (std::uint32_t k = 0; k < tokens * width; ++k) w.f32(static_cast<float>(i * 100 + layer * 10 + k));
    }
  }
  return w.out;
}

}  // namespace

TEST_SUITE("activation_store") {

TEST_CASE("reads bytes laid out by an external writer") {
  const auto raw = extractor_bytes();
  const auto ds = decode_dataset(std::span<const char>(raw.data(), raw.size()));
  CHECK(ds.manifest.dataset_name == "toy");
  CHECK(ds.manifest.token_policy == "drop special tokens");
  CHECK(ds.manifest.feature_widths == std::vector<std::size_t>{3, 2});
  REQUIRE(ds.records.size() == 2);
  CHECK(ds.records[1].example_id == "b");
  CHECK(ds.records[1].label == 1);
  CHECK(ds.records[1].split == Split::kValidation);
  CHECK(ds.records[1].layers[1].values[3] == 100 + 20 + 3);

  // The library's writer produces the same bytes.
  const auto again = encode_dataset(ds);
  CHECK(std::string(again.begin(), again.end()) == raw);
}

TEST_CASE("round trip through a file is exact") {
  TempDir dir("store");
  const auto ds = random_dataset(13, {5, 3, 4}, 7, 3);
  write_dataset(ds, dir / "x.sact");
  CHECK(read_dataset(dir / "x.sact") == ds);
}

TEST_CASE("corrupt containers fail with typed errors") {
  auto raw = extractor_bytes();
  auto kind_of = [](const std::string& b) {
    try {
      decode_dataset(std::span<const char>(b.data(), b.size()));
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::kIo;
  };
  std::string bad = raw;
  bad[0] = 'X';
  CHECK(kind_of(bad) == ErrorKind::kNotAContainer);
  bad = raw;
  bad[8] = 2;
  CHECK(kind_of(bad) == ErrorKind::kVersionMismatch);
  for (std::size_t cut : {10ul, 40ul, raw.size() - 1}) {
    CHECK(kind_of(raw.substr(0, cut)) == ErrorKind::kTruncated);
  }
  CHECK(kind_of(raw + "z") == ErrorKind::kShapeMismatch);
}

TEST_CASE("validate rejects inconsistent shapes") {
  auto ds = random_dataset(4, {3, 3}, 2, 1);
  ds.records[2].layers[1].width = 2;
  CHECK_THROWS_AS(validate(ds), Error);
  ds = random_dataset(4, {3, 3}, 2, 1);
  ds.records[1].layers[0].tokens = 1;
  ds.records[1].layers[0].values.resize(3);
  CHECK_THROWS_AS(validate(ds), Error);
}

TEST_CASE("mean pooling") {
  const std::vector<float> tokens{1, 2, 3, 4, 5, 6};
  CHECK(mean_pool(tokens, 3) == std::vector<double>{2.5, 3.5, 4.5});
  CHECK_THROWS_AS(mean_pool(std::span<const float>{}, 3), Error);

  const auto ds = random_dataset(21, {7, 9}, 5, 11);
  const auto fast = pool_dataset(ds);
  const auto ref = reference::pool_dataset(ds);
  REQUIRE(fast.records.size() == ref.records.size());
  for (std::size_t i = 0; i < ref.records.size(); ++i) CHECK(fast.records[i] == ref.records[i]);
  CHECK(check_pooled_consistency(ds, fast) == 0.0);
}

TEST_CASE("layer slice keeps dataset order") {
  const auto ds = random_dataset(10, {2}, 1, 5, true);
  const auto pooled = pool_dataset(ds);
  const auto slice = layer_slice(pooled, 0, Split::kValidation);
  REQUIRE(slice.features.rows() == 2);
  CHECK(slice.features(1, 1) == pooled.records[9].vectors[0][1]);
  CHECK(slice.labels == std::vector<int>{0, 1});
}

TEST_CASE("sha256 of a known string") {
  const std::string abc = "abc";
  CHECK(io::sha256_hex(std::span<const char>(abc.data(), abc.size())) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}
