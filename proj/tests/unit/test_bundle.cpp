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

#include <doctest.h>

#include "fixtures.hpp"
#include "siren/binary_io.hpp"
#include "siren/bundle.hpp"
#include "siren/error.hpp"
#include "siren/mlp_codec.hpp"
#include "test_util.hpp"

using namespace siren;

TEST_SUITE("bundle") {

TEST_CASE("save, load and score round trip exactly") {
  const auto synth = generate(testing::small_spec());
  const auto pooled = pooled_view(synth.dataset);
  const auto out = run_train(pooled, testing::quick_config());
  testing::TempDir dir("bundle");
  save_bundle(out.bundle, dir / "b.sbnd");
  const auto back = load_bundle(dir / "b.sbnd");
  CHECK(back.selection == out.bundle.selection);
  CHECK(back.weighting == out.bundle.weighting);
  CHECK(back.layout == out.bundle.layout);
  CHECK(back.model == out.bundle.model);
  CHECK(back.provenance == out.bundle.provenance);
  CHECK(encode_bundle(back) == encode_bundle(out.bundle));

  const auto a = score_dataset(out.bundle, pooled);
  const auto b = score_dataset(back, pooled);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].logits == b[i].logits);

  const Split val = Split::kValidation;
  for (const auto& s : score_dataset(back, pooled, &val)) CHECK(s.split == Split::kValidation);
}

TEST_CASE("corrupt bundles fail with typed errors") {
  const auto synth = generate(testing::small_spec());
  const auto out = run_train(pooled_view(synth.dataset), testing::quick_config());
  const auto bytes = encode_bundle(out.bundle);
  auto kind_of = [](std::vector<char> b) {
    try {
      decode_bundle(b);
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::kIo;
  };
  auto bad = bytes;
  bad[3] = 'x';
  CHECK(kind_of(bad) == ErrorKind::kNotAContainer);
  bad = bytes;
  bad[8] = 9;
  CHECK(kind_of(bad) == ErrorKind::kVersionMismatch);
  CHECK(kind_of(std::vector<char>(bytes.begin(), bytes.end() - 5)) == ErrorKind::kTruncated);

  // Replace the MLP tail with one of a different input width.
  io::Writer w;
  write_mlp(w, out.bundle.model);
  const std::size_t tail = w.bytes().size();
  auto other = MlpModel::initialize(MlpArchitecture::make(out.bundle.layout.size() + 1, 1, 4, 0.0), 1);
  io::Writer w2;
  write_mlp(w2, other);
  std::vector<char> patched(bytes.begin(), bytes.end() - static_cast<std::ptrdiff_t>(tail));
  patched.insert(patched.end(), w2.bytes().begin(), w2.bytes().end());
  CHECK(kind_of(patched) == ErrorKind::kWidthMismatch);
}

TEST_CASE("make_bundle checks the parts agree") {
  const auto synth = generate(testing::small_spec());
  const auto out = run_train(pooled_view(synth.dataset), testing::quick_config());
  auto sel = out.bundle.selection;
  auto model = MlpModel::initialize(MlpArchitecture::make(out.bundle.layout.size() + 2, 1, 4, 0.0), 1);
  CHECK_THROWS_AS(make_bundle(sel, out.bundle.weighting, model), Error);
}

}
