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

#include <cmath>
#include <set>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "siren/error.hpp"
#include "siren/synth.hpp"
#include "test_util.hpp"

using namespace siren;

TEST_SUITE("synth") {

TEST_CASE("canonical spec") {
  const auto s = canonical_spec();
  CHECK(s.num_layers == 4);
  CHECK(s.widths == std::vector<std::size_t>(4, 64));
  CHECK(s.num_examples == 2000);
  CHECK(s.planted.at(2).size() == 5);
  CHECK(s.planted.at(3).size() == 5);
  CHECK(s.mu(1) == 0.0);
  CHECK(s.mu(2) == 2.0);
  CHECK(s.seed == 42);
}

TEST_CASE("generation is deterministic in the spec") {
  auto s = canonical_spec();
  s.num_examples = 200;
  const auto a = generate(s), b = generate(s);
  CHECK(a.dataset == b.dataset);
  CHECK(a.truth == b.truth);
  s.seed = 43;
  CHECK(!(generate(s).dataset == a.dataset));
}

TEST_CASE("planted neurons carry signed class means") {
  auto s = canonical_spec();
  s.num_examples = 4000;
  const auto out = generate(s);
  const auto pooled = pool_dataset(out.dataset);
  const int layer = 2;
  const auto& idx = out.truth.planted.at(layer);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    double sum[2] = {0, 0};
    std::size_t cnt[2] = {0, 0};
    for (const auto& r : pooled.records) {
      sum[r.label] += r.vectors[layer - 1][idx[k]];
      ++cnt[r.label];
    }
    const int sign = out.truth.signs.at(layer)[k];
    CHECK(sum[1] / cnt[1] == doctest::Approx(sign * 2.0).epsilon(0.05));
    CHECK(sum[0] / cnt[0] == doctest::Approx(-sign * 2.0).epsilon(0.05));
  }
  // An unplanted neuron stays centred.
  double m = 0.0;
  for (const auto& r : pooled.records) m += r.vectors[0][0];
  CHECK(std::abs(m / pooled.records.size()) < 0.1);

  std::size_t harmful = 0, val = 0;
  for (const auto& r : out.dataset.records) {
    harmful += r.label;
    val += r.split == Split::kValidation;
  }
  CHECK(std::abs(static_cast<double>(harmful) / 4000 - 0.5) < 0.05);
  CHECK(val == 800);
}

TEST_CASE("switching examples follow the safe pattern before t*") {
  auto s = canonical_spec();
  s.num_examples = 2000;
  s.mode = SynthMode::kSwitching;
  s.tokens = 8;
  s.switch_at = 5;
  s.noise_std = 0.0;
  const auto out = generate(s);
  const auto n = out.truth.planted.at(2)[0];
  const int sign = out.truth.signs.at(2)[0];
  for (const auto& r : out.dataset.records) {
    for (std::size_t t = 0; t < 8; ++t) {
      const double want = (r.label == 1 && t + 1 >= 5) ? sign * 2.0 : -sign * 2.0;
      CHECK(r.layers[1].row(t)[n] == doctest::Approx(want));
    }
  }
}

TEST_CASE("complementary views split the harmful class") {
  auto a = canonical_spec();
  a.num_examples = 400;
  a.noise_std = 0.0;
  auto b = a;
  b.seed = 7;
  b.planted.clear();
  b.informativeness.clear();
  plant_random(b, {2, 3}, 5, 2.0, 7);
  const auto out = generate_complementary(a, b);
  REQUIRE(out.subtype.size() == 400);
  std::set<int> kinds(out.subtype.begin(), out.subtype.end());
  CHECK(kinds == std::set<int>{-1, 0, 1});
  const auto na = out.truth_a.planted.at(2)[0];
  const int sa = out.truth_a.signs.at(2)[0];
  for (std::size_t i = 0; i < 400; ++i) {
    const auto& ra = out.view_a.records[i];
    CHECK(ra.example_id == out.view_b.records[i].example_id);
    CHECK(ra.label == out.view_b.records[i].label);
    CHECK(ra.label == (out.subtype[i] >= 0 ? 1 : 0));
    const double v = ra.layers[1].row(0)[na];
    // Only subtype A shows the harmful mean in view A.
    CHECK(v == doctest::Approx(out.subtype[i] == 0 ? sa * 2.0 : -sa * 2.0));
  }
}

TEST_CASE("recovery scoring") {
  GroundTruth t;
  t.planted = {{2, {1, 4, 9}}};
  SafetySelection sel;
  sel.layers.resize(2);
  sel.layers[0].layer_index = 1;
  sel.layers[1].layer_index = 2;
  sel.layers[1].neurons = {0, 4, 9};
  CHECK(score_recovery(sel, t).at(2) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("spec and truth documents round trip") {
  auto s = canonical_spec();
  s.mode = SynthMode::kTokenLevel;
  s.tokens = 12;
  s.splits = {0.6, 0.2, 0.2};
  const auto back = spec_from_json(spec_to_json(s));
  CHECK(back.planted == s.planted);
  CHECK(back.informativeness == s.informativeness);
  CHECK(back.splits == s.splits);
  CHECK(back.tokens == 12);
  const auto out = generate(s);
  CHECK(truth_from_json(truth_to_json(out.truth)) == out.truth);
  CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse("{\"num_layers\": \"x\"}")), Error);
}

TEST_CASE("invalid specs are rejected") {
  auto s = canonical_spec();
  s.planted[2].push_back(64);
  CHECK_THROWS_AS(s.validate(), Error);
  s = canonical_spec();
  s.label_balance = 1.0;
  CHECK_THROWS_AS(s.validate(), Error);
  s = canonical_spec();
  s.mode = SynthMode::kSwitching;
  s.tokens = 4;
  s.switch_at = 9;
  CHECK_THROWS_AS(s.validate(), Error);
}

}
