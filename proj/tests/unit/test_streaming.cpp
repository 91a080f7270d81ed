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
#include <fstream>

#include <doctest.h>

#include "fixtures.hpp"
#include "siren/error.hpp"
#include "siren/streaming.hpp"
#include "test_util.hpp"

using namespace siren;

namespace {

struct Trained {
  SynthOutput synth;
  SirenBundle bundle;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained x;
    x.synth = generate(testing::small_spec(SynthMode::kTokenLevel, 9));
    x.bundle = run_train(pooled_view(x.synth.dataset), testing::quick_config()).bundle;
    return x;
  }();
  return t;
}

}  // namespace

TEST_SUITE("streaming") {

TEST_CASE("threshold schedule") {
  ThresholdSchedule s{0.5, {{3, 0.7}, {6, 0.4}}};
  CHECK(s.at(1) == 0.5);
  CHECK(s.at(3) == 0.7);
  CHECK(s.at(5) == 0.7);
  CHECK(s.at(100) == 0.4);
  CHECK(first_flag({0.6, 0.6, 0.6, 0.6, 0.6, 0.6}, ThresholdSchedule{0.9, {{4, 0.6}}}) == 4u);
  CHECK(!first_flag({0.1, 0.2}, ThresholdSchedule::constant(0.5)));
  CHECK(first_flag({0.1, 0.5}, ThresholdSchedule::constant(0.5)) == 2u);
  CHECK_THROWS_AS((ThresholdSchedule{0.5, {{3, 0.7}, {3, 0.4}}}.validate()), Error);
  CHECK_THROWS_AS(ThresholdSchedule::constant(1.5).validate(), Error);
}

TEST_CASE("last prefix score equals the pooled score") {
  const auto& t = trained();
  const auto pooled = pooled_view(t.synth.dataset);
  for (std::size_t i = 0; i < 40; ++i) {
    const auto trace = stream_score(t.synth.dataset.records[i], t.synth.dataset.manifest, t.bundle);
    REQUIRE(trace.scores.size() == 9);
    CHECK(std::abs(trace.scores.back() - score_record(t.bundle, pooled.records[i]).prob_harmful) < 1e-9);
  }
}

TEST_CASE("running mean matches recomputed prefixes") {
  const auto& t = trained();
  const auto& rec = t.synth.dataset.records[3];
  const auto trace = stream_score(rec, t.synth.dataset.manifest, t.bundle);
  for (std::size_t s = 1; s <= rec.tokens(); ++s) {
    const auto z = prefix_features(rec, t.synth.dataset.manifest, t.bundle.selection, t.bundle.weighting, s);
    CHECK(std::abs(mlp_forward(t.bundle.model, z.z).prob_harmful - trace.scores[s - 1]) < 1e-9);
  }
  CHECK_THROWS_AS(prefix_features(rec, t.synth.dataset.manifest, t.bundle.selection, t.bundle.weighting, 0), Error);
  CHECK_THROWS_AS(prefix_features(rec, t.synth.dataset.manifest, t.bundle.selection, t.bundle.weighting, 10), Error);
}

TEST_CASE("token attribution scores each token alone") {
  const auto& t = trained();
  const auto& rec = t.synth.dataset.records[5];
  const auto scores = token_attribution(rec, t.synth.dataset.manifest, t.bundle);
  REQUIRE(scores.size() == rec.tokens());
  ExampleRecord one = rec;
  for (auto& l : one.layers) {
    l.tokens = 1;
    l.values.assign(l.values.begin() + 4 * l.width, l.values.begin() + 5 * l.width);
  }
  const auto single = stream_score(one, t.synth.dataset.manifest, t.bundle);
  CHECK(std::abs(single.scores[0] - scores[4]) < 1e-12);
}

TEST_CASE("pooled-only containers are refused") {
  const auto& t = trained();
  auto manifest = t.synth.dataset.manifest;
  manifest.pooled_only = true;
  try {
    stream_score(t.synth.dataset.records[0], manifest, t.bundle);
    FAIL("expected kPooledOnly");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kPooledOnly);
  }
}

TEST_CASE("parallel dataset streaming equals per-record streaming") {
  const auto& t = trained();
  const Split val = Split::kValidation;
  const auto traces = stream_dataset(t.synth.dataset, t.bundle, ThresholdSchedule::constant(0.5), &val);
  std::size_t k = 0;
  for (const auto& r : t.synth.dataset.records) {
    if (r.split != val) continue;
    const auto one = stream_score(r, t.synth.dataset.manifest, t.bundle);
    CHECK(traces[k].scores == one.scores);
    CHECK(traces[k].flagged_at == one.flagged_at);
    ++k;
  }
  CHECK(k == traces.size());
}

TEST_CASE("latency evaluation counts flags by the capped deadline") {
  auto trace = [](std::string id, std::size_t T, std::optional<std::size_t> flag) {
    ScoreTrace s;
    s.example_id = std::move(id);
    s.scores.assign(T, 0.0);
    s.flagged_at = flag;
    return s;
  };
  const std::vector<ScoreTrace> traces{trace("a", 100, 10), trace("b", 100, 50), trace("c", 300, 200),
                                       trace("d", 100, std::nullopt), trace("e", 100, 1)};
  const std::vector<UnsafeSpanAnnotation> ann{{"a", 5}, {"b", 5}, {"c", 5}, {"d", 5}};
  const auto r = latency_eval(traces, ann, {0, 32, 64, 128, 256});
  CHECK(r.evaluated == 4);
  CHECK(r.missing_annotations == 1);
  // deadlines: a,b,d: min(5 + p, 100); c: min(5 + p, 300)
  CHECK(r.rates == std::vector<double>{0.0, 0.25, 0.5, 0.5, 0.75});
  CHECK_THROWS_AS(latency_eval(traces, {{"a", 101}}), Error);
}

TEST_CASE("annotation files") {
  testing::TempDir dir("ann");
  const std::vector<UnsafeSpanAnnotation> ann{{"x", 3}, {"y", 40}};
  {
    std::ofstream out(dir / "a.jsonl");
    out << annotations_to_jsonl(ann) << "\n";
  }
  const auto back = read_annotations(dir / "a.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(back[1].example_id == "y");
  CHECK(back[1].span_end == 40);
  {
    std::ofstream out(dir / "bad.jsonl");
    out << "{\"example_id\": \"x\"}\n";
  }
  CHECK_THROWS_AS(read_annotations(dir / "bad.jsonl"), Error);
}

}
