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
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "siren/error.hpp"
#include "siren/pipeline.hpp"

using namespace siren;

TEST_SUITE("pipeline") {

TEST_CASE("config merge keeps unspecified keys") {
  RunConfig c;
  merge_run_config(c, nlohmann::json::parse(R"({"eta": 0.6, "agg": "uniform", "trials": 4})"));
  CHECK(c.eta == 0.6);
  CHECK(c.aggregation == AggregationMode::kUniform);
  CHECK(c.search.trials == 4);
  CHECK(c.search.cv_folds == 3);
  CHECK(c.threshold == 0.5);
  CHECK_THROWS_AS(merge_run_config(c, nlohmann::json::parse(R"({"eta": "high"})")), Error);
  CHECK_THROWS_AS(merge_run_config(c, nlohmann::json::parse(R"([1])")), Error);
  const auto j = run_config_to_json(c);
  RunConfig d;
  merge_run_config(d, j);
  CHECK(run_config_to_json(d) == j);
}

TEST_CASE("validation") {
  RunConfig c;
  c.eta = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c.eta = 1.0;
  c.threshold = 2.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("train reports recovery and is deterministic") {
  const auto synth = generate(testing::small_spec());
  const auto pooled = pooled_view(synth.dataset);
  const auto a = run_train(pooled, testing::quick_config(), &synth.truth);
  const auto b = run_train(pooled, testing::quick_config(), &synth.truth);
  CHECK(encode_bundle(a.bundle) == encode_bundle(b.bundle));
  REQUIRE(a.layers.size() == 3);
  CHECK(a.layers[1].recovery.has_value());
  CHECK(*a.layers[1].recovery == 1.0);
  CHECK(!a.layers[0].recovery.has_value());
  CHECK(a.val_macro_f1 > 0.9);
  CHECK(train_report_json(a, testing::quick_config()).at("feature_count") == a.feature_count);
  CHECK(train_report_text(a).find("validation macro F1") != std::string::npos);
}

TEST_CASE("ablation rows") {
  const auto synth = generate(testing::small_spec());
  const auto rows = run_ablate(pooled_view(synth.dataset), testing::quick_config());
  REQUIRE(rows.size() == kEtaGrid.size() + 2);
  CHECK(rows[0].label == "adaptive");
  CHECK(rows[1].aggregation == AggregationMode::kUniform);
  for (std::size_t i = 3; i < rows.size(); ++i) {
    for (std::size_t l = 0; l < rows[i].selected.size(); ++l) {
      CHECK(rows[i].selected[l] >= rows[i - 1].selected[l]);
    }
  }
  CHECK(ablation_jsonl(rows).find("\"row\":\"uniform\"") != std::string::npos);
}

TEST_CASE("errors carry the stage") {
  auto synth = generate(testing::small_spec());
  auto pooled = pooled_view(synth.dataset);
  for (auto& r : pooled.records) r.label = 0;
  try {
    run_train(pooled, testing::quick_config());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSingleClass);
    CHECK(std::string(e.what()).rfind("stage probes", 0) == 0);
  }
}

}
