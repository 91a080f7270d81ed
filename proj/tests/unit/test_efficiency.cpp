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

#include <limits>
#include <random>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "../oracles.hpp"
#include "siren/efficiency.hpp"
#include "siren/error.hpp"

using namespace siren;

TEST_SUITE("efficiency") {

TEST_CASE("worked values") {
  CHECK(flops_guard({2, 4, 8, 1000, 2}) == 4288u);
  CHECK(flops_siren({{{10, 4}, {4, 2}}}) == 96u);
  CHECK(flops_guard({2, 4, 8, 1000, 0}) == 0u);
  CHECK(flops_siren({}) == 0u);
}

TEST_CASE("closed forms match loop summation") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 500; ++t) {
    GuardCostSpec g{1 + rng() % 100, 1 + rng() % 8192, 1 + rng() % 16384, 1 + rng() % 100000000000ULL,
                    rng() % 300};
    CHECK(static_cast<unsigned __int128>(flops_guard(g)) ==
          oracle::guard_flops_loop(g.num_layers, g.input_length, g.hidden_dim, g.total_params,
                                   g.generated_tokens));
    SirenCostSpec s;
    std::uint64_t prev = 1 + rng() % 5000;
    for (std::size_t l = 0, n = 1 + rng() % 5; l < n; ++l) {
      const std::uint64_t next = 1 + rng() % 5000;
      s.layer_dims.emplace_back(prev, next);
      prev = next;
    }
    CHECK(static_cast<unsigned __int128>(flops_siren(s)) == oracle::mlp_flops_loop(s.layer_dims));
  }
}

TEST_CASE("overflow and invalid specs are reported") {
  const auto big = std::numeric_limits<std::uint64_t>::max() / 2;
  try {
    flops_guard({big, big, 2, 1, 3});
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kOverflow);
  }
  CHECK_THROWS_AS(flops_guard({0, 1, 1, 1, 1}), Error);
  CHECK_THROWS_AS(flops_siren({{{10, 4}, {5, 2}}}), Error);
}

TEST_CASE("cost report ratio is exact and reduced") {
  const auto r = cost_report({2, 4, 8, 1000, 2}, {{{10, 4}, {4, 2}}});
  CHECK(r.guard_flops == 4288u);
  CHECK(r.host_pass_flops == 2 * 2 * 4 * 8 + 2000u);
  CHECK(r.siren_total_flops == r.host_pass_flops + 96u);
  CHECK(r.ratio_num * r.siren_total_flops == r.ratio_den * r.guard_flops);
  CHECK(std::gcd(r.ratio_num, r.ratio_den) == 1u);
  CHECK(r.ratio == doctest::Approx(4288.0 / 2224.0));
  const auto j = cost_report_to_json(r);
  CHECK(j.dump().find("4288") != std::string::npos);
  CHECK(format_cost_report(r).find("4288") != std::string::npos);
}

}
