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

#pragma once

// Small trained detectors shared by several suites.

#include "siren/pipeline.hpp"
#include "siren/synth.hpp"

namespace siren::testing {

inline RunConfig quick_config() {
  RunConfig c;
  c.search.trials = 2;
  c.search.hidden_min = 16;
  c.search.hidden_max = 32;
  c.search.lr_min = 3e-3;
  c.search.lr_max = 1e-2;
  c.optimizer.batch_size = 32;
  c.optimizer.max_epochs = 40;
  c.probe.c_grid = {1.0, 10.0};
  c.apply_seed();
  return c;
}

inline SynthSpec small_spec(SynthMode mode = SynthMode::kPooled, std::size_t tokens = 1) {
  SynthSpec s;
  s.num_layers = 3;
  s.widths = {12, 12, 12};
  s.num_examples = 300;
  s.mode = mode;
  s.tokens = tokens;
  s.switch_at = tokens / 2 + 1;
  plant_random(s, {2}, 3, 2.5, 5);
  return s;
}

}  // namespace siren::testing
