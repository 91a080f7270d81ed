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

// Binary encoding of MLP tensors shared by the bundle and ensemble files.

#include "siren/binary_io.hpp"
#include "siren/mlp.hpp"

namespace siren {

void write_mlp(io::Writer& w, const MlpModel& model);
MlpModel read_mlp(io::Reader& r);

}  // namespace siren
