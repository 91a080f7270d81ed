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

#include "siren/error.hpp"

namespace siren {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kEmptySequence: return "empty sequence";
    case ErrorKind::kNoExamples: return "no examples";
    case ErrorKind::kNotAContainer: return "not a container";
    case ErrorKind::kVersionMismatch: return "version mismatch";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kShapeMismatch: return "shape mismatch";
    case ErrorKind::kPooledOnly: return "pooled-only dataset";
    case ErrorKind::kSingleClass: return "single class";
    case ErrorKind::kDegenerateProbe: return "degenerate probe";
    case ErrorKind::kIndexOutOfRange: return "index out of range";
    case ErrorKind::kEmptyFeatureSpace: return "empty feature space";
    case ErrorKind::kWidthMismatch: return "width mismatch";
    case ErrorKind::kDiverged: return "diverged";
    case ErrorKind::kAllTrialsFailed: return "all trials failed";
    case ErrorKind::kMisaligned: return "misaligned";
    case ErrorKind::kOverflow: return "overflow";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kDigestMismatch: return "digest mismatch";
  }
  return "unknown";
}

}  // namespace siren
