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

#include <stdexcept>
#include <string>
#include <string_view>

namespace siren {

enum class ErrorKind {
  kInvalidArgument,
  kEmptySequence,
  kNoExamples,
  kNotAContainer,
  kVersionMismatch,
  kTruncated,
  kShapeMismatch,
  kPooledOnly,
  kSingleClass,
  kDegenerateProbe,
  kIndexOutOfRange,
  kEmptyFeatureSpace,
  kWidthMismatch,
  kDiverged,
  kAllTrialsFailed,
  kMisaligned,
  kOverflow,
  kParse,
  kIo,
  kDigestMismatch,
};

std::string_view to_string(ErrorKind kind);

// All library failures surface as this type; `kind()` is the stable contract,
// the message carries context (stage, layer, example id).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Rethrows `e` with `context` prepended, preserving the kind.
[[noreturn]] inline void rethrow_with_context(const Error& e,
                                              const std::string& context) {
  throw Error(e.kind(), context + ": " + e.what());
}

}  // namespace siren
