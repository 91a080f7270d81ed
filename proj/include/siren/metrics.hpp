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

#include <cstddef>
#include <span>

namespace siren {

// Counts for one class treated as positive.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels,
                          int positive_class);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  // Set when the corresponding ratio was 0/0 and reported as 0.
  bool precision_degenerate = false;
  bool recall_degenerate = false;
};

PrecisionRecall precision_recall(std::span<const int> predictions,
                                 std::span<const int> labels, int positive_class);

// F1 = 2TP / (2TP + FP + FN); 0 when the class never occurs in either input.
double class_f1(const ConfusionCounts& c);

// Unweighted mean of the safe and harmful class F1 scores.
double macro_f1(std::span<const int> predictions, std::span<const int> labels);

}  // namespace siren
