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

#include "siren/metrics.hpp"

#include <string>

#include "siren/error.hpp"

namespace siren {

namespace {

void check_inputs(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty() || labels.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "metrics: empty input");
  }
  if (predictions.size() != labels.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "metrics: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if ((predictions[i] & ~1) != 0 || (labels[i] & ~1) != 0) {
      throw Error(ErrorKind::kInvalidArgument, "metrics: values must be 0 or 1");
    }
  }
}

}  // namespace

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels,
                          int positive_class) {
  check_inputs(predictions, labels);
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred_pos = predictions[i] == positive_class;
    const bool true_pos = labels[i] == positive_class;
    if (pred_pos && true_pos) ++c.tp;
    else if (pred_pos) ++c.fp;
    else if (true_pos) ++c.fn;
    else ++c.tn;
  }
  return c;
}

PrecisionRecall precision_recall(std::span<const int> predictions,
                                 std::span<const int> labels, int positive_class) {
  const auto c = confusion(predictions, labels, positive_class);
  PrecisionRecall pr;
  if (c.tp + c.fp == 0) {
    pr.precision_degenerate = true;
  } else {
    pr.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    pr.recall_degenerate = true;
  } else {
    pr.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  return pr;
}

double class_f1(const ConfusionCounts& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 0.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double macro_f1(std::span<const int> predictions, std::span<const int> labels) {
  const double f_safe = class_f1(confusion(predictions, labels, 0));
  const double f_harmful = class_f1(confusion(predictions, labels, 1));
  return (f_safe + f_harmful) / 2.0;
}

}  // namespace siren
