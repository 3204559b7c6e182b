// Copyright 2026 The bevocc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

#include "bevocc/bev_grid.hpp"

namespace bevocc {

struct IoUResult {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  double iou = 0.0;
  bool empty_union = false;  // both masks empty; iou is reported as 1

  /// Adds counts; iou is recomputed from the totals.
  IoUResult& operator+=(const IoUResult& other);
  double percent() const { return 100.0 * iou; }
};

/// Throws InvalidArgument on a shape mismatch.
IoUResult iou(const BevMask& pred, const BevMask& gt);

/// 100 * (clean - occluded) / clean. Throws InvalidArgument if clean <= 0.
double degradation_percent(double clean_iou, double occluded_iou);

/// One-decimal report value, truncated toward zero (17.27 -> 17.2).
double report_one_decimal(double value);

}  // namespace bevocc
