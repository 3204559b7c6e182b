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

#include "bevocc/metrics.hpp"

#include <cmath>

#include "bevocc/error.hpp"

namespace bevocc {

namespace {
double ratio(std::uint64_t inter, std::uint64_t uni) {
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}
}  // namespace

IoUResult& IoUResult::operator+=(const IoUResult& other) {
  intersection += other.intersection;
  union_ += other.union_;
  empty_union = union_ == 0;
  iou = ratio(intersection, union_);
  return *this;
}

IoUResult iou(const BevMask& pred, const BevMask& gt) {
  if (!pred.same_shape(gt)) throw InvalidArgument("iou: mask shapes differ");
  IoUResult r;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0;
    const bool g = gt.data[i] != 0;
    r.intersection += static_cast<std::uint64_t>(p && g);
    r.union_ += static_cast<std::uint64_t>(p || g);
  }
  r.empty_union = r.union_ == 0;
  r.iou = ratio(r.intersection, r.union_);
  return r;
}

double degradation_percent(double clean_iou, double occluded_iou) {
  if (!(clean_iou > 0.0)) throw InvalidArgument("degradation_percent: clean IoU must be > 0");
  return 100.0 * (clean_iou - occluded_iou) / clean_iou;
}

double report_one_decimal(double value) {
  // The epsilon keeps values such as 27.6 (stored as 27.5999...) on their digit.
  const double scaled = value * 10.0;
  return std::trunc(scaled + std::copysign(1e-9, scaled)) / 10.0;
}

}  // namespace bevocc
