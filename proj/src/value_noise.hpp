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

#include <cmath>
#include <cstdint>
#include <vector>

#include "bevocc/rng.hpp"

namespace bevocc::detail {

// Smooth 2D value noise over a 256x256 periodic lattice of uniform values.
class ValueNoise {
 public:
  explicit ValueNoise(std::uint64_t seed) : table_(kSize * kSize) {
    Rng rng(seed);
    for (auto& v : table_) v = static_cast<float>(rng.uniform());
  }

  float operator()(double x, double y) const {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const auto ix = static_cast<long long>(fx);
    const auto iy = static_cast<long long>(fy);
    const float tx = smooth(static_cast<float>(x - fx));
    const float ty = smooth(static_cast<float>(y - fy));
    const float top = lerp(lattice(ix, iy), lattice(ix + 1, iy), tx);
    const float bottom = lerp(lattice(ix, iy + 1), lattice(ix + 1, iy + 1), tx);
    return lerp(top, bottom, ty);
  }

 private:
  static constexpr long long kSize = 256;
  static float smooth(float t) { return t * t * (3.0f - 2.0f * t); }
  static float lerp(float a, float b, float t) { return a + (b - a) * t; }
  float lattice(long long ix, long long iy) const {
    const auto x = static_cast<std::size_t>(((ix % kSize) + kSize) % kSize);
    const auto y = static_cast<std::size_t>(((iy % kSize) + kSize) % kSize);
    return table_[y * kSize + x];
  }
  std::vector<float> table_;
};

}  // namespace bevocc::detail
