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

#include "bevocc/features.hpp"

#include <algorithm>
#include <cmath>

#include "bevocc/error.hpp"

namespace bevocc {

namespace {
float clamp01(float v) { return std::clamp(v, 0.0f, 1.0f); }
}  // namespace

Image encode_features(const Image& color) {
  if (color.channels != 3) throw InvalidArgument("encode_features: expected a 3-channel image");
  const int w = color.width;
  const int h = color.height;
  std::vector<float> lum(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < lum.size(); ++i) {
    lum[i] = 0.299f * color.data[3 * i] + 0.587f * color.data[3 * i + 1] +
             0.114f * color.data[3 * i + 2];
  }
  auto L = [&](int x, int y) { return lum[static_cast<std::size_t>(y) * w + x]; };

  // A unit step gives a central difference of 0.5; the gains map that to 1.
  constexpr float kDiag = 0.70710678f;
  Image out(w, h, kFeatureChannels);
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0);
      const int xp = std::min(x + 1, w - 1);
      const float gx = 0.5f * (L(xp, y) - L(xm, y));
      const float gy = 0.5f * (L(x, yp) - L(x, ym));
      float* o = &out.data[out.index(x, y)];
      const float* c = &color.data[color.index(x, y)];
      o[0] = clamp01(c[0]);
      o[1] = clamp01(c[1]);
      o[2] = clamp01(c[2]);
      o[3] = clamp01(2.0f * std::sqrt(gx * gx + gy * gy));
      o[4] = clamp01(2.0f * std::abs(gx));
      o[5] = clamp01(2.0f * std::abs(kDiag * (gx + gy)));
      o[6] = clamp01(2.0f * std::abs(gy));
      o[7] = clamp01(2.0f * std::abs(kDiag * (gy - gx)));
    }
  }
  return out;
}

}  // namespace bevocc
