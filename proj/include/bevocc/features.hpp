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

#include "bevocc/image.hpp"

namespace bevocc {

inline constexpr int kFeatureChannels = 8;

/// Fixed 8-channel encoder: r, g, b, luminance gradient magnitude, and the
/// absolute directional derivative along 0, 45, 90 and 135 degrees. Gradients
/// use central differences with clamped borders; every channel is scaled so
/// a full-contrast step reaches 1 and is clamped to [0, 1].
Image encode_features(const Image& color);

}  // namespace bevocc
