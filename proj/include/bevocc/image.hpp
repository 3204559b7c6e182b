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
#include <string>
#include <vector>

namespace bevocc {

/// Row-major interleaved float image. Color images use values in [0, 1];
/// feature images may carry any channel count.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int w, int h, int c, float fill = 0.0f)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

/// Single-channel 0/1 pixel mask.
struct BinaryImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  BinaryImage() = default;
  BinaryImage(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
  std::size_t count() const;
  double fraction() const;
};

/// Per-pixel integer labels (vehicle id, 0 = background).
struct LabelImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> data;

  LabelImage() = default;
  LabelImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  std::uint32_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint32_t at(int x, int y) const {
    return data[static_cast<std::size_t>(y) * width + x];
  }
};

// Netpbm interchange. Color images are written as 8-bit P6 (round(255 v),
// clamped); masks as P5 with 0/255; label images as P5 with maxval 255 or,
// when any id exceeds 255, 16-bit big-endian samples.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);
void write_pgm(const std::string& path, const BinaryImage& mask);
void write_pgm(const std::string& path, const LabelImage& labels);

/// Raw P5 contents: samples as read, plus maxval.
struct GrayImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<std::uint16_t> data;
};
GrayImage read_pgm(const std::string& path);

/// Quantize to the 8-bit interchange grid (what a PPM round trip yields).
Image quantize_8bit(const Image& img);

}  // namespace bevocc
