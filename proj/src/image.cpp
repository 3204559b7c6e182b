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

#include "bevocc/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "bevocc/error.hpp"

namespace bevocc {

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

double BinaryImage::fraction() const {
  return data.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(data.size());
}

namespace {

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

// Reads the next whitespace-separated header token, skipping '#' comments.
int read_header_int(std::istream& in, const std::string& path) {
  int c = in.peek();
  while (c != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
    c = in.peek();
  }
  int value = -1;
  if (!(in >> value) || value < 0) throw IoError("malformed netpbm header in " + path);
  return value;
}

struct NetpbmHeader {
  int width;
  int height;
  int maxval;
};

NetpbmHeader read_header(std::istream& in, const std::string& path,
                         const std::string& magic) {
  std::string m(2, '\0');
  in.read(m.data(), 2);
  if (!in || m != magic) throw IoError(path + ": expected " + magic + " netpbm file");
  NetpbmHeader h{};
  h.width = read_header_int(in, path);
  h.height = read_header_int(in, path);
  h.maxval = read_header_int(in, path);
  if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535) {
    throw IoError(path + ": invalid netpbm dimensions or maxval");
  }
  in.get();  // single whitespace before raster
  return h;
}

}  // namespace

void write_ppm(const std::string& path, const Image& img) {
  if (img.channels != 3 && img.channels != 1) {
    throw InvalidArgument("write_ppm: image must have 1 or 3 channels");
  }
  auto out = open_out(path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<std::uint8_t> raster(img.pixel_count() * 3);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    for (int c = 0; c < 3; ++c) {
      const int src = img.channels == 3 ? c : 0;
      raster[p * 3 + c] = to_byte(img.data[p * img.channels + src]);
    }
  }
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError("failed writing " + path);
}

Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  const auto h = read_header(in, path, "P6");
  if (h.maxval != 255) throw IoError(path + ": only 8-bit PPM supported");
  std::vector<std::uint8_t> raster(static_cast<std::size_t>(h.width) * h.height * 3);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!in) throw IoError(path + ": truncated raster");
  Image img(h.width, h.height, 3);
  for (std::size_t i = 0; i < raster.size(); ++i) img.data[i] = raster[i] / 255.0f;
  return img;
}

void write_pgm(const std::string& path, const BinaryImage& mask) {
  auto out = open_out(path);
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  std::vector<std::uint8_t> raster(mask.data.size());
  std::transform(mask.data.begin(), mask.data.end(), raster.begin(),
                 [](std::uint8_t v) { return v ? std::uint8_t{255} : std::uint8_t{0}; });
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError("failed writing " + path);
}

void write_pgm(const std::string& path, const LabelImage& labels) {
  const std::uint32_t max_id =
      labels.data.empty() ? 0 : *std::max_element(labels.data.begin(), labels.data.end());
  if (max_id > 65535) throw InvalidArgument("write_pgm: label exceeds 16 bits");
  auto out = open_out(path);
  const bool wide = max_id > 255;
  out << "P5\n" << labels.width << ' ' << labels.height << '\n' << (wide ? 65535 : 255) << '\n';
  std::vector<std::uint8_t> raster;
  raster.reserve(labels.data.size() * (wide ? 2 : 1));
  for (auto id : labels.data) {
    if (wide) raster.push_back(static_cast<std::uint8_t>(id >> 8));
    raster.push_back(static_cast<std::uint8_t>(id & 0xFF));
  }
  out.write(reinterpret_cast<const char*>(raster.data()),
            static_cast<std::streamsize>(raster.size()));
  if (!out) throw IoError("failed writing " + path);
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  const auto h = read_header(in, path, "P5");
  GrayImage g{h.width, h.height, h.maxval, {}};
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  const bool wide = h.maxval > 255;
  std::vector<std::uint8_t> raster(n * (wide ? 2 : 1));
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!in) throw IoError(path + ": truncated raster");
  g.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.data[i] = wide ? static_cast<std::uint16_t>((raster[2 * i] << 8) | raster[2 * i + 1])
                     : raster[i];
  }
  return g;
}

Image quantize_8bit(const Image& img) {
  Image out = img;
  for (auto& v : out.data) v = to_byte(v) / 255.0f;
  return out;
}

}  // namespace bevocc
