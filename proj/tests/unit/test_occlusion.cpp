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

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>

#include "bevocc/error.hpp"
#include "bevocc/image.hpp"
#include "bevocc/occlusion.hpp"
#include "bevocc/sensors.hpp"
#include "test_util.hpp"

using namespace bevocc;
using bevocc::testutil::deg;

namespace {

Image random_image(int w, int h, int c, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h, c);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform());
  return img;
}

// Direct 2D convolution with the outer-product kernel and clamped borders.
Image direct_blur(const Image& img, const GaussianKernel& k) {
  Image out(img.width, img.height, img.channels);
  const int r = k.radius();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = std::clamp(y + dy, 0, img.height - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = std::clamp(x + dx, 0, img.width - 1);
            acc += k.weights[dy + r] * k.weights[dx + r] * img.at(xx, yy, c);
          }
        }
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

float max_abs_diff(const Image& a, const Image& b) {
  float m = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
  return m;
}

void write_raw_pgm(const std::string& path, int w, int h, const std::vector<std::uint8_t>& px) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

}  // namespace

TEST(Kernel, NormalizedAndSymmetric) {
  for (int k : {1, 3, 7, 31, 251}) {
    const auto g = GaussianKernel::make(k);
    ASSERT_EQ(static_cast<int>(g.weights.size()), k);
    const double s = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);
    EXPECT_NEAR(s * s, 1.0, 1e-6);
    for (int i = 0; i < k; ++i) EXPECT_DOUBLE_EQ(g.weights[i], g.weights[k - 1 - i]);
  }
  EXPECT_NEAR(GaussianKernel::make(251).sigma, 250.0 / 6.0, 1e-12);
  EXPECT_DOUBLE_EQ(GaussianKernel::make(7, 2.5).sigma, 2.5);
}

TEST(Kernel, InvalidSizesRejected) {
  EXPECT_THROW(GaussianKernel::make(4), InvalidArgument);
  EXPECT_THROW(GaussianKernel::make(0), InvalidArgument);
  EXPECT_THROW(GaussianKernel::make(-3), InvalidArgument);
  EXPECT_THROW(GaussianKernel::make(5, 0.0), InvalidArgument);
}

TEST(Blur, SeparableMatchesDirect) {
  const Image img = random_image(53, 41, 3, 1);
  for (int k : {3, 7, 31}) {
    const auto kernel = GaussianKernel::make(k);
    EXPECT_LT(max_abs_diff(gaussian_blur(img, kernel), direct_blur(img, kernel)), 1e-5) << "k=" << k;
  }
}

TEST(Blur, ConstantImageUnchanged) {
  Image img(40, 30, 3, 0.37f);
  const Image out = gaussian_blur(img, GaussianKernel::make(31));
  EXPECT_LT(max_abs_diff(out, img), 1e-6);
}

TEST(Blur, ImpulseGivesKernel) {
  Image img(11, 11, 1);
  img.at(5, 5) = 1.0f;
  const auto k = GaussianKernel::make(5);
  const Image out = gaussian_blur(img, k);
  for (int dy = -2; dy <= 2; ++dy) {
    for (int dx = -2; dx <= 2; ++dx) {
      const double sigma = k.sigma;
      const auto g = [&](int d) { return std::exp(-d * d / (2 * sigma * sigma)); };
      double norm = 0;
      for (int d = -2; d <= 2; ++d) norm += g(d);
      EXPECT_NEAR(out.at(5 + dx, 5 + dy), g(dx) * g(dy) / (norm * norm), 1e-7);
    }
  }
  EXPECT_EQ(out.at(0, 0), 0.0f);
}

TEST(Blur, MeanPreserved) {
  const Image img = random_image(200, 150, 1, 9);
  const Image out = gaussian_blur(img, GaussianKernel::make(31));
  const double a = std::accumulate(img.data.begin(), img.data.end(), 0.0) / img.data.size();
  const double b = std::accumulate(out.data.begin(), out.data.end(), 0.0) / out.data.size();
  EXPECT_NEAR(b, a, 0.01 * a);
}

TEST(Blur, KernelLargerThanImageRejected) {
  Image img(10, 4, 1);
  EXPECT_NO_THROW(gaussian_blur(img, GaussianKernel::make(9)));
  EXPECT_THROW(gaussian_blur(img, GaussianKernel::make(11)), InvalidArgument);
}

TEST(Blur, FullSizeKernelIsFast) {
  const Image img = random_image(800, 448, 3, 2);
  const auto k = GaussianKernel::make(251);
  const auto t0 = std::chrono::steady_clock::now();
  const Image out = gaussian_blur(img, k);
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(s, 1.0);
  EXPECT_TRUE(out.same_shape(img));
}

TEST(RandomBox, ZeroSideIsEmpty) {
  EXPECT_EQ(random_box_mask(800, 448, 1, 0.0).mask.count(), 0u);
}

TEST(RandomBox, FullSideOnSquareImage) {
  const auto m = random_box_mask(300, 300, 5, 1.0);
  EXPECT_EQ(m.mask.count(), 300u * 300u);
}

TEST(RandomBox, DefaultAreaUsesFloor) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = random_box_mask(800, 448, seed, 0.4);
    EXPECT_EQ(m.mask.count(), 179u * 179u);
    EXPECT_EQ(m.mode, OcclusionMode::random_box);
    // One square: bounding box of the ones is 179 x 179.
    int x0 = 800, x1 = -1, y0 = 448, y1 = -1;
    for (int y = 0; y < 448; ++y) {
      for (int x = 0; x < 800; ++x) {
        if (!m.mask.at(x, y)) continue;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
    }
    EXPECT_EQ(x1 - x0 + 1, 179);
    EXPECT_EQ(y1 - y0 + 1, 179);
  }
}

TEST(RandomBox, DeterministicPerSeed) {
  EXPECT_EQ(random_box_mask(800, 448, 3).mask.data, random_box_mask(800, 448, 3).mask.data);
  EXPECT_NE(random_box_mask(800, 448, 3).mask.data, random_box_mask(800, 448, 4).mask.data);
}

TEST(OverlapMask, SingleCameraRigIsEmpty) {
  const auto rig = nuscenes_like_rig();
  const std::vector<CameraModel> one{rig[0]};
  EXPECT_EQ(overlap_region_mask(one, rig[0]).mask.count(), 0u);
}

TEST(OverlapMask, IdenticalCamerasFullyOverlap) {
  const auto rig = nuscenes_like_rig();
  auto twin = rig[0];
  twin.name = "twin";
  const auto m = overlap_region_mask({rig[0], twin}, rig[0]);
  EXPECT_EQ(m.mask.count(), m.mask.data.size());
}

TEST(OverlapMask, FrontCameraBandsMatchAngularOverlap) {
  const auto rig = nuscenes_like_rig();
  const auto& front = rig[0];
  const auto m = overlap_region_mask(rig, front, 20.0);
  const auto& k = front.intrinsics;
  const int y = k.height / 2;
  // Pinhole oracle: the column's point at 20 m depth, tested against each
  // neighbour's horizontal and vertical half-angles.
  auto seen_by_other = [&](int x) {
    const Vec3 ray_cam((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
    const Vec3 p = front.extrinsics.rotation * (20.0 * ray_cam) + front.extrinsics.translation;
    for (std::size_t c = 1; c < rig.size(); ++c) {
      const auto& o = rig[c];
      const Vec3 q = o.extrinsics.rotation.transpose() * (p - o.extrinsics.translation);
      if (q.z() < kDefaultNearPlane) continue;
      const double u = o.intrinsics.fx * q.x() / q.z() + o.intrinsics.cx;
      const double v = o.intrinsics.fy * q.y() / q.z() + o.intrinsics.cy;
      if (u >= 0 && u < o.intrinsics.width && v >= 0 && v < o.intrinsics.height) return true;
    }
    return false;
  };
  auto band_width = [&](bool left, bool oracle) {
    int n = 0;
    for (int i = 0; i < k.width; ++i) {
      const int x = left ? i : k.width - 1 - i;
      if (!(oracle ? seen_by_other(x) : m.mask.at(x, y))) break;
      ++n;
    }
    return n;
  };
  // Without the mounting offsets the band would end 35 - 15 = 20 degrees
  // off-axis; parallax at 20 m narrows it.
  const double edge = k.fx * std::tan(deg(20));
  const int angular_band = static_cast<int>(std::round(k.cx - edge));
  for (bool left : {true, false}) {
    EXPECT_NEAR(band_width(left, false), band_width(left, true), 1) << (left ? "left" : "right");
    EXPECT_GT(band_width(left, false), 0);
    EXPECT_LE(band_width(left, false), angular_band + 2);
  }
  // The centre is seen by the front camera only.
  EXPECT_EQ(m.mask.at(k.width / 2, y), 0);
}

TEST(OverlapMask, MaskedPixelsAreSeenByTheOtherCamera) {
  const auto rig = nuscenes_like_rig();
  const auto& a = rig[0];
  const auto& b = rig[1];
  const auto m = overlap_region_mask({a, b}, a, 20.0);
  Rng rng(4);
  std::vector<std::pair<int, int>> masked;
  for (int y = 0; y < m.mask.height; ++y) {
    for (int x = 0; x < m.mask.width; ++x) {
      if (m.mask.at(x, y)) masked.emplace_back(x, y);
    }
  }
  ASSERT_FALSE(masked.empty());
  for (int i = 0; i < 100; ++i) {
    const auto [x, y] = masked[rng.uniform_int(0, masked.size() - 1)];
    const Ray ray = pixel_ray(a, x, y, Pose::identity());
    const double t = 20.0 / ray.direction.dot(a.extrinsics.rotation.col(2));
    EXPECT_TRUE(project_point(b, ray.at(t), Pose::identity())) << x << "," << y;
  }
}

TEST(OverlapMask, NonPositiveRangeRejected) {
  const auto rig = nuscenes_like_rig();
  EXPECT_THROW(overlap_region_mask(rig, rig[0], 0.0), InvalidArgument);
}

TEST(Soiling, CoverageWithinTolerance) {
  for (double target : {0.1, 0.3, 0.5}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SoilingParams p;
      p.coverage_target = target;
      const auto m = procedural_soiling_mask(800, 448, seed, p);
      EXPECT_NEAR(m.mask.fraction(), target, 0.05) << "target " << target << " seed " << seed;
      EXPECT_EQ(m.mode, OcclusionMode::realistic);
    }
  }
}

TEST(Soiling, NoBlobsAndDeterminism) {
  SoilingParams p;
  p.n_blobs = 0;
  EXPECT_EQ(procedural_soiling_mask(800, 448, 1, p).mask.count(), 0u);
  p.n_blobs = 6;
  EXPECT_EQ(procedural_soiling_mask(800, 448, 1, p).mask.data,
            procedural_soiling_mask(800, 448, 1, p).mask.data);
  EXPECT_NE(procedural_soiling_mask(800, 448, 1, p).mask.data,
            procedural_soiling_mask(800, 448, 2, p).mask.data);
}

TEST(Soiling, CoverageOutOfRangeRejected) {
  SoilingParams p;
  p.coverage_target = 1.0;
  EXPECT_THROW(procedural_soiling_mask(80, 40, 1, p), InvalidArgument);
  p.coverage_target = 0.0;
  EXPECT_THROW(procedural_soiling_mask(80, 40, 1, p), InvalidArgument);
}

TEST(MaskFile, AllOnesAllZerosAndRoundTrip) {
  testutil::TempDir dir("mask");
  const auto ones = (dir.path() / "ones.pgm").string();
  const auto zeros = (dir.path() / "zeros.pgm").string();
  write_raw_pgm(ones, 8, 4, std::vector<std::uint8_t>(32, 255));
  write_raw_pgm(zeros, 8, 4, std::vector<std::uint8_t>(32, 0));
  EXPECT_EQ(load_mask_file(ones).mask.count(), 32u);
  EXPECT_EQ(load_mask_file(zeros).mask.count(), 0u);

  const auto m = procedural_soiling_mask(64, 48, 3, SoilingParams{});
  const auto path = (dir.path() / "m.pgm").string();
  save_mask_file(path, m);
  EXPECT_EQ(load_mask_file(path).mask.data, m.mask.data);
}

TEST(MaskFile, NonBinaryValueRejected) {
  testutil::TempDir dir("mask");
  std::vector<std::uint8_t> px(32, 0);
  px[5] = 128;
  px[6] = 128;
  const auto path = (dir.path() / "gray.pgm").string();
  write_raw_pgm(path, 8, 4, px);
  try {
    load_mask_file(path);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_mask_file((dir.path() / "missing.pgm").string()), IoError);
}

TEST(MaskFile, ResizedNearestToTarget) {
  testutil::TempDir dir("mask");
  std::vector<std::uint8_t> px(16, 0);
  px[0] = 255;  // top-left pixel of a 4x4 mask
  const auto path = (dir.path() / "small.pgm").string();
  write_raw_pgm(path, 4, 4, px);
  const auto m = load_mask_file(path, 8, 8);
  EXPECT_EQ(m.mask.width, 8);
  EXPECT_EQ(m.mask.count(), 4u);
  EXPECT_EQ(m.mask.at(1, 1), 1);
}

TEST(Apply, EmptyMaskIsByteIdentical) {
  const Image img = random_image(80, 60, 3, 3);
  const auto k = GaussianKernel::make(31);
  EXPECT_EQ(apply_occlusion(img, OcclusionMask::empty(80, 60), k).data, img.data);
  auto opaque = OcclusionMask::empty(80, 60);
  opaque.opacity = Opacity::opaque;
  EXPECT_EQ(apply_occlusion(img, opaque, k).data, img.data);
}

TEST(Apply, FullMaskEqualsBlur) {
  const Image img = random_image(80, 60, 3, 4);
  const auto k = GaussianKernel::make(31);
  OcclusionMask m = OcclusionMask::empty(80, 60);
  std::fill(m.mask.data.begin(), m.mask.data.end(), 1);
  EXPECT_EQ(apply_occlusion(img, m, k).data, gaussian_blur(img, k).data);
}

TEST(Apply, HalfMaskComposite) {
  const Image img = random_image(80, 60, 3, 5);
  const auto k = GaussianKernel::make(15);
  OcclusionMask m = OcclusionMask::empty(80, 60);
  for (int y = 0; y < 60; ++y) for (int x = 0; x < 40; ++x) m.mask.at(x, y) = 1;
  const Image out = apply_occlusion(img, m, k);
  const Image blurred = gaussian_blur(img, k);
  for (int y = 0; y < 60; ++y) {
    for (int x = 0; x < 80; ++x) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_EQ(out.at(x, y, c), x < 40 ? blurred.at(x, y, c) : img.at(x, y, c));
      }
    }
  }
  // Re-applying leaves unmasked pixels untouched.
  const Image twice = apply_occlusion(out, m, k);
  for (int y = 0; y < 60; ++y) for (int x = 40; x < 80; ++x) EXPECT_EQ(twice.at(x, y, 1), img.at(x, y, 1));
}

TEST(Apply, OpaqueSetsMidGray) {
  const Image img = random_image(20, 10, 3, 6);
  OcclusionMask m = OcclusionMask::empty(20, 10);
  m.opacity = Opacity::opaque;
  m.mask.at(3, 4) = 1;
  const Image out = apply_occlusion(img, m, GaussianKernel::make(3));
  for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(3, 4, c), 0.5f);
  EXPECT_EQ(out.at(4, 4, 0), img.at(4, 4, 0));
}

TEST(Apply, ShapeMismatchRejected) {
  const Image img = random_image(20, 10, 3, 7);
  EXPECT_THROW(apply_occlusion(img, OcclusionMask::empty(10, 10), GaussianKernel::make(3)),
               InvalidArgument);
}

TEST(Modes, NameRoundTrip) {
  for (auto m : {OcclusionMode::none, OcclusionMode::random_box, OcclusionMode::overlap,
                 OcclusionMode::realistic}) {
    EXPECT_EQ(parse_occlusion_mode(to_string(m)), m);
  }
  EXPECT_EQ(parse_opacity("blur"), Opacity::translucent_blur);
  EXPECT_EQ(parse_opacity("opaque"), Opacity::opaque);
  EXPECT_THROW(parse_occlusion_mode("fog"), InvalidArgument);
}

class BevOcclusion : public ::testing::Test {
 protected:
  std::vector<CameraModel> rig = nuscenes_like_rig();
  BEVGridSpec grid;

  std::vector<OcclusionMask> empty_masks() const {
    std::vector<OcclusionMask> out;
    for (const auto& c : rig) out.push_back(OcclusionMask::empty(c.intrinsics.width, c.intrinsics.height));
    return out;
  }
  static void fill(OcclusionMask& m) { std::fill(m.mask.data.begin(), m.mask.data.end(), 1); }

  // Fraction oracle evaluated cell by cell from project_point.
  BevMask oracle(const std::vector<OcclusionMask>& masks) const {
    BevMask out(grid);
    for (int ix = 0; ix < grid.nx; ++ix) {
      for (int iy = 0; iy < grid.ny; ++iy) {
        int seen = 0, hidden = 0;
        for (int iz = 0; iz < grid.nz; ++iz) {
          const Vec3 p(grid.cell_center_x(ix), grid.cell_center_y(iy), grid.level_center_z(iz));
          for (std::size_t c = 0; c < rig.size(); ++c) {
            const auto pr = project_point(rig[c], p, Pose::identity());
            if (!pr) continue;
            ++seen;
            // Integer coordinates are pixel centres, so the covering pixel is the nearest one.
            const int px = std::min(rig[c].intrinsics.width - 1, static_cast<int>(std::lround(pr->u)));
            const int py = std::min(rig[c].intrinsics.height - 1, static_cast<int>(std::lround(pr->v)));
            hidden += masks[c].mask.at(px, py);
          }
        }
        out.at(ix, iy) = seen > 0 && 2 * hidden >= seen;
      }
    }
    return out;
  }
};

TEST_F(BevOcclusion, EmptyMasksGiveEmptyBev) {
  EXPECT_EQ(project_occlusion_to_bev(empty_masks(), rig, grid).count(), 0u);
}

TEST_F(BevOcclusion, FrontCameraMaskedMatchesOracle) {
  auto masks = empty_masks();
  fill(masks[0]);
  const BevMask got = project_occlusion_to_bev(masks, rig, grid);
  EXPECT_EQ(got, oracle(masks));
  // Wedge ahead of the ego, not behind it.
  EXPECT_EQ(got.at(grid.bin_x(20.0), grid.bin_y(0.0)), 1);
  EXPECT_EQ(got.at(grid.bin_x(-20.0), grid.bin_y(0.0)), 0);
}

TEST_F(BevOcclusion, AllMaskedEqualsVisibility) {
  auto masks = empty_masks();
  for (auto& m : masks) fill(m);
  const BevMask got = project_occlusion_to_bev(masks, rig, grid);
  EXPECT_EQ(got, oracle(masks));
  std::size_t visible = 0;
  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iy = 0; iy < grid.ny; ++iy) {
      bool any = false;
      for (int iz = 0; iz < grid.nz && !any; ++iz) {
        const Vec3 p(grid.cell_center_x(ix), grid.cell_center_y(iy), grid.level_center_z(iz));
        for (const auto& c : rig) any |= project_point(c, p, Pose::identity()).has_value();
      }
      visible += any;
    }
  }
  EXPECT_EQ(got.count(), visible);
}

TEST_F(BevOcclusion, RandomMasksMatchOracle) {
  auto masks = empty_masks();
  for (std::size_t c = 0; c < rig.size(); ++c) {
    masks[c] = procedural_soiling_mask(800, 448, 100 + c, SoilingParams{});
  }
  EXPECT_EQ(project_occlusion_to_bev(masks, rig, grid), oracle(masks));
}
