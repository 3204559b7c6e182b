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
#include <optional>
#include <string>
#include <vector>

#include "bevocc/bev_grid.hpp"
#include "bevocc/geometry.hpp"
#include "bevocc/image.hpp"

namespace bevocc {

enum class OcclusionMode { none, random_box, overlap, realistic };
enum class Opacity { translucent_blur, opaque };

/// CLI spellings: none, random, overlap, realistic / blur, opaque.
std::string to_string(OcclusionMode mode);
std::string to_string(Opacity opacity);
OcclusionMode parse_occlusion_mode(const std::string& s);
Opacity parse_opacity(const std::string& s);

/// Per-camera binary soiling mask (1 = occluded pixel).
struct OcclusionMask {
  BinaryImage mask;
  OcclusionMode mode = OcclusionMode::none;
  Opacity opacity = Opacity::translucent_blur;
  std::uint64_t seed = 0;

  static OcclusionMask empty(int width, int height);
};

/// Normalized 1D Gaussian taps; the 2D filter is their outer product.
struct GaussianKernel {
  int size = 0;
  double sigma = 0.0;
  std::vector<double> weights;

  /// Throws InvalidArgument unless size is odd and positive and sigma > 0.
  /// Without an explicit sigma the kernel spans +-3 sigma: (size - 1) / 6.
  static GaussianKernel make(int size, std::optional<double> sigma = std::nullopt);
  int radius() const { return size / 2; }
};

inline constexpr int kDefaultBlurKernelSize = 251;

/// One axis-aligned square of side floor(side_fraction * height) (clamped to
/// the image width), placed uniformly at random fully inside the image.
OcclusionMask random_box_mask(int width, int height, std::uint64_t seed,
                              double side_fraction = 0.4);

/// Masks every pixel whose ray, unprojected to `reference_range` metres of
/// depth, lands in view of at least one other camera of the rig.
OcclusionMask overlap_region_mask(const std::vector<CameraModel>& rig, const CameraModel& cam,
                                  double reference_range = 20.0);

struct SoilingParams {
  int n_blobs = 6;
  double coverage_target = 0.3;
};

/// Union of smooth random blobs, thresholded so the masked fraction matches
/// coverage_target (within 0.05).
OcclusionMask procedural_soiling_mask(int width, int height, std::uint64_t seed,
                                      const SoilingParams& params);

/// Reads a 0/255 PGM soiling pattern. When target dimensions are given and
/// differ, the mask is resized nearest-neighbour with a logged warning.
OcclusionMask load_mask_file(const std::string& path, std::optional<int> target_width = {},
                             std::optional<int> target_height = {});
void save_mask_file(const std::string& path, const OcclusionMask& mask);

/// Separable convolution (horizontal, then vertical) with clamp-to-edge
/// borders. Requires kernel.size <= 2 * min(width, height) + 1.
Image gaussian_blur(const Image& img, const GaussianKernel& kernel);

/// Masked pixels take the blurred value (translucent) or mid-gray (opaque);
/// all other pixels are copied unchanged.
Image apply_occlusion(const Image& img, const OcclusionMask& mask, const GaussianKernel& kernel);

/// Same as apply_occlusion with the full-image blur supplied by the caller,
/// so one blur can serve several masks.
Image composite_occlusion(const Image& img, const Image& blurred, const OcclusionMask& mask);

/// BEV cells whose in-view voxel-centre projections land on occluded pixels
/// at least `threshold` of the time. Cells no camera sees stay 0.
BevMask project_occlusion_to_bev(const std::vector<OcclusionMask>& masks,
                                 const std::vector<CameraModel>& rig, const BEVGridSpec& grid,
                                 const Pose& ego_pose = Pose::identity(),
                                 double threshold = 0.5);

}  // namespace bevocc
