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

#include <cstddef>
#include <string>
#include <vector>

#include "bevocc/bev.hpp"
#include "bevocc/bev_grid.hpp"
#include "bevocc/geometry.hpp"
#include "bevocc/image.hpp"

namespace bevocc {

struct PanelInputs {
  std::vector<Image> views;        // occluded camera images, rig order
  std::vector<std::string> names;  // camera names, rig order
  BEVFeatureMap camera_bev;        // flattened camera features (first 3 channels per level are RGB)
  BevMask occlusion;               // BEV occlusion footprint
  BevMask camera_pred;
  BevMask fused_pred;
  BevMask gt;
};

struct PanelSet {
  std::vector<Image> panels;  // six panels, each nx*scale rows by ny*scale columns
  std::size_t recovered = 0;  // cells with fused = 1, camera-only = 0, gt = 1
};

/// Six left-to-right panels: camera mosaic, BEV camera features, occlusion
/// mask in red, camera-only prediction under the occlusion overlay, fused
/// prediction with recovered cells outlined, ground truth. BEV panels put
/// +x (forward) up and +y (left) to the left.
PanelSet render_panels(const PanelInputs& in, int scale = 4);

/// Writes <dir>/scene_<id>_<k>.ppm for k = 1..6.
std::vector<std::string> save_panels(const std::string& dir, const std::string& scene_id,
                                     const PanelSet& set);

}  // namespace bevocc
