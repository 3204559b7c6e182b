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
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevocc/bev.hpp"
#include "bevocc/config.hpp"
#include "bevocc/metrics.hpp"
#include "bevocc/occlusion.hpp"

namespace bevocc {

struct MatrixCell {
  ModalitySet modality = kCamera;
  OcclusionMode occlusion = OcclusionMode::none;
  double iou_pct = 0.0;
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
  int n_scenes = 0;
  int empty_union_scenes = 0;
  bool failed = false;
  std::string error;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<MatrixCell> cells;
  std::map<ModalitySet, double> degradation;  // unrounded percent
  std::map<ModalitySet, std::vector<double>> loss_curves;
};

/// {modality x occlusion} IoU grid. Top-level cells average iou_pct over the
/// seeds whose cell succeeded.
struct ExperimentMatrix {
  std::string config_hash;
  std::vector<ModalitySet> modalities;
  std::vector<OcclusionMode> occlusions;
  std::vector<MatrixCell> cells;
  std::map<ModalitySet, double> degradation;
  std::vector<SeedResult> per_seed;

  const MatrixCell* find(ModalitySet m, OcclusionMode o) const;
  bool any_failed() const;
};

struct RunOptions {
  int jobs = 1;
  /// Run directory; when set, models, feature dumps, panels and the matrix
  /// files are written beneath it.
  std::optional<std::filesystem::path> out_dir;
};

/// Trains one head per modality (on clean data unless retrain_per_condition)
/// and evaluates it under every occlusion condition, for each seed.
/// Divergence marks the affected cells failed and the run continues.
ExperimentMatrix run_matrix(const ResolvedConfig& cfg, const RunOptions& options = {});

inline constexpr int kMatrixSchemaVersion = 1;
nlohmann::json matrix_to_json(const ExperimentMatrix& m);
/// Rows are occlusion conditions plus a degradation row; columns are
/// modalities. Values are percentages with one decimal.
std::string matrix_to_csv(const ExperimentMatrix& m);
void write_matrix(const std::filesystem::path& results_dir, const ExperimentMatrix& m);

/// Column label used in reports: "C", "C+R", ...
std::string modality_label(ModalitySet m);

}  // namespace bevocc
