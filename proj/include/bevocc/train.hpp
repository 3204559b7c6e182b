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
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevocc/bev.hpp"
#include "bevocc/seg_head.hpp"

namespace bevocc {

struct TrainConfig {
  double learning_rate = 3e-4;
  int epochs = 40;
  int batch_size = 4;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 1e-2;
  /// Weight on positive cells; unset means negative/positive ratio of the
  /// training labels, capped at pos_weight_cap.
  std::optional<double> pos_weight;
  double pos_weight_cap = 10.0;
  /// Fraction of negative cells visited per sample and step. Visited
  /// negatives are reweighted by 1 / rate, so the expected loss and gradient
  /// equal the full-grid ones; 1 evaluates every cell.
  double negative_sample_rate = 1.0;

  void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainSample {
  FeatureStack features;
  BevMask labels;
};

/// Sample indices per optimizer step, grouped by epoch.
using TrainSchedule = std::vector<std::vector<std::vector<int>>>;

/// Seeded Fisher-Yates order per epoch, cut into batches of batch_size.
TrainSchedule make_schedule(std::size_t n_samples, const TrainConfig& cfg);

struct TrainResult {
  SegHeadParams params;
  std::vector<double> loss_curve;  // mean sample loss per epoch
  double pos_weight = 1.0;
};

double auto_pos_weight(std::span<const TrainSample> data, double cap);

/// AdamW with decoupled weight decay. Throws Diverged on a non-finite loss.
TrainResult train(const SegHeadParams& init, std::span<const TrainSample> data,
                  const TrainConfig& cfg);
/// Same, over an explicit schedule (indices into `data`).
TrainResult train(const SegHeadParams& init, std::span<const TrainSample> data,
                  const TrainConfig& cfg, const TrainSchedule& schedule);

/// CSV with header epoch,mean_loss (epochs numbered from 1).
void write_loss_curve(const std::string& path, std::span<const double> curve);

}  // namespace bevocc
