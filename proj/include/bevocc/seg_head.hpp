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
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bevocc/bev.hpp"
#include "bevocc/bev_grid.hpp"

namespace bevocc {

/// Two-layer BEV head: 3x3 convolution (c_in -> hidden, zero padding) with
/// bias and ReLU, then a per-cell linear map to one logit.
///
/// conv1 is stored as a hidden x (9 * c_in) matrix. Column (tap * c_in + c)
/// with tap = (di + 1) * 3 + (dj + 1) weights channel c of neighbour
/// (ix + di, iy + dj).
template <typename T>
struct SegHeadParamsT {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

  int c_in = 0;
  int hidden = 0;
  Matrix conv1;
  Vector bias1;
  Vector linear2;
  T bias2 = T(0);

  SegHeadParamsT() = default;
  SegHeadParamsT(int c, int h)
      : c_in(c), hidden(h), conv1(Matrix::Zero(h, 9 * c)), bias1(Vector::Zero(h)),
        linear2(Vector::Zero(h)) {}

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(9) * c_in * hidden + 2 * static_cast<std::size_t>(hidden) + 1;
  }

  /// All parameters in the order conv1 (row-major), bias1, linear2, bias2.
  std::vector<T> flatten() const;
  void unflatten(std::span<const T> values);

  template <typename U>
  SegHeadParamsT<U> cast() const {
    SegHeadParamsT<U> out(c_in, hidden);
    out.conv1 = conv1.template cast<U>();
    out.bias1 = bias1.template cast<U>();
    out.linear2 = linear2.template cast<U>();
    out.bias2 = static_cast<U>(bias2);
    return out;
  }
};

using SegHeadParams = SegHeadParamsT<float>;

/// He-normal conv1, unit-variance-preserving linear2, zero biases.
SegHeadParams init_params(int c_in, int hidden, std::uint64_t seed);

/// Logits for every cell (flat index ix * ny + iy).
template <typename T>
std::vector<T> forward(const SegHeadParamsT<T>& params, const FeatureStack& bev);

/// Logits for the listed cells only.
template <typename T>
std::vector<T> forward(const SegHeadParamsT<T>& params, const FeatureStack& bev,
                       std::span<const int> cells);

inline std::vector<float> forward(const SegHeadParams& params, const BEVFeatureMap& bev) {
  return forward(params, FeatureStack(bev));
}

template <typename T>
struct LossResultT {
  double loss = 0.0;
  std::vector<T> grad;  // d loss / d logit
};
using LossResult = LossResultT<float>;

struct LossOptions {
  double pos_weight = 1.0;  // multiplies the y = 1 term
  double normalizer = 0.0;  // N; 0 means the number of logits
};

/// Weighted binary cross-entropy on logits in the stable form
/// max(x, 0) - x y + log(1 + exp(-|x|)). Cell i carries weight
/// sample_weights[i] (default 1) times pos_weight when y = 1; the loss is the
/// weighted sum divided by the normalizer.
template <typename T>
LossResultT<T> bce_with_logits_loss(std::span<const T> logits, std::span<const std::uint8_t> labels,
                                    const LossOptions& options = {},
                                    std::span<const T> sample_weights = {});

inline LossResult bce_with_logits_loss(std::span<const float> logits, const BevMask& labels,
                                       const LossOptions& options = {}) {
  return bce_with_logits_loss<float>(logits, labels.data, options);
}

/// Backpropagates d loss / d logit for the listed cells (all cells when
/// `cells` is empty) into parameter gradients.
template <typename T>
SegHeadParamsT<T> backward(const SegHeadParamsT<T>& params, const FeatureStack& bev,
                           std::span<const T> grad_logits, std::span<const int> cells = {});

/// Loss over the listed cells and its parameter gradients in one pass
/// (labels and optional weights are per listed cell).
template <typename T>
std::pair<double, SegHeadParamsT<T>> loss_and_gradient(const SegHeadParamsT<T>& params,
                                                       const FeatureStack& bev,
                                                       std::span<const int> cells,
                                                       std::span<const std::uint8_t> labels,
                                                       const LossOptions& options,
                                                       std::span<const T> sample_weights = {});

/// Full loss and parameter gradients for one labelled map.
template <typename T>
std::pair<double, SegHeadParamsT<T>> loss_and_gradient(const SegHeadParamsT<T>& params,
                                                       const FeatureStack& bev,
                                                       const BevMask& labels,
                                                       const LossOptions& options = {});

/// Cell is 1 iff its logit >= 0.
BevMask threshold_logits(std::span<const float> logits, int nx, int ny);
BevMask predict(const SegHeadParams& params, const FeatureStack& bev);

// Parameter file: magic "BEVP", then version, c_in, hidden, parameter count
// as little-endian uint32, then float32 values in flatten() order. The JSON
// sidecar (<path>.json) records shapes and caller metadata.
inline constexpr std::uint32_t kParamsVersion = 1;
void save_params(const std::string& path, const SegHeadParams& params,
                 const nlohmann::json& metadata = nlohmann::json::object());
SegHeadParams load_params(const std::string& path);

}  // namespace bevocc
