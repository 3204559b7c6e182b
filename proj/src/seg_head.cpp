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

#include "bevocc/seg_head.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "bevocc/error.hpp"
#include "bevocc/rng.hpp"
#include "binary_io.hpp"

namespace bevocc {

template <typename T>
std::vector<T> SegHeadParamsT<T>::flatten() const {
  std::vector<T> out;
  out.reserve(parameter_count());
  out.insert(out.end(), conv1.data(), conv1.data() + conv1.size());
  out.insert(out.end(), bias1.data(), bias1.data() + bias1.size());
  out.insert(out.end(), linear2.data(), linear2.data() + linear2.size());
  out.push_back(bias2);
  return out;
}

template <typename T>
void SegHeadParamsT<T>::unflatten(std::span<const T> values) {
  if (values.size() != parameter_count()) {
    throw InvalidArgument("unflatten: expected " + std::to_string(parameter_count()) + " values");
  }
  auto it = values.begin();
  std::copy_n(it, conv1.size(), conv1.data());
  it += conv1.size();
  std::copy_n(it, hidden, bias1.data());
  it += hidden;
  std::copy_n(it, hidden, linear2.data());
  it += hidden;
  bias2 = *it;
}

template struct SegHeadParamsT<float>;
template struct SegHeadParamsT<double>;

SegHeadParams init_params(int c_in, int hidden, std::uint64_t seed) {
  if (c_in < 1 || hidden < 1) throw InvalidArgument("init_params: c_in and hidden must be >= 1");
  SegHeadParams p(c_in, hidden);
  Rng rng(seed);
  const double s1 = std::sqrt(2.0 / (9.0 * c_in));
  const double s2 = std::sqrt(1.0 / hidden);
  for (Eigen::Index i = 0; i < p.conv1.size(); ++i) {
    p.conv1.data()[i] = static_cast<float>(rng.normal(0.0, s1));
  }
  for (int h = 0; h < hidden; ++h) p.linear2[h] = static_cast<float>(rng.normal(0.0, s2));
  return p;
}

namespace {

constexpr Eigen::Index kChunk = 2048;

// Builds 3x3 zero-padded patches for a run of cells. Small cell subsets load
// neighbours on demand; large ones read from a dense copy of the stack.
template <typename T>
class PatchGatherer {
 public:
  using Matrix = typename SegHeadParamsT<T>::Matrix;

  PatchGatherer(const FeatureStack& bev, std::size_t n_cells)
      : bev_(bev), c_(bev.channels()), nx_(bev.spec().nx), ny_(bev.spec().ny),
        scratch_(static_cast<std::size_t>(c_)) {
    if (n_cells * 4 > static_cast<std::size_t>(bev.cells())) {
      dense_.resize(static_cast<std::size_t>(bev.cells()) * c_);
      for (int cell = 0; cell < bev.cells(); ++cell) {
        bev.load(cell, dense_.data() + static_cast<std::size_t>(cell) * c_);
      }
    }
  }

  void gather(std::span<const int> cells, Matrix& patches) {
    patches.setZero(static_cast<Eigen::Index>(cells.size()), 9 * c_);
    for (std::size_t r = 0; r < cells.size(); ++r) {
      const int ix = cells[r] / ny_;
      const int iy = cells[r] % ny_;
      T* row = patches.data() + static_cast<Eigen::Index>(r) * patches.cols();
      for (int di = -1; di <= 1; ++di) {
        const int jx = ix + di;
        if (jx < 0 || jx >= nx_) continue;
        for (int dj = -1; dj <= 1; ++dj) {
          const int jy = iy + dj;
          if (jy < 0 || jy >= ny_) continue;
          const int tap = (di + 1) * 3 + (dj + 1);
          const int neighbour = jx * ny_ + jy;
          const float* src;
          if (!dense_.empty()) {
            src = dense_.data() + static_cast<std::size_t>(neighbour) * c_;
          } else {
            bev_.load(neighbour, scratch_.data());
            src = scratch_.data();
          }
          T* dst = row + tap * c_;
          for (int c = 0; c < c_; ++c) dst[c] = static_cast<T>(src[c]);
        }
      }
    }
  }

 private:
  const FeatureStack& bev_;
  int c_, nx_, ny_;
  std::vector<float> dense_;
  std::vector<float> scratch_;
};

template <typename T>
void check_channels(const SegHeadParamsT<T>& params, const FeatureStack& bev) {
  if (bev.channels() != params.c_in) {
    throw InvalidArgument("seg head expects " + std::to_string(params.c_in) +
                          " input channels, got " + std::to_string(bev.channels()));
  }
}

std::vector<int> all_cells(int n) {
  std::vector<int> cells(static_cast<std::size_t>(n));
  std::iota(cells.begin(), cells.end(), 0);
  return cells;
}

}  // namespace

template <typename T>
std::vector<T> forward(const SegHeadParamsT<T>& params, const FeatureStack& bev,
                       std::span<const int> cells) {
  check_channels(params, bev);
  using Matrix = typename SegHeadParamsT<T>::Matrix;
  std::vector<T> logits(cells.size());
  PatchGatherer<T> gatherer(bev, cells.size());
  Matrix patches, pre;
  typename SegHeadParamsT<T>::Vector chunk;
  for (std::size_t start = 0; start < cells.size(); start += kChunk) {
    const std::size_t n = std::min<std::size_t>(kChunk, cells.size() - start);
    gatherer.gather(cells.subspan(start, n), patches);
    pre.noalias() = patches * params.conv1.transpose();
    pre.rowwise() += params.bias1.transpose();
    chunk.noalias() = pre.cwiseMax(T(0)) * params.linear2;
    chunk.array() += params.bias2;
    std::copy(chunk.data(), chunk.data() + n, logits.begin() + static_cast<std::ptrdiff_t>(start));
  }
  return logits;
}

template <typename T>
std::vector<T> forward(const SegHeadParamsT<T>& params, const FeatureStack& bev) {
  const auto cells = all_cells(bev.cells());
  return forward(params, bev, std::span<const int>(cells));
}

template <typename T>
LossResultT<T> bce_with_logits_loss(std::span<const T> logits, std::span<const std::uint8_t> labels,
                                    const LossOptions& options, std::span<const T> sample_weights) {
  if (logits.size() != labels.size()) throw InvalidArgument("bce_with_logits_loss: shape mismatch");
  if (!sample_weights.empty() && sample_weights.size() != logits.size()) {
    throw InvalidArgument("bce_with_logits_loss: sample weight count mismatch");
  }
  const double n = options.normalizer > 0.0 ? options.normalizer : static_cast<double>(logits.size());
  LossResultT<T> result;
  result.grad.resize(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double x = static_cast<double>(logits[i]);
    const double y = labels[i] ? 1.0 : 0.0;
    double w = sample_weights.empty() ? 1.0 : static_cast<double>(sample_weights[i]);
    if (labels[i]) w *= options.pos_weight;
    const double loss = std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    const double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    total += w * loss;
    result.grad[i] = static_cast<T>(w * (sig - y) / n);
  }
  result.loss = total / n;
  return result;
}

template <typename T>
SegHeadParamsT<T> backward(const SegHeadParamsT<T>& params, const FeatureStack& bev,
                           std::span<const T> grad_logits, std::span<const int> cells) {
  check_channels(params, bev);
  std::vector<int> every;
  if (cells.empty()) {
    every = all_cells(bev.cells());
    cells = every;
  }
  if (grad_logits.size() != cells.size()) throw InvalidArgument("backward: gradient size mismatch");
  using Matrix = typename SegHeadParamsT<T>::Matrix;
  using Vector = typename SegHeadParamsT<T>::Vector;
  SegHeadParamsT<T> grads(params.c_in, params.hidden);
  PatchGatherer<T> gatherer(bev, cells.size());
  Matrix patches, pre, dpre;
  for (std::size_t start = 0; start < cells.size(); start += kChunk) {
    const std::size_t n = std::min<std::size_t>(kChunk, cells.size() - start);
    gatherer.gather(cells.subspan(start, n), patches);
    pre.noalias() = patches * params.conv1.transpose();
    pre.rowwise() += params.bias1.transpose();
    // Copied into aligned storage: vectorized reductions over a Map peel by
    // address, which would make the rounding depend on the allocation.
    const Vector g = Eigen::Map<const Vector>(grad_logits.data() + start, static_cast<Eigen::Index>(n));
    grads.linear2.noalias() += pre.cwiseMax(T(0)).transpose() * g;
    grads.bias2 += g.sum();
    dpre = (g * params.linear2.transpose()).cwiseProduct(
        (pre.array() > T(0)).template cast<T>().matrix());
    grads.conv1.noalias() += dpre.transpose() * patches;
    grads.bias1 += dpre.colwise().sum().transpose();
  }
  return grads;
}

template <typename T>
std::pair<double, SegHeadParamsT<T>> loss_and_gradient(const SegHeadParamsT<T>& params,
                                                       const FeatureStack& bev,
                                                       std::span<const int> cells,
                                                       std::span<const std::uint8_t> labels,
                                                       const LossOptions& options,
                                                       std::span<const T> sample_weights) {
  check_channels(params, bev);
  if (labels.size() != cells.size()) throw InvalidArgument("loss_and_gradient: label count mismatch");
  using Matrix = typename SegHeadParamsT<T>::Matrix;
  using Vector = typename SegHeadParamsT<T>::Vector;
  SegHeadParamsT<T> grads(params.c_in, params.hidden);
  PatchGatherer<T> gatherer(bev, cells.size());
  Matrix patches, pre, dpre;
  Vector logits;
  double loss = 0.0;
  for (std::size_t start = 0; start < cells.size(); start += kChunk) {
    const std::size_t n = std::min<std::size_t>(kChunk, cells.size() - start);
    gatherer.gather(cells.subspan(start, n), patches);
    pre.noalias() = patches * params.conv1.transpose();
    pre.rowwise() += params.bias1.transpose();
    logits.noalias() = pre.cwiseMax(T(0)) * params.linear2;
    logits.array() += params.bias2;
    const auto part = bce_with_logits_loss<T>(
        std::span<const T>(logits.data(), n), labels.subspan(start, n), options,
        sample_weights.empty() ? std::span<const T>{} : sample_weights.subspan(start, n));
    loss += part.loss;
    const Vector g = Eigen::Map<const Vector>(part.grad.data(), static_cast<Eigen::Index>(n));
    grads.linear2.noalias() += pre.cwiseMax(T(0)).transpose() * g;
    grads.bias2 += g.sum();
    dpre = (g * params.linear2.transpose()).cwiseProduct(
        (pre.array() > T(0)).template cast<T>().matrix());
    grads.conv1.noalias() += dpre.transpose() * patches;
    grads.bias1 += dpre.colwise().sum().transpose();
  }
  return {loss, std::move(grads)};
}

template <typename T>
std::pair<double, SegHeadParamsT<T>> loss_and_gradient(const SegHeadParamsT<T>& params,
                                                       const FeatureStack& bev,
                                                       const BevMask& labels,
                                                       const LossOptions& options) {
  if (labels.nx != bev.spec().nx || labels.ny != bev.spec().ny) {
    throw InvalidArgument("loss_and_gradient: label shape mismatch");
  }
  const auto cells = all_cells(bev.cells());
  LossOptions opts = options;
  if (opts.normalizer <= 0.0) opts.normalizer = static_cast<double>(cells.size());
  return loss_and_gradient<T>(params, bev, cells, labels.data, opts);
}

#define BEVOCC_INSTANTIATE(T)                                                                     \
  template std::vector<T> forward(const SegHeadParamsT<T>&, const FeatureStack&);                 \
  template std::vector<T> forward(const SegHeadParamsT<T>&, const FeatureStack&,                  \
                                  std::span<const int>);                                          \
  template LossResultT<T> bce_with_logits_loss(std::span<const T>, std::span<const std::uint8_t>, \
                                               const LossOptions&, std::span<const T>);           \
  template SegHeadParamsT<T> backward(const SegHeadParamsT<T>&, const FeatureStack&,              \
                                      std::span<const T>, std::span<const int>);                  \
  template std::pair<double, SegHeadParamsT<T>> loss_and_gradient(                                \
      const SegHeadParamsT<T>&, const FeatureStack&, const BevMask&, const LossOptions&);         \
  template std::pair<double, SegHeadParamsT<T>> loss_and_gradient(                                \
      const SegHeadParamsT<T>&, const FeatureStack&, std::span<const int>,                        \
      std::span<const std::uint8_t>, const LossOptions&, std::span<const T>);
BEVOCC_INSTANTIATE(float)
BEVOCC_INSTANTIATE(double)
#undef BEVOCC_INSTANTIATE

BevMask threshold_logits(std::span<const float> logits, int nx, int ny) {
  if (logits.size() != static_cast<std::size_t>(nx) * ny) {
    throw InvalidArgument("threshold_logits: size mismatch");
  }
  BevMask mask(nx, ny);
  for (std::size_t i = 0; i < logits.size(); ++i) mask.data[i] = logits[i] >= 0.0f ? 1 : 0;
  return mask;
}

BevMask predict(const SegHeadParams& params, const FeatureStack& bev) {
  return threshold_logits(forward(params, bev), bev.spec().nx, bev.spec().ny);
}

using detail::get_u32;
using detail::put_u32;

void save_params(const std::string& path, const SegHeadParams& params, const nlohmann::json& metadata) {
  const auto values = params.flatten();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write("BEVP", 4);
  put_u32(out, kParamsVersion);
  put_u32(out, static_cast<std::uint32_t>(params.c_in));
  put_u32(out, static_cast<std::uint32_t>(params.hidden));
  put_u32(out, static_cast<std::uint32_t>(values.size()));
  for (float f : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  if (!out) throw IoError("failed writing " + path);

  nlohmann::json side = metadata;
  side["version"] = kParamsVersion;
  side["layers"] = {
      {{"name", "conv1"}, {"shape", {params.hidden, 3, 3, params.c_in}}},
      {{"name", "bias1"}, {"shape", {params.hidden}}},
      {{"name", "linear2"}, {"shape", {params.hidden}}},
      {{"name", "bias2"}, {"shape", {1}}},
  };
  std::ofstream js(path + ".json");
  if (!js) throw IoError("cannot write " + path + ".json");
  js << side.dump(2) << '\n';
}

SegHeadParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::array<unsigned char, 20> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (!in || std::memcmp(header.data(), "BEVP", 4) != 0) throw IoError(path + ": not a parameter file");
  if (get_u32(header.data() + 4) != kParamsVersion) throw IoError(path + ": unsupported version");
  const auto c_in = static_cast<int>(get_u32(header.data() + 8));
  const auto hidden = static_cast<int>(get_u32(header.data() + 12));
  const auto count = get_u32(header.data() + 16);
  if (c_in < 1 || hidden < 1) throw IoError(path + ": bad layer shape");
  SegHeadParams params(c_in, hidden);
  if (count != params.parameter_count()) throw IoError(path + ": parameter count disagrees with shape");
  std::vector<unsigned char> raw(static_cast<std::size_t>(count) * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw IoError(path + ": truncated payload");
  std::vector<float> values(count);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint32_t bits = get_u32(raw.data() + 4 * i);
    std::memcpy(&values[i], &bits, 4);
  }
  params.unflatten(values);
  return params;
}

}  // namespace bevocc
