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

#include "bevocc/train.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "bevocc/error.hpp"
#include "bevocc/rng.hpp"

namespace bevocc {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidArgument("train.learning_rate must be a finite value >= 0");
  }
  if (epochs < 1) throw InvalidArgument("train.epochs must be >= 1");
  if (batch_size < 1) throw InvalidArgument("train.batch_size must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidArgument("train.beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidArgument("train.beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("train.epsilon must be > 0");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("train.weight_decay must be >= 0");
  if (pos_weight && !(*pos_weight > 0.0)) throw InvalidArgument("train.pos_weight must be > 0");
  if (!(pos_weight_cap >= 1.0)) throw InvalidArgument("train.pos_weight_cap must be >= 1");
  if (!(negative_sample_rate > 0.0 && negative_sample_rate <= 1.0)) {
    throw InvalidArgument("train.negative_sample_rate must be in (0, 1]");
  }
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"beta1", cfg.beta1},
          {"beta2", cfg.beta2},
          {"epsilon", cfg.epsilon},
          {"weight_decay", cfg.weight_decay},
          {"pos_weight", cfg.pos_weight ? nlohmann::json(*cfg.pos_weight) : nlohmann::json(nullptr)},
          {"pos_weight_cap", cfg.pos_weight_cap},
          {"negative_sample_rate", cfg.negative_sample_rate}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.beta2 = j.value("beta2", cfg.beta2);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  if (j.contains("pos_weight") && !j.at("pos_weight").is_null()) {
    cfg.pos_weight = j.at("pos_weight").get<double>();
  }
  cfg.pos_weight_cap = j.value("pos_weight_cap", cfg.pos_weight_cap);
  cfg.negative_sample_rate = j.value("negative_sample_rate", cfg.negative_sample_rate);
  return cfg;
}

TrainSchedule make_schedule(std::size_t n_samples, const TrainConfig& cfg) {
  TrainSchedule schedule;
  std::vector<int> order(n_samples);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(Rng::mix(cfg.seed, 0x5348554646ull + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = n_samples; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    auto& batches = schedule.emplace_back();
    for (std::size_t s = 0; s < n_samples; s += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(n_samples, s + static_cast<std::size_t>(cfg.batch_size));
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                           order.begin() + static_cast<std::ptrdiff_t>(e));
    }
  }
  return schedule;
}

double auto_pos_weight(std::span<const TrainSample> data, double cap) {
  std::size_t pos = 0;
  std::size_t total = 0;
  for (const auto& s : data) {
    pos += s.labels.count();
    total += s.labels.data.size();
  }
  if (pos == 0) return 1.0;
  return std::min(cap, static_cast<double>(total - pos) / static_cast<double>(pos));
}

namespace {

class AdamW {
 public:
  AdamW(std::size_t n, const TrainConfig& cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<float>& params, const std::vector<double>& grad) {
    ++t_;
    const double lr = cfg_.learning_rate;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      double p = params[i];
      p *= 1.0 - lr * cfg_.weight_decay;
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      p -= lr * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + cfg_.epsilon);
      params[i] = static_cast<float>(p);
    }
  }

 private:
  const TrainConfig& cfg_;
  std::vector<double> m_, v_;
  int t_ = 0;
};

// Cells visited for one sample at one step, with their importance weights.
struct CellDraw {
  std::vector<int> cells;
  std::vector<float> weights;
  std::vector<std::uint8_t> labels;
};

CellDraw draw_cells(const BevMask& labels, double rate, std::uint64_t seed) {
  CellDraw d;
  if (rate >= 1.0) {
    d.cells.resize(labels.data.size());
    std::iota(d.cells.begin(), d.cells.end(), 0);
    d.weights.assign(labels.data.size(), 1.0f);
    d.labels = labels.data;
    return d;
  }
  Rng rng(seed);
  const auto inv = static_cast<float>(1.0 / rate);
  for (std::size_t i = 0; i < labels.data.size(); ++i) {
    const bool positive = labels.data[i] != 0;
    // One draw per cell keeps the stream aligned regardless of labels.
    const bool keep = rng.uniform() < rate;
    if (!positive && !keep) continue;
    d.cells.push_back(static_cast<int>(i));
    d.weights.push_back(positive ? 1.0f : inv);
    d.labels.push_back(positive ? 1 : 0);
  }
  return d;
}

}  // namespace

TrainResult train(const SegHeadParams& init, std::span<const TrainSample> data,
                  const TrainConfig& cfg) {
  return train(init, data, cfg, make_schedule(data.size(), cfg));
}

TrainResult train(const SegHeadParams& init, std::span<const TrainSample> data,
                  const TrainConfig& cfg, const TrainSchedule& schedule) {
  cfg.validate();
  if (data.empty()) throw InvalidArgument("train: dataset is empty");
  for (const auto& s : data) {
    if (s.features.channels() != init.c_in) throw InvalidArgument("train: channel count mismatch");
    if (s.labels.nx != s.features.spec().nx || s.labels.ny != s.features.spec().ny) {
      throw InvalidArgument("train: label shape mismatch");
    }
  }

  TrainResult result;
  result.pos_weight = cfg.pos_weight ? *cfg.pos_weight : auto_pos_weight(data, cfg.pos_weight_cap);
  SegHeadParams params = init;
  std::vector<float> flat = params.flatten();
  std::vector<double> grad(flat.size());
  AdamW opt(flat.size(), cfg);
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < schedule.size(); ++epoch) {
    double epoch_loss = 0.0;
    std::size_t epoch_samples = 0;
    for (const auto& batch : schedule[epoch]) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t slot = 0; slot < batch.size(); ++slot) {
        const TrainSample& sample = data[static_cast<std::size_t>(batch[slot])];
        const auto draw = draw_cells(sample.labels, cfg.negative_sample_rate,
                                     Rng::mix(Rng::mix(cfg.seed, step), slot));
        LossOptions opts;
        opts.pos_weight = result.pos_weight;
        opts.normalizer = static_cast<double>(sample.labels.data.size());
        const auto [loss, grads] = loss_and_gradient<float>(params, sample.features, draw.cells,
                                                            draw.labels, opts, draw.weights);
        if (!std::isfinite(loss)) {
          throw Diverged(static_cast<int>(epoch) + 1,
                         fmt::format("training diverged in epoch {}", epoch + 1));
        }
        epoch_loss += loss;
        ++epoch_samples;
        const auto g = grads.flatten();
        for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
      }
      const double inv = 1.0 / static_cast<double>(batch.size());
      for (double& v : grad) v *= inv;
      opt.step(flat, grad);
      params.unflatten(flat);
      ++step;
    }
    const double mean = epoch_loss / static_cast<double>(std::max<std::size_t>(epoch_samples, 1));
    result.loss_curve.push_back(mean);
    spdlog::debug("epoch {} mean loss {:.6f}", epoch + 1, mean);
  }
  result.params = std::move(params);
  return result;
}

void write_loss_curve(const std::string& path, std::span<const double> curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "epoch,mean_loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << fmt::format("{},{:.9g}\n", i + 1, curve[i]);
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace bevocc
