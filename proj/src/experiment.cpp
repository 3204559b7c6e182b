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

#include "bevocc/experiment.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <fstream>
#include <memory>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "bevocc/error.hpp"
#include "bevocc/panels.hpp"
#include "bevocc/parallel.hpp"
#include "bevocc/pipeline.hpp"
#include "bevocc/rng.hpp"
#include "bevocc/seg_head.hpp"
#include "bevocc/train.hpp"

namespace bevocc {

namespace fs = std::filesystem;

std::string modality_label(ModalitySet m) {
  std::string s = modality_name(m);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::toupper(c); });
  return s;
}

const MatrixCell* ExperimentMatrix::find(ModalitySet m, OcclusionMode o) const {
  for (const auto& c : cells) {
    if (c.modality == m && c.occlusion == o) return &c;
  }
  return nullptr;
}

bool ExperimentMatrix::any_failed() const {
  return std::any_of(cells.begin(), cells.end(), [](const MatrixCell& c) { return c.failed; }) ||
         std::any_of(per_seed.begin(), per_seed.end(), [](const SeedResult& s) {
           return std::any_of(s.cells.begin(), s.cells.end(), [](const MatrixCell& c) { return c.failed; });
         });
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

bool needs(const std::vector<ModalitySet>& mods, ModalitySet bit) {
  return std::any_of(mods.begin(), mods.end(), [bit](ModalitySet m) { return (m & bit) != 0; });
}

struct PackedScene {
  std::shared_ptr<const PackedBEV> camera, radar, lidar;
  BevMask gt;
};

FeatureStack stack_for(ModalitySet m, const std::shared_ptr<const PackedBEV>& camera,
                       const std::shared_ptr<const PackedBEV>& radar,
                       const std::shared_ptr<const PackedBEV>& lidar) {
  FeatureStack s;
  if (m & kCamera) s.add(camera);
  if (m & kRadar) s.add(radar);
  if (m & kLidar) s.add(lidar);
  return s;
}

int input_channels(const ResolvedConfig& cfg, ModalitySet m) {
  int c = 0;
  if (m & kCamera) c += cfg.grid.nz * 8;
  if (m & kRadar) c += 2 * cfg.grid.nz;
  if (m & kLidar) c += cfg.grid.nz;
  return c;
}

std::vector<PackedScene> build_train_store(const ResolvedConfig& cfg, std::uint64_t seed,
                                           OcclusionMode condition,
                                           const std::vector<CameraModel>& rig,
                                           const OcclusionSynth& synth, int jobs) {
  const auto& mods = cfg.experiment.modalities;
  std::vector<PackedScene> store(static_cast<std::size_t>(cfg.data.train_scenes));
  parallel_for(store.size(), jobs, [&](std::size_t i) {
    const auto s = scene_seed(seed, Split::train, static_cast<int>(i));
    const auto frame = simulate_frame(make_scene(cfg.data, s), rig, cfg.sensors, cfg.grid);
    auto images = frame.colors();
    if (condition != OcclusionMode::none) {
      const auto masks = synth.masks(condition, s, seed);
      images = synth.apply(images, synth.blur_all(images), masks);
    }
    PackedScene& out = store[i];
    out.camera = std::make_shared<PackedBEV>(PackedBEV::pack(
        camera_bev(images, rig, frame.scene.ego_pose, cfg.grid, cfg.model.feature_stride)));
    if (needs(mods, kRadar)) {
      out.radar = std::make_shared<PackedBEV>(
          PackedBEV::pack(radar_bev(frame.radar, cfg.grid, cfg.sensors.velocity_pooling)));
    }
    if (needs(mods, kLidar)) {
      out.lidar = std::make_shared<PackedBEV>(PackedBEV::pack(lidar_bev(frame.lidar, cfg.grid)));
    }
    out.gt = frame.gt;
  });
  return store;
}

struct TrainedModel {
  std::optional<SegHeadParams> params;
  std::vector<double> loss_curve;
  std::string error;
};

// Per-scene evaluation counts, indexed [occlusion][modality].
using SceneCounts = std::vector<std::vector<IoUResult>>;

OcclusionMode panel_condition(const std::vector<OcclusionMode>& occs) {
  if (std::find(occs.begin(), occs.end(), OcclusionMode::realistic) != occs.end()) {
    return OcclusionMode::realistic;
  }
  return occs.back();
}

std::size_t fused_index(const std::vector<ModalitySet>& mods) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < mods.size(); ++i) {
    if (std::popcount(mods[i]) > std::popcount(mods[best])) best = i;
  }
  return best;
}

SeedResult run_seed(const ResolvedConfig& cfg, std::uint64_t seed, bool primary,
                    const std::vector<CameraModel>& rig, const OcclusionSynth& synth,
                    const RunOptions& options) {
  const auto& mods = cfg.experiment.modalities;
  const auto& occs = cfg.experiment.occlusions;
  const int jobs = std::max(options.jobs, 1);
  SeedResult result;
  result.seed = seed;

  std::vector<OcclusionMode> train_conditions{OcclusionMode::none};
  if (cfg.experiment.retrain_per_condition) train_conditions = occs;

  // models[t][m]: trained under train_conditions[t] for modality m.
  std::vector<std::vector<TrainedModel>> models(train_conditions.size(),
                                                std::vector<TrainedModel>(mods.size()));
  for (std::size_t t = 0; t < train_conditions.size(); ++t) {
    auto t0 = Clock::now();
    const auto store = build_train_store(cfg, seed, train_conditions[t], rig, synth, jobs);
    spdlog::info("seed {}: built {} training scenes ({}) in {:.1f} s", seed, store.size(),
                 to_string(train_conditions[t]), seconds_since(t0));
    t0 = Clock::now();
    parallel_for(mods.size(), jobs, [&](std::size_t mi) {
      const ModalitySet m = mods[mi];
      std::vector<TrainSample> samples;
      samples.reserve(store.size());
      for (const auto& s : store) samples.push_back({stack_for(m, s.camera, s.radar, s.lidar), s.gt});
      TrainConfig tc = cfg.train;
      tc.seed = Rng::mix(Rng::mix(cfg.train.seed, seed), m);
      auto& slot = models[t][mi];
      try {
        if (samples.empty()) throw InvalidArgument("no training scenes");
        const auto init = init_params(input_channels(cfg, m), cfg.model.hidden, Rng::mix(tc.seed, 7));
        auto trained = train(init, samples, tc);
        slot.params = std::move(trained.params);
        slot.loss_curve = std::move(trained.loss_curve);
      } catch (const Diverged& e) {
        slot.error = fmt::format("diverged in epoch {}", e.epoch());
      } catch (const InvalidArgument& e) {
        slot.error = e.what();
      }
      if (slot.params && options.out_dir) {
        const fs::path dir = *options.out_dir / "models" / fmt::format("seed_{}", seed);
        fs::create_directories(dir);
        const auto base = (dir / modality_name(m)).string();
        save_params(base + ".bin", *slot.params,
                    {{"modality", modality_name(m)},
                     {"seed", tc.seed},
                     {"train_condition", to_string(train_conditions[t])},
                     {"train", train_config_to_json(tc)}});
        write_loss_curve(base + "_loss.csv", slot.loss_curve);
      }
    });
    spdlog::info("seed {}: trained {} models in {:.1f} s", seed, mods.size(), seconds_since(t0));
  }
  for (std::size_t mi = 0; mi < mods.size(); ++mi) {
    result.loss_curves[mods[mi]] = models.front()[mi].loss_curve;
  }
  auto model_for = [&](std::size_t oi, std::size_t mi) -> const TrainedModel& {
    if (train_conditions.size() == 1) return models[0][mi];
    return models[oi][mi];
  };

  const auto t0 = Clock::now();
  const int n_val = cfg.data.val_scenes;
  std::vector<SceneCounts> counts(static_cast<std::size_t>(n_val));
  const OcclusionMode panel_mode = panel_condition(occs);
  const std::size_t fused = fused_index(mods);
  const auto camera_it = std::find(mods.begin(), mods.end(), static_cast<ModalitySet>(kCamera));
  const std::size_t camera_only =
      camera_it != mods.end() ? static_cast<std::size_t>(camera_it - mods.begin()) : 0;

  parallel_for(counts.size(), jobs, [&](std::size_t k) {
    const auto s = scene_seed(seed, Split::val, static_cast<int>(k));
    const auto frame = simulate_frame(make_scene(cfg.data, s), rig, cfg.sensors, cfg.grid);
    const auto clean = frame.colors();
    const bool blur_needed = std::any_of(occs.begin(), occs.end(), [](OcclusionMode o) {
      return o != OcclusionMode::none;
    });
    const auto blurred = blur_needed ? synth.blur_all(clean) : std::vector<Image>(clean.size());
    const BEVFeatureMap radar = needs(mods, kRadar)
                                    ? radar_bev(frame.radar, cfg.grid, cfg.sensors.velocity_pooling)
                                    : BEVFeatureMap{};
    const BEVFeatureMap lidar = needs(mods, kLidar) ? lidar_bev(frame.lidar, cfg.grid) : BEVFeatureMap{};
    const bool dump = options.out_dir && primary && static_cast<int>(k) < cfg.experiment.feature_dump_scenes;
    const bool panel = options.out_dir && primary && static_cast<int>(k) < cfg.experiment.panel_scenes;
    const fs::path feature_dir = options.out_dir ? *options.out_dir / "features" : fs::path{};
    if (dump) {
      fs::create_directories(feature_dir);
      if (radar.channels) save_bevf((feature_dir / fmt::format("val_{:04d}_radar.bevf", k)).string(), radar);
      if (lidar.channels) save_bevf((feature_dir / fmt::format("val_{:04d}_lidar.bevf", k)).string(), lidar);
    }

    auto& scene_counts = counts[k];
    scene_counts.assign(occs.size(), std::vector<IoUResult>(mods.size()));
    for (std::size_t oi = 0; oi < occs.size(); ++oi) {
      const auto masks = synth.masks(occs[oi], s, seed);
      const auto images = synth.apply(clean, blurred, masks);
      const auto camera = camera_bev(images, rig, frame.scene.ego_pose, cfg.grid, cfg.model.feature_stride);
      if (dump) {
        save_bevf((feature_dir / fmt::format("val_{:04d}_camera_{}.bevf", k, to_string(occs[oi]))).string(),
                  camera);
      }
      std::vector<BevMask> preds(mods.size());
      for (std::size_t mi = 0; mi < mods.size(); ++mi) {
        const auto& model = model_for(oi, mi);
        if (!model.params) continue;
        FeatureStack stack;
        if (mods[mi] & kCamera) stack.add(camera);
        if (mods[mi] & kRadar) stack.add(radar);
        if (mods[mi] & kLidar) stack.add(lidar);
        preds[mi] = predict(*model.params, stack);
        scene_counts[oi][mi] = iou(preds[mi], frame.gt);
      }
      if (panel && occs[oi] == panel_mode && !preds[camera_only].data.empty() &&
          !preds[fused].data.empty()) {
        PanelInputs in;
        in.views = images;
        for (const auto& cam : rig) in.names.push_back(cam.name);
        in.camera_bev = camera;
        in.occlusion = project_occlusion_to_bev(masks, rig, cfg.grid, frame.scene.ego_pose,
                                                cfg.occlusion.bev_threshold);
        in.camera_pred = preds[camera_only];
        in.fused_pred = preds[fused];
        in.gt = frame.gt;
        save_panels((*options.out_dir / "results" / "panels").string(), fmt::format("{:04d}", k),
                    render_panels(in));
      }
    }
  });
  spdlog::info("seed {}: evaluated {} validation scenes in {:.1f} s", seed, n_val, seconds_since(t0));

  for (std::size_t oi = 0; oi < occs.size(); ++oi) {
    for (std::size_t mi = 0; mi < mods.size(); ++mi) {
      MatrixCell cell;
      cell.modality = mods[mi];
      cell.occlusion = occs[oi];
      const auto& model = model_for(oi, mi);
      if (!model.params) {
        cell.failed = true;
        cell.error = model.error;
        result.cells.push_back(cell);
        continue;
      }
      IoUResult total;
      double scene_mean = 0.0;
      for (const auto& sc : counts) {
        const auto& r = sc[oi][mi];
        total += r;
        scene_mean += r.iou;
        if (r.empty_union) ++cell.empty_union_scenes;
      }
      cell.n_scenes = n_val;
      cell.intersection = total.intersection;
      cell.union_ = total.union_;
      if (cfg.experiment.per_scene_iou) {
        cell.iou_pct = n_val > 0 ? 100.0 * scene_mean / n_val : 100.0;
      } else {
        cell.iou_pct = total.percent();
      }
      result.cells.push_back(cell);
    }
  }
  return result;
}

std::map<ModalitySet, double> degradation_row(const std::vector<MatrixCell>& cells,
                                              const std::vector<ModalitySet>& mods) {
  std::map<ModalitySet, double> out;
  auto get = [&](ModalitySet m, OcclusionMode o) -> const MatrixCell* {
    for (const auto& c : cells) {
      if (c.modality == m && c.occlusion == o && !c.failed) return &c;
    }
    return nullptr;
  };
  for (auto m : mods) {
    const auto* clean = get(m, OcclusionMode::none);
    const auto* real = get(m, OcclusionMode::realistic);
    if (clean && real && clean->iou_pct > 0.0) {
      out[m] = degradation_percent(clean->iou_pct, real->iou_pct);
    }
  }
  return out;
}

}  // namespace

ExperimentMatrix run_matrix(const ResolvedConfig& cfg, const RunOptions& options) {
  if (cfg.experiment.modalities.empty()) throw InvalidArgument("run_matrix: empty modality list");
  if (cfg.experiment.occlusions.empty()) throw InvalidArgument("run_matrix: empty occlusion list");
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    throw InvalidArgument(e.what());
  }
  ExperimentMatrix m;
  m.config_hash = config_hash(cfg);
  m.modalities = cfg.experiment.modalities;
  m.occlusions = cfg.experiment.occlusions;

  const auto rig = nuscenes_like_rig();
  const OcclusionSynth synth(rig, cfg.occlusion);
  for (std::size_t i = 0; i < cfg.experiment.seeds.size(); ++i) {
    const auto t0 = Clock::now();
    auto sr = run_seed(cfg, cfg.experiment.seeds[i], i == 0, rig, synth, options);
    sr.degradation = degradation_row(sr.cells, m.modalities);
    spdlog::info("seed {} finished in {:.1f} s", sr.seed, seconds_since(t0));
    m.per_seed.push_back(std::move(sr));
  }

  for (auto o : m.occlusions) {
    for (auto mod : m.modalities) {
      MatrixCell cell;
      cell.modality = mod;
      cell.occlusion = o;
      int ok = 0;
      for (const auto& sr : m.per_seed) {
        for (const auto& c : sr.cells) {
          if (c.modality != mod || c.occlusion != o) continue;
          if (c.failed) {
            if (cell.error.empty()) cell.error = fmt::format("seed {}: {}", sr.seed, c.error);
            continue;
          }
          cell.iou_pct += c.iou_pct;
          cell.intersection += c.intersection;
          cell.union_ += c.union_;
          cell.n_scenes = c.n_scenes;
          cell.empty_union_scenes += c.empty_union_scenes;
          ++ok;
        }
      }
      if (ok == 0) {
        cell.failed = true;
      } else {
        cell.iou_pct /= ok;
      }
      m.cells.push_back(cell);
    }
  }
  m.degradation = degradation_row(m.cells, m.modalities);

  if (options.out_dir) write_matrix(*options.out_dir / "results", m);
  return m;
}

namespace {

nlohmann::json cells_json(const std::vector<MatrixCell>& cells, bool counts) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json j{{"modality", modality_name(c.modality)},
                     {"occlusion", to_string(c.occlusion)},
                     {"n_scenes", c.n_scenes}};
    if (c.failed) {
      j["failed"] = true;
      j["iou_pct"] = nullptr;
      j["error"] = c.error;
    } else {
      j["iou_pct"] = c.iou_pct;
    }
    if (counts) {
      j["intersection"] = c.intersection;
      j["union"] = c.union_;
    }
    if (c.empty_union_scenes > 0) j["empty_union_scenes"] = c.empty_union_scenes;
    out.push_back(std::move(j));
  }
  return out;
}

nlohmann::json degradation_json(const std::map<ModalitySet, double>& d,
                                const std::vector<ModalitySet>& order) {
  nlohmann::json out = nlohmann::json::object();
  for (auto m : order) {
    const auto it = d.find(m);
    if (it == d.end()) continue;
    out[modality_name(m)] = {{"percent", it->second}, {"reported", report_one_decimal(it->second)}};
  }
  return out;
}

}  // namespace

nlohmann::json matrix_to_json(const ExperimentMatrix& m) {
  nlohmann::json mods = nlohmann::json::array();
  for (auto x : m.modalities) mods.push_back(modality_name(x));
  nlohmann::json occs = nlohmann::json::array();
  for (auto x : m.occlusions) occs.push_back(to_string(x));
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : m.per_seed) {
    nlohmann::json final_loss = nlohmann::json::object();
    for (auto x : m.modalities) {
      const auto it = s.loss_curves.find(x);
      if (it != s.loss_curves.end() && !it->second.empty()) final_loss[modality_name(x)] = it->second.back();
    }
    seeds.push_back({{"seed", s.seed},
                     {"cells", cells_json(s.cells, true)},
                     {"degradation", degradation_json(s.degradation, m.modalities)},
                     {"final_loss", final_loss}});
  }
  return {{"schema_version", kMatrixSchemaVersion},
          {"config_hash", m.config_hash},
          {"modalities", mods},
          {"occlusions", occs},
          {"cells", cells_json(m.cells, false)},
          {"degradation", degradation_json(m.degradation, m.modalities)},
          {"per_seed", seeds}};
}

std::string matrix_to_csv(const ExperimentMatrix& m) {
  std::string out = "condition";
  for (auto mod : m.modalities) out += "," + modality_label(mod);
  out += "\n";
  for (auto o : m.occlusions) {
    out += to_string(o);
    for (auto mod : m.modalities) {
      const auto* c = m.find(mod, o);
      out += (c == nullptr || c->failed) ? ",failed" : fmt::format(",{:.1f}", c->iou_pct);
    }
    out += "\n";
  }
  if (!m.degradation.empty()) {
    out += "degradation_pct";
    for (auto mod : m.modalities) {
      const auto it = m.degradation.find(mod);
      out += it == m.degradation.end() ? "," : fmt::format(",{:.1f}", report_one_decimal(it->second));
    }
    out += "\n";
  }
  return out;
}

void write_matrix(const fs::path& results_dir, const ExperimentMatrix& m) {
  fs::create_directories(results_dir);
  {
    std::ofstream out(results_dir / "matrix.json");
    if (!out) throw IoError("cannot write " + (results_dir / "matrix.json").string());
    out << matrix_to_json(m).dump(2) << '\n';
  }
  std::ofstream csv(results_dir / "matrix.csv");
  if (!csv) throw IoError("cannot write " + (results_dir / "matrix.csv").string());
  csv << matrix_to_csv(m);
}

}  // namespace bevocc
