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

#include "bevocc/ops.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "bevocc/error.hpp"
#include "bevocc/experiment.hpp"
#include "bevocc/manifest.hpp"
#include "bevocc/panels.hpp"
#include "bevocc/parallel.hpp"
#include "bevocc/pipeline.hpp"
#include "bevocc/rng.hpp"
#include "bevocc/seg_head.hpp"
#include "bevocc/train.hpp"

namespace bevocc {

namespace fs = std::filesystem;

fs::path output_root(const CommonOptions& opts) {
  if (opts.output_root) return *opts.output_root;
  if (const char* env = std::getenv(kOutputRootEnv); env != nullptr && *env != '\0') return env;
  return "runs";
}

ResolvedConfig resolve_config(const CommonOptions& opts, const ResolvedConfig& base) {
  ResolvedConfig cfg = opts.config_file ? load_config(*opts.config_file, base) : base;
  return merge_config(cfg, opts.overrides);
}

fs::path run_directory(const CommonOptions& opts, const ResolvedConfig& cfg, const std::string& prefix) {
  const std::string id = opts.run_id.empty() ? prefix + "-" + config_hash(cfg).substr(0, 12) : opts.run_id;
  if (id.find('/') != std::string::npos || id == "." || id == "..") {
    throw UsageError("invalid run id '" + id + "'");
  }
  return output_root(opts) / id;
}

namespace {

// Existing run directory named by --run-id (required for follow-up commands).
fs::path existing_run(const CommonOptions& opts) {
  if (opts.run_id.empty()) throw UsageError("--run-id is required");
  const fs::path dir = output_root(opts) / opts.run_id;
  if (!fs::is_directory(dir / "scenes") || !fs::is_regular_file(dir / "config.json")) {
    throw IoError(fmt::format("run '{}' has no generated scenes: expected {} and {} (run 'gen' first)",
                              opts.run_id, (dir / "config.json").string(), (dir / "scenes").string()));
  }
  return dir;
}

// Refuses to touch an existing output subdirectory unless forced.
void claim(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!force) throw IoError(dir.string() + " already exists (use --force to overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

void refresh_manifest(const fs::path& run_dir, const ResolvedConfig& cfg) {
  save_manifest(run_dir / "manifest.json",
                build_manifest(run_dir, run_dir.filename().string(), config_hash(cfg), cfg.experiment.seeds));
}

std::string scene_dir_name(int i) { return fmt::format("scene_{:04d}", i); }

std::vector<fs::path> scene_dirs(const fs::path& run_dir) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(run_dir / "scenes")) {
    if (e.is_directory() && e.path().filename().string().rfind("scene_", 0) == 0) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

int scene_index(const fs::path& dir) { return std::stoi(dir.filename().string().substr(6)); }

BinaryImage bev_image(const BevMask& m) {
  BinaryImage img(m.ny, m.nx);
  for (int ix = 0; ix < m.nx; ++ix) {
    for (int iy = 0; iy < m.ny; ++iy) img.at(m.ny - 1 - iy, m.nx - 1 - ix) = m.at(ix, iy);
  }
  return img;
}

std::vector<Image> read_views(const fs::path& dir, const std::vector<CameraModel>& rig) {
  std::vector<Image> views;
  for (const auto& cam : rig) {
    const fs::path p = dir / (cam.name + ".ppm");
    if (!fs::exists(p)) throw IoError("missing camera image " + p.string());
    views.push_back(read_ppm(p.string()));
  }
  return views;
}

std::uint64_t run_seed(const ResolvedConfig& cfg) { return cfg.experiment.seeds.front(); }

}  // namespace

int cmd_gen(const GenOptions& opts) {
  const ResolvedConfig cfg = resolve_config(opts);
  const fs::path run_dir = run_directory(opts, cfg, "gen");
  claim(run_dir / "scenes", opts.force);
  save_config((run_dir / "config.json").string(), cfg);
  const auto rig = nuscenes_like_rig();
  save_rig((run_dir / "rig.json").string(), rig);

  const int n = cfg.data.train_scenes;
  const std::uint64_t seed = run_seed(cfg);
  parallel_for(static_cast<std::size_t>(n), opts.jobs, [&](std::size_t i) {
    const fs::path dir = run_dir / "scenes" / scene_dir_name(static_cast<int>(i));
    fs::create_directories(dir);
    const auto frame = simulate_frame(make_scene(cfg.data, scene_seed(seed, Split::train, static_cast<int>(i))),
                                      rig, cfg.sensors, cfg.grid);
    save_scene((dir / "scene.json").string(), frame.scene);
    for (std::size_t c = 0; c < rig.size(); ++c) {
      write_ppm((dir / (rig[c].name + ".ppm")).string(), frame.views[c].color);
      write_pgm((dir / (rig[c].name + "_ids.pgm")).string(), frame.views[c].ids);
    }
    write_cloud_csv((dir / "lidar.csv").string(), frame.lidar);
    write_cloud_csv((dir / "radar.csv").string(), frame.radar);
    write_pgm((dir / "gt_bev.pgm").string(), bev_image(frame.gt));
  });
  refresh_manifest(run_dir, cfg);
  spdlog::info("generated {} scenes in {}", n, run_dir.string());
  return 0;
}

int cmd_occlude(const OccludeOptions& opts) {
  const fs::path run_dir = existing_run(opts);
  const ResolvedConfig base = load_config((run_dir / "config.json").string());
  const ResolvedConfig cfg = resolve_config(opts, base);
  const fs::path out_dir = run_dir / "occluded";
  claim(out_dir, opts.force);
  auto occ_json = config_to_json(cfg);
  occ_json["occlusion"]["mode"] = to_string(opts.mode);
  {
    std::ofstream out(out_dir / "config.json");
    out << occ_json.dump(2) << '\n';
  }
  const auto rig = load_rig((run_dir / "rig.json").string());
  const OcclusionSynth synth(rig, cfg.occlusion);
  const auto dirs = scene_dirs(run_dir);
  const std::uint64_t seed = run_seed(cfg);
  parallel_for(dirs.size(), opts.jobs, [&](std::size_t i) {
    const int idx = scene_index(dirs[i]);
    const fs::path dst = out_dir / dirs[i].filename();
    fs::create_directories(dst);
    const auto views = read_views(dirs[i], rig);
    const auto masks = synth.masks(opts.mode, scene_seed(seed, Split::train, idx), seed);
    const bool any = std::any_of(masks.begin(), masks.end(), [](const OcclusionMask& m) { return m.mask.count() > 0; });
    const auto blurred = any ? synth.blur_all(views) : std::vector<Image>(views.size());
    const auto occluded = synth.apply(views, blurred, masks);
    for (std::size_t c = 0; c < rig.size(); ++c) {
      const auto target = dst / (rig[c].name + ".ppm");
      if (masks[c].mask.count() == 0) {
        fs::copy_file(dirs[i] / (rig[c].name + ".ppm"), target, fs::copy_options::overwrite_existing);
      } else {
        write_ppm(target.string(), occluded[c]);
      }
      save_mask_file((dst / (rig[c].name + "_mask.pgm")).string(), masks[c]);
    }
    const Scene scene = load_scene((dirs[i] / "scene.json").string());
    write_pgm((dst / "bev_occlusion.pgm").string(),
              bev_image(project_occlusion_to_bev(masks, rig, cfg.grid, scene.ego_pose, cfg.occlusion.bev_threshold)));
  });
  refresh_manifest(run_dir, base);
  spdlog::info("occluded {} scenes ({}) into {}", dirs.size(), to_string(opts.mode), out_dir.string());
  return 0;
}

namespace {

struct DiskScene {
  BEVFeatureMap camera, radar, lidar;
  BevMask gt;
  Scene scene;
};

DiskScene load_disk_scene(const fs::path& scene_dir, const fs::path& image_dir, const ResolvedConfig& cfg,
                          const std::vector<CameraModel>& rig, ModalitySet modality) {
  DiskScene d;
  d.scene = load_scene((scene_dir / "scene.json").string());
  const auto views = read_views(image_dir, rig);
  d.camera = camera_bev(views, rig, d.scene.ego_pose, cfg.grid, cfg.model.feature_stride);
  if (modality & kRadar) {
    d.radar = radar_bev(read_cloud_csv((scene_dir / "radar.csv").string()), cfg.grid, cfg.sensors.velocity_pooling);
  }
  if (modality & kLidar) d.lidar = lidar_bev(read_cloud_csv((scene_dir / "lidar.csv").string()), cfg.grid);
  d.gt = ground_truth_bev(d.scene, cfg.grid);
  return d;
}

FeatureStack disk_stack(const DiskScene& d, ModalitySet m) {
  FeatureStack s;
  if (m & kCamera) s.add(d.camera);
  if (m & kRadar) s.add(d.radar);
  if (m & kLidar) s.add(d.lidar);
  return s;
}

}  // namespace

int cmd_train(const TrainOptions& opts) {
  const fs::path run_dir = existing_run(opts);
  const ResolvedConfig base = load_config((run_dir / "config.json").string());
  const ResolvedConfig cfg = resolve_config(opts, base);
  if (!(opts.modality & kCamera)) throw UsageError("--modality must include the camera (c, c+r, c+l, c+r+l)");
  if (opts.use_occluded && !fs::is_directory(run_dir / "occluded")) {
    throw IoError("expected occluded views in " + (run_dir / "occluded").string() + " (run 'occlude' first)");
  }
  const auto rig = load_rig((run_dir / "rig.json").string());
  const auto dirs = scene_dirs(run_dir);
  if (dirs.empty()) throw IoError("run '" + opts.run_id + "' has no scenes to train on");
  const fs::path out_dir = run_dir / "models" / modality_name(opts.modality);
  claim(out_dir, opts.force);

  std::vector<DiskScene> scenes(dirs.size());
  parallel_for(dirs.size(), opts.jobs, [&](std::size_t i) {
    const fs::path images = opts.use_occluded ? run_dir / "occluded" / dirs[i].filename() : dirs[i];
    scenes[i] = load_disk_scene(dirs[i], images, cfg, rig, opts.modality);
  });
  std::vector<TrainSample> samples;
  for (const auto& s : scenes) samples.push_back({disk_stack(s, opts.modality), s.gt});

  if (cfg.train.learning_rate == 0.0) spdlog::warn("learning rate is 0: parameters will stay at their initial values");
  const int c_in = samples.front().features.channels();
  spdlog::info("training {} head on {} scenes, {} input channels", modality_name(opts.modality), samples.size(), c_in);
  const auto init = init_params(c_in, cfg.model.hidden, Rng::mix(cfg.train.seed, 7));
  const auto result = train(init, samples, cfg.train);

  save_params((out_dir / "params.bin").string(), result.params,
              {{"modality", modality_name(opts.modality)},
               {"seed", cfg.train.seed},
               {"pos_weight", result.pos_weight},
               {"train", train_config_to_json(cfg.train)},
               {"occluded_views", opts.use_occluded}});
  write_loss_curve((out_dir / "loss.csv").string(), result.loss_curve);
  save_config((out_dir / "config.json").string(), cfg);
  refresh_manifest(run_dir, base);
  spdlog::info("final loss {:.6f}; parameters in {}", result.loss_curve.back(), out_dir.string());
  return 0;
}

int cmd_matrix(const MatrixOptions& opts) {
  const ResolvedConfig cfg = resolve_config(opts);
  const fs::path run_dir = run_directory(opts, cfg, "matrix");
  claim(run_dir / "results", opts.force);
  for (const char* sub : {"features", "models"}) {
    if (fs::exists(run_dir / sub)) fs::remove_all(run_dir / sub);
  }
  save_config((run_dir / "config.json").string(), cfg);
  RunOptions ro;
  ro.jobs = opts.jobs;
  ro.out_dir = run_dir;
  const auto m = run_matrix(cfg, ro);
  refresh_manifest(run_dir, cfg);
  fmt::print("{}", matrix_to_csv(m));
  if (m.any_failed()) {
    spdlog::error("some matrix cells failed; see {}", (run_dir / "results" / "matrix.json").string());
    return 1;
  }
  return 0;
}

int cmd_panels(const PanelsOptions& opts) {
  const fs::path run_dir = existing_run(opts);
  const ResolvedConfig base = load_config((run_dir / "config.json").string());
  const ResolvedConfig cfg = resolve_config(opts, base);
  if (opts.scenes < 0) throw UsageError("--scenes must be >= 0");
  if (opts.scale < 1) throw UsageError("--scale must be >= 1");
  auto load_model = [&](ModalitySet m) {
    const fs::path p = run_dir / "models" / modality_name(m) / "params.bin";
    if (!fs::exists(p)) {
      throw IoError(fmt::format("missing model {} (run 'train --modality {}' first)", p.string(), modality_name(m)));
    }
    return load_params(p.string());
  };
  const auto camera_model = load_model(opts.camera_modality);
  const auto fused_model = load_model(opts.fused_modality);
  const auto rig = load_rig((run_dir / "rig.json").string());
  const bool occluded = fs::is_directory(run_dir / "occluded");
  const fs::path out_dir = run_dir / "results" / "panels";
  claim(out_dir, opts.force);

  auto dirs = scene_dirs(run_dir);
  if (static_cast<int>(dirs.size()) > opts.scenes) dirs.resize(static_cast<std::size_t>(opts.scenes));
  const ModalitySet needed = opts.camera_modality | opts.fused_modality;
  parallel_for(dirs.size(), opts.jobs, [&](std::size_t i) {
    const fs::path images = occluded ? run_dir / "occluded" / dirs[i].filename() : dirs[i];
    const auto d = load_disk_scene(dirs[i], images, cfg, rig, needed);
    PanelInputs in;
    in.views = read_views(images, rig);
    for (const auto& cam : rig) in.names.push_back(cam.name);
    in.camera_bev = d.camera;
    std::vector<OcclusionMask> masks;
    for (std::size_t c = 0; c < rig.size(); ++c) {
      const auto& k = rig[c].intrinsics;
      const fs::path p = images / (rig[c].name + "_mask.pgm");
      masks.push_back(occluded && fs::exists(p) ? load_mask_file(p.string(), k.width, k.height)
                                                 : OcclusionMask::empty(k.width, k.height));
    }
    in.occlusion = project_occlusion_to_bev(masks, rig, cfg.grid, d.scene.ego_pose, cfg.occlusion.bev_threshold);
    in.camera_pred = predict(camera_model, disk_stack(d, opts.camera_modality));
    in.fused_pred = predict(fused_model, disk_stack(d, opts.fused_modality));
    in.gt = d.gt;
    const auto set = render_panels(in, opts.scale);
    save_panels(out_dir.string(), fmt::format("{:04d}", scene_index(dirs[i])), set);
    spdlog::info("scene {}: {} cells recovered by fusion", scene_index(dirs[i]), set.recovered);
  });
  refresh_manifest(run_dir, base);
  return 0;
}

}  // namespace bevocc
