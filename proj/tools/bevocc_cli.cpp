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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "bevocc/error.hpp"
#include "bevocc/ops.hpp"

using namespace bevocc;
using nlohmann::json;

namespace {

struct Common {
  std::string run_id;
  std::string output_root;
  std::string config;
  bool force = false;
  int jobs = 1;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--run-id", c.run_id, "Run directory name under the output root");
  cmd->add_option("--output-root", c.output_root,
                  fmt::format("Output root (default ${} or ./runs)", kOutputRootEnv));
  cmd->add_option("--config", c.config, "JSON config file layered over the defaults")->check(CLI::ExistingFile);
  cmd->add_flag("--force", c.force, "Overwrite this command's existing outputs");
  cmd->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", c.verbose, "Debug logging");
}

// Flag values destined for the config. Only flags that were given override.
struct Overrides {
  json patch = json::object();
  std::vector<std::function<void()>> setters;

  template <typename T>
  CLI::Option* add(CLI::App* cmd, const std::string& flag, const std::string& path, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = cmd->add_option(flag, *value, help);
    setters.push_back([this, opt, value, path] {
      if (opt->count() == 0) return;
      json* node = &patch;
      std::size_t start = 0;
      for (std::size_t dot; (dot = path.find('.', start)) != std::string::npos; start = dot + 1) {
        node = &(*node)[path.substr(start, dot - start)];
      }
      (*node)[path.substr(start)] = *value;
    });
    return opt;
  }

  CLI::Option* flag(CLI::App* cmd, const std::string& flag, const std::string& path, const std::string& help) {
    auto value = std::make_shared<bool>(false);
    CLI::Option* opt = cmd->add_flag(flag, *value, help);
    setters.push_back([this, opt, value, path] {
      if (opt->count() == 0) return;
      const auto dot = path.find('.');
      patch[path.substr(0, dot)][path.substr(dot + 1)] = true;
    });
    return opt;
  }

  json resolve() {
    for (auto& s : setters) s();
    return patch;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = std::min(s.find(',', start), s.size());
    if (comma > start) out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

template <typename T>
void fill(T& opts, const Common& c, Overrides& o) {
  opts.run_id = c.run_id;
  if (!c.output_root.empty()) opts.output_root = c.output_root;
  if (!c.config.empty()) opts.config_file = c.config;
  opts.force = c.force;
  opts.jobs = c.jobs;
  opts.overrides = o.resolve();
  if (c.verbose) spdlog::set_level(spdlog::level::debug);
}

void add_occlusion_flags(CLI::App* cmd, Overrides& o) {
  o.add<int>(cmd, "--kernel-size", "occlusion.kernel_size", "Gaussian blur kernel size (odd)");
  o.add<double>(cmd, "--sigma", "occlusion.sigma", "Gaussian sigma in pixels (default (k-1)/6)");
  o.add<std::string>(cmd, "--opacity", "occlusion.opacity", "blur or opaque");
  o.add<double>(cmd, "--coverage", "occlusion.coverage", "Soiling coverage target in (0, 1)");
  o.add<int>(cmd, "--n-blobs", "occlusion.n_blobs", "Soiling blobs per camera");
  o.add<double>(cmd, "--side-fraction", "occlusion.side_fraction", "Random box side as a fraction of image height");
  o.add<std::string>(cmd, "--overlap-pairing", "occlusion.overlap_pairing", "pair or all");
  o.add<std::string>(cmd, "--mask-dir", "occlusion.mask_dir", "Directory of <camera>.pgm soiling masks")
      ->check(CLI::ExistingDirectory);
  o.flag(cmd, "--fixed-mask", "occlusion.fixed_mask", "One mask per camera for every scene");
}

void add_train_flags(CLI::App* cmd, Overrides& o) {
  o.add<double>(cmd, "--lr", "train.learning_rate", "Learning rate");
  o.add<int>(cmd, "--epochs", "train.epochs", "Training epochs");
  o.add<int>(cmd, "--batch-size", "train.batch_size", "Scenes per optimizer step");
  o.add<std::uint64_t>(cmd, "--train-seed", "train.seed", "Initialization and shuffle seed");
  o.add<double>(cmd, "--weight-decay", "train.weight_decay", "Decoupled weight decay");
  o.add<double>(cmd, "--pos-weight", "train.pos_weight", "Positive-cell weight (default: class ratio, capped)");
  o.add<double>(cmd, "--pos-weight-cap", "train.pos_weight_cap", "Cap on the class-ratio positive weight");
  o.add<double>(cmd, "--negative-sample-rate", "train.negative_sample_rate",
                "Fraction of negative cells per step, 1 = all");
  o.add<int>(cmd, "--hidden", "model.hidden", "Hidden channels of the head");
  o.add<int>(cmd, "--feature-stride", "model.feature_stride", "Feature image stride in pixels");
}

int run(int argc, char** argv) {
  CLI::App app{"Camera occlusion and sensor fusion experiments on synthetic BEV scenes"};
  app.require_subcommand(1);

  Common gen_c;
  Overrides gen_o;
  auto* gen = app.add_subcommand("gen", "Generate scenes, camera images and point clouds");
  add_common(gen, gen_c);
  gen_o.add<int>(gen, "--scenes", "data.train_scenes", "Number of scenes")->check(CLI::NonNegativeNumber);
  auto gen_seed = std::make_shared<std::uint64_t>(0);
  auto* gen_seed_opt = gen->add_option("--seed", *gen_seed, "Scene seed");
  gen_o.add<int>(gen, "--min-vehicles", "data.min_vehicles", "Fewest vehicles per scene");
  gen_o.add<int>(gen, "--max-vehicles", "data.max_vehicles", "Most vehicles per scene");

  Common occ_c;
  Overrides occ_o;
  std::string occ_mode = "realistic";
  auto* occ = app.add_subcommand("occlude", "Apply synthetic lens occlusion to generated views");
  add_common(occ, occ_c);
  auto* occ_mode_opt = occ->add_option("--occlusion", occ_mode, "none, random, overlap or realistic");
  add_occlusion_flags(occ, occ_o);

  Common tr_c;
  Overrides tr_o;
  std::string tr_mod = "c";
  bool tr_occluded = false;
  auto* tr = app.add_subcommand("train", "Train a segmentation head on a generated run");
  add_common(tr, tr_c);
  tr->add_option("--modality", tr_mod, "c, c+r, c+l or c+r+l");
  tr->add_flag("--occluded", tr_occluded, "Train on the occluded views");
  add_train_flags(tr, tr_o);
  auto tr_seed = std::make_shared<std::uint64_t>(0);
  auto* tr_seed_opt = tr->add_option("--seed", *tr_seed, "Alias of --train-seed");

  Common mx_c;
  Overrides mx_o;
  std::string mx_mods, mx_occs, mx_seeds;
  auto* mx = app.add_subcommand("matrix", "Run the modality x occlusion experiment matrix");
  add_common(mx, mx_c);
  mx->add_option("--modalities", mx_mods, "Comma list, e.g. c,c+r,c+l,c+r+l");
  mx->add_option("--occlusions", mx_occs, "Comma list, e.g. none,random,overlap,realistic");
  mx->add_option("--seeds", mx_seeds, "Comma list of run seeds");
  mx_o.add<int>(mx, "--train-scenes", "data.train_scenes", "Training scenes per seed");
  mx_o.add<int>(mx, "--val-scenes", "data.val_scenes", "Validation scenes per seed");
  mx_o.flag(mx, "--retrain-per-condition", "experiment.retrain_per_condition",
            "Train one head per occlusion condition instead of on clean data");
  mx_o.flag(mx, "--per-scene-iou", "experiment.per_scene_iou", "Average per-scene IoU instead of pooling counts");
  mx_o.add<int>(mx, "--panel-scenes", "experiment.panel_scenes", "Validation scenes rendered as panels");
  add_occlusion_flags(mx, mx_o);
  add_train_flags(mx, mx_o);

  Common pn_c;
  Overrides pn_o;
  PanelsOptions pn_opts;
  std::string pn_cam = "c", pn_fused = "c+r+l";
  auto* pn = app.add_subcommand("panels", "Render qualitative panels for a trained run");
  add_common(pn, pn_c);
  pn->add_option("--camera-modality", pn_cam, "Modality of the camera-only model");
  pn->add_option("--fused-modality", pn_fused, "Modality of the fused model");
  pn->add_option("--scenes", pn_opts.scenes, "Number of scenes to render");
  pn->add_option("--scale", pn_opts.scale, "Pixels per BEV cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      GenOptions o;
      if (gen_seed_opt->count()) gen_o.patch["experiment"]["seeds"] = json::array({*gen_seed});
      fill(o, gen_c, gen_o);
      return cmd_gen(o);
    }
    if (occ->parsed()) {
      OccludeOptions o;
      fill(o, occ_c, occ_o);
      if (occ_mode_opt->count() == 0 && o.overrides.contains("occlusion") &&
          o.overrides["occlusion"].contains("mask_dir")) {
        occ_mode = "realistic";
      }
      o.mode = parse_occlusion_mode(occ_mode);
      return cmd_occlude(o);
    }
    if (tr->parsed()) {
      TrainOptions o;
      if (tr_seed_opt->count()) tr_o.patch["train"]["seed"] = *tr_seed;
      fill(o, tr_c, tr_o);
      o.modality = parse_modality(tr_mod);
      o.use_occluded = tr_occluded;
      return cmd_train(o);
    }
    if (mx->parsed()) {
      MatrixOptions o;
      if (!mx_mods.empty()) mx_o.patch["experiment"]["modalities"] = split_list(mx_mods);
      if (!mx_occs.empty()) mx_o.patch["experiment"]["occlusions"] = split_list(mx_occs);
      if (!mx_seeds.empty()) {
        json seeds = json::array();
        for (const auto& s : split_list(mx_seeds)) {
          try {
            std::size_t used = 0;
            const auto v = std::stoull(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            seeds.push_back(v);
          } catch (const std::exception&) {
            throw UsageError("--seeds: '" + s + "' is not a non-negative integer");
          }
        }
        mx_o.patch["experiment"]["seeds"] = seeds;
      }
      fill(o, mx_c, mx_o);
      return cmd_matrix(o);
    }
    if (pn->parsed()) {
      fill(pn_opts, pn_c, pn_o);
      pn_opts.camera_modality = parse_modality(pn_cam);
      pn_opts.fused_modality = parse_modality(pn_fused);
      return cmd_panels(pn_opts);
    }
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const ValidationError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const Diverged& e) {
    spdlog::error("{}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
