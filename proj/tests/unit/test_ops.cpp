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

#include <cstdlib>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "bevocc/error.hpp"
#include "bevocc/manifest.hpp"
#include "bevocc/occlusion.hpp"
#include "bevocc/ops.hpp"
#include "bevocc/rng.hpp"
#include "bevocc/seg_head.hpp"
#include "test_util.hpp"

using namespace bevocc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const json kSmall = {
    {"grid", {{"nx", 40}, {"ny", 40}, {"x_extent", 20.0}, {"y_extent", 20.0}}},
    {"data", {{"world_extent", 20.0}, {"min_vehicles", 3}, {"max_vehicles", 6}, {"val_scenes", 2}}},
    {"train", {{"epochs", 2}}},
    {"occlusion", {{"kernel_size", 31}}},
};

template <typename T>
T options(const fs::path& root, const std::string& run_id, json overrides = kSmall) {
  T o;
  o.output_root = root;
  o.run_id = run_id;
  o.overrides = std::move(overrides);
  return o;
}

GenOptions gen_options(const fs::path& root, const std::string& run_id, int scenes, std::uint64_t seed = 7) {
  json o = kSmall;
  o["data"]["train_scenes"] = scenes;
  o["experiment"]["seeds"] = {seed};
  return options<GenOptions>(root, run_id, o);
}

std::map<std::string, std::string> hashes(const fs::path& run_dir) {
  std::map<std::string, std::string> out;
  for (const auto& f : build_manifest(run_dir, "x", "", {}).files) out[f.path] = f.sha256;
  return out;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(BEVOCC_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Ops : public ::testing::Test {
 protected:
  testutil::TempDir dir{"ops"};
  fs::path root() const { return dir.path(); }
};

}  // namespace

TEST_F(Ops, GenWritesTheSceneInventory) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "g", 2)), 0);
  const fs::path run = root() / "g";
  std::set<std::string> scenes;
  for (const auto& e : fs::directory_iterator(run / "scenes")) scenes.insert(e.path().filename().string());
  EXPECT_EQ(scenes, (std::set<std::string>{"scene_0000", "scene_0001"}));
  for (const auto& s : scenes) {
    int ppm = 0;
    for (const auto& e : fs::directory_iterator(run / "scenes" / s)) ppm += e.path().extension() == ".ppm";
    EXPECT_EQ(ppm, 6);
    EXPECT_TRUE(fs::exists(run / "scenes" / s / "lidar.csv"));
    EXPECT_TRUE(fs::exists(run / "scenes" / s / "radar.csv"));
    EXPECT_TRUE(fs::exists(run / "scenes" / s / "scene.json"));
  }
  EXPECT_TRUE(fs::exists(run / "config.json"));
  const auto m = load_manifest(run / "manifest.json");
  EXPECT_TRUE(verify_manifest(run, m).empty());
  EXPECT_EQ(m.seeds, (std::vector<std::uint64_t>{7}));
}

TEST_F(Ops, GenIsReproducible) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "a", 2)), 0);
  ASSERT_EQ(cmd_gen(gen_options(root(), "b", 2)), 0);
  auto ha = hashes(root() / "a"), hb = hashes(root() / "b");
  ha.erase("manifest.json");
  hb.erase("manifest.json");
  EXPECT_EQ(ha, hb);
  const auto ma = manifest_to_json(load_manifest(root() / "a" / "manifest.json"));
  const auto mb = manifest_to_json(load_manifest(root() / "b" / "manifest.json"));
  EXPECT_EQ(ma.at("files"), mb.at("files"));
  EXPECT_EQ(ma.at("config_hash"), mb.at("config_hash"));
  ASSERT_EQ(cmd_gen(gen_options(root(), "c", 2, 8)), 0);
  EXPECT_NE(hashes(root() / "c").at("scenes/scene_0000/front.ppm"), ha.at("scenes/scene_0000/front.ppm"));
}

TEST_F(Ops, GenWithNoScenes) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "empty", 0)), 0);
  EXPECT_TRUE(fs::is_empty(root() / "empty" / "scenes"));
  const auto m = load_manifest(root() / "empty" / "manifest.json");
  EXPECT_TRUE(verify_manifest(root() / "empty", m).empty());
}

TEST_F(Ops, NoOverwriteWithoutForce) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "g", 1)), 0);
  const auto before = hashes(root() / "g");
  EXPECT_THROW(cmd_gen(gen_options(root(), "g", 1, 9)), IoError);
  EXPECT_EQ(hashes(root() / "g"), before);
  auto forced = gen_options(root(), "g", 1, 9);
  forced.force = true;
  EXPECT_EQ(cmd_gen(forced), 0);
  EXPECT_NE(hashes(root() / "g"), before);
}

TEST_F(Ops, OccludeNoneCopiesOriginals) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "g", 1)), 0);
  auto o = options<OccludeOptions>(root(), "g", json::object());
  o.mode = OcclusionMode::none;
  ASSERT_EQ(cmd_occlude(o), 0);
  for (const char* cam : {"front", "back_left"}) {
    EXPECT_EQ(sha256_file((root() / "g" / "occluded" / "scene_0000" / (std::string(cam) + ".ppm")).string()),
              sha256_file((root() / "g" / "scenes" / "scene_0000" / (std::string(cam) + ".ppm")).string()));
  }
}

TEST_F(Ops, OccludeRealisticHitsCoverage) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "g", 2)), 0);
  const auto original = hashes(root() / "g");
  auto o = options<OccludeOptions>(root(), "g", {{"occlusion", {{"coverage", 0.3}}}});
  o.mode = OcclusionMode::realistic;
  ASSERT_EQ(cmd_occlude(o), 0);
  for (const auto& s : {"scene_0000", "scene_0001"}) {
    for (const char* cam : {"front", "front_left", "front_right", "back", "back_left", "back_right"}) {
      const auto m = load_mask_file((root() / "g" / "occluded" / s / (std::string(cam) + "_mask.pgm")).string());
      EXPECT_GE(m.mask.fraction(), 0.25) << s << " " << cam;
      EXPECT_LE(m.mask.fraction(), 0.35) << s << " " << cam;
    }
    EXPECT_TRUE(fs::exists(root() / "g" / "occluded" / s / "bev_occlusion.pgm"));
  }
  // Originals are untouched.
  auto after = hashes(root() / "g");
  for (const auto& [path, h] : original) {
    if (path != "manifest.json") {
      EXPECT_EQ(after.at(path), h) << path;
    }
  }
}

TEST_F(Ops, OccludeUsesExternalMasksVerbatim) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "g", 1)), 0);
  const fs::path masks = root() / "masks";
  fs::create_directories(masks);
  std::map<std::string, OcclusionMask> want;
  std::uint64_t seed = 1;
  for (const char* cam : {"front", "front_left", "front_right", "back", "back_left", "back_right"}) {
    auto m = random_box_mask(800, 448, seed++, 0.3);
    save_mask_file((masks / (std::string(cam) + ".pgm")).string(), m);
    want[cam] = m;
  }
  auto o = options<OccludeOptions>(root(), "g", {{"occlusion", {{"mask_dir", masks.string()}}}});
  o.mode = OcclusionMode::realistic;
  ASSERT_EQ(cmd_occlude(o), 0);
  for (const auto& [cam, m] : want) {
    const auto got = load_mask_file((root() / "g" / "occluded" / "scene_0000" / (cam + "_mask.pgm")).string());
    EXPECT_EQ(got.mask.data, m.mask.data) << cam;
  }
}

TEST_F(Ops, MissingRunNamesTheExpectedPath) {
  auto o = options<OccludeOptions>(root(), "nothing", json::object());
  try {
    cmd_occlude(o);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find((root() / "nothing" / "scenes").string()), std::string::npos);
  }
  EXPECT_THROW(cmd_train(options<TrainOptions>(root(), "", json::object())), UsageError);
}

TEST_F(Ops, TrainChannelCountAndDeterminism) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "g", 2)), 0);
  auto o = options<TrainOptions>(root(), "g", json::object());
  o.modality = kCamera | kRadar | kLidar;
  ASSERT_EQ(cmd_train(o), 0);
  const fs::path model = root() / "g" / "models" / "c+r+l" / "params.bin";
  const auto params = load_params(model.string());
  EXPECT_EQ(params.c_in, 8 * 8 + 2 * 8 + 8);
  EXPECT_TRUE(fs::exists(root() / "g" / "models" / "c+r+l" / "loss.csv"));
  const auto first = sha256_file(model.string());

  EXPECT_THROW(cmd_train(o), IoError);
  o.force = true;
  ASSERT_EQ(cmd_train(o), 0);
  EXPECT_EQ(sha256_file(model.string()), first);
}

TEST_F(Ops, TrainWithZeroLearningRateKeepsInitialParams) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "g", 1)), 0);
  auto o = options<TrainOptions>(root(), "g", {{"train", {{"learning_rate", 0.0}, {"epochs", 1}, {"seed", 4}}}});
  o.modality = kCamera;
  ASSERT_EQ(cmd_train(o), 0);
  const auto params = load_params((root() / "g" / "models" / "c" / "params.bin").string());
  EXPECT_EQ(params.flatten(), init_params(64, 16, Rng::mix(4, 7)).flatten());
}

TEST_F(Ops, TrainRejectsCameraFreeModality) {
  ASSERT_EQ(cmd_gen(gen_options(root(), "g", 1)), 0);
  auto o = options<TrainOptions>(root(), "g", json::object());
  o.modality = kLidar;
  EXPECT_THROW(cmd_train(o), UsageError);
}

TEST_F(Ops, MatrixSingleModalityShape) {
  json small = kSmall;
  small["data"]["train_scenes"] = 4;
  small["train"] = {{"epochs", 40}, {"learning_rate", 1e-2}};
  small["experiment"] = {{"seeds", {3}}, {"modalities", {"c"}}, {"panel_scenes", 1}};
  ASSERT_EQ(cmd_matrix(options<MatrixOptions>(root(), "m", small)), 0);
  std::ifstream in(root() / "m" / "results" / "matrix.json");
  const auto j = json::parse(in);
  EXPECT_EQ(j.at("cells").size(), 4u);
  std::set<std::string> occs;
  for (const auto& c : j.at("cells")) occs.insert(c.at("occlusion").get<std::string>());
  EXPECT_EQ(occs, (std::set<std::string>{"none", "random", "overlap", "realistic"}));
  // Degradation is defined once the clean cell has a nonzero IoU.
  for (const auto& c : j.at("cells")) {
    if (c.at("occlusion") == "none") {
      EXPECT_GT(c.at("iou_pct").get<double>(), 0.0);
    }
  }
  EXPECT_TRUE(j.at("degradation").contains("c"));
  std::ifstream csv(root() / "m" / "results" / "matrix.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "condition,C");
  EXPECT_TRUE(fs::exists(root() / "m" / "manifest.json"));
  EXPECT_TRUE(verify_manifest(root() / "m", load_manifest(root() / "m" / "manifest.json")).empty());
  EXPECT_THROW(cmd_matrix(options<MatrixOptions>(root(), "m", small)), IoError);
}

TEST_F(Ops, OutputRootFromEnvironment) {
  CommonOptions o;
  ::setenv(kOutputRootEnv, "/tmp/somewhere", 1);
  EXPECT_EQ(output_root(o), fs::path("/tmp/somewhere"));
  ::unsetenv(kOutputRootEnv);
  EXPECT_EQ(output_root(o), fs::path("runs"));
  o.output_root = "/x";
  EXPECT_EQ(output_root(o), fs::path("/x"));
}

TEST_F(Ops, RunIdDefaultsToConfigHash) {
  CommonOptions o;
  o.output_root = "/r";
  const ResolvedConfig cfg;
  EXPECT_EQ(run_directory(o, cfg, "gen"), fs::path("/r") / ("gen-" + config_hash(cfg).substr(0, 12)));
  o.run_id = "../escape";
  EXPECT_THROW(run_directory(o, cfg, "gen"), UsageError);
}

TEST_F(Ops, CliExitCodes) {
  const std::string r = "--output-root " + root().string();
  EXPECT_EQ(cli("--help"), 0);
  EXPECT_EQ(cli(""), 2);
  EXPECT_EQ(cli("fly"), 2);
  EXPECT_EQ(cli("gen --no-such-flag"), 2);
  EXPECT_EQ(cli("gen " + r + " --run-id bad --scenes 1 --min-vehicles 5 --max-vehicles 2"), 2);
  EXPECT_EQ(cli("occlude " + r + " --run-id missing"), 1);
  EXPECT_EQ(cli("train " + r), 2);
  EXPECT_EQ(cli("gen " + r + " --run-id z --scenes 0"), 0);
  EXPECT_EQ(cli("gen " + r + " --run-id z --scenes 0"), 1);
  EXPECT_EQ(cli("gen " + r + " --run-id z --scenes 0 --force"), 0);
  EXPECT_EQ(cli("occlude " + r + " --run-id z --occlusion smudge"), 2);
  EXPECT_EQ(cli("matrix " + r + " --seeds 1,x"), 2);
}
