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

#include "bevocc/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "bevocc/error.hpp"

namespace bevocc {

ResolvedConfig::ResolvedConfig() {
  // Full-grid training is exact but slow; the sampled estimate is unbiased.
  train.negative_sample_rate = 0.05;
}

std::string to_string(OverlapPairing p) { return p == OverlapPairing::pair ? "pair" : "all"; }

namespace {

using nlohmann::json;

std::string pooling_name(VelocityPooling p) { return p == VelocityPooling::max_abs ? "max" : "mean"; }

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

template <typename T>
T read(const json& j, const std::string& path) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) fail(path, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer()) fail(path, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (j.is_number_integer() && !j.is_number_unsigned() && j.get<std::int64_t>() < 0) {
          fail(path, "expected a non-negative integer");
        }
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) fail(path, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) fail(path, "expected a string");
    }
    return j.get<T>();
  } catch (const json::exception& e) {
    fail(path, e.what());
  }
}

template <typename Fn>
auto parse_enum(const json& j, const std::string& path, Fn&& parse) {
  const auto s = read<std::string>(j, path);
  try {
    return parse(s);
  } catch (const InvalidArgument& e) {
    fail(path, e.what());
  }
}

// Recursively overlays `patch` onto `base`; every key must already exist.
void overlay(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) fail(path.empty() ? "config" : path, "expected an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string sub = path.empty() ? key : path + "." + key;
    if (path.empty() && key == "schema_version") {
      if (!value.is_number_integer() || value.get<int>() != kConfigSchemaVersion) {
        fail(sub, fmt::format("unsupported schema version (expected {})", kConfigSchemaVersion));
      }
      continue;
    }
    if (!base.contains(key)) fail(sub, "unknown field");
    json& target = base[key];
    if (target.is_object()) {
      overlay(target, value, sub);
    } else {
      target = value;
    }
  }
}

ResolvedConfig from_json(const json& j) {
  ResolvedConfig c;
  const auto& g = j.at("grid");
  c.grid.x_extent = read<double>(g.at("x_extent"), "grid.x_extent");
  c.grid.y_extent = read<double>(g.at("y_extent"), "grid.y_extent");
  c.grid.z_min = read<double>(g.at("z_min"), "grid.z_min");
  c.grid.z_max = read<double>(g.at("z_max"), "grid.z_max");
  c.grid.nx = read<int>(g.at("nx"), "grid.nx");
  c.grid.ny = read<int>(g.at("ny"), "grid.ny");
  c.grid.nz = read<int>(g.at("nz"), "grid.nz");

  const auto& d = j.at("data");
  c.data.train_scenes = read<int>(d.at("train_scenes"), "data.train_scenes");
  c.data.val_scenes = read<int>(d.at("val_scenes"), "data.val_scenes");
  c.data.min_vehicles = read<int>(d.at("min_vehicles"), "data.min_vehicles");
  c.data.max_vehicles = read<int>(d.at("max_vehicles"), "data.max_vehicles");
  c.data.world_extent = read<double>(d.at("world_extent"), "data.world_extent");
  c.data.ego_speed = read<double>(d.at("ego_speed"), "data.ego_speed");

  const auto& s = j.at("sensors");
  const auto& l = s.at("lidar");
  c.sensors.lidar.n_azimuth = read<int>(l.at("n_azimuth"), "sensors.lidar.n_azimuth");
  c.sensors.lidar.sensor_height = read<double>(l.at("sensor_height"), "sensors.lidar.sensor_height");
  if (!l.at("elevation_deg").is_array()) fail("sensors.lidar.elevation_deg", "expected an array");
  c.sensors.lidar.elevation_deg.clear();
  for (std::size_t i = 0; i < l.at("elevation_deg").size(); ++i) {
    c.sensors.lidar.elevation_deg.push_back(
        read<double>(l.at("elevation_deg")[i], fmt::format("sensors.lidar.elevation_deg[{}]", i)));
  }
  const auto& r = s.at("radar");
  c.sensors.radar.n_returns_per_vehicle =
      read<int>(r.at("n_returns_per_vehicle"), "sensors.radar.n_returns_per_vehicle");
  c.sensors.radar.noise_sigma = read<double>(r.at("noise_sigma"), "sensors.radar.noise_sigma");
  c.sensors.radar.sensor_height = read<double>(r.at("sensor_height"), "sensors.radar.sensor_height");
  c.sensors.velocity_pooling =
      parse_enum(s.at("velocity_pooling"), "sensors.velocity_pooling", [](const std::string& v) {
        if (v == "max") return VelocityPooling::max_abs;
        if (v == "mean") return VelocityPooling::mean_abs;
        throw InvalidArgument("expected 'max' or 'mean'");
      });

  const auto& o = j.at("occlusion");
  c.occlusion.kernel_size = read<int>(o.at("kernel_size"), "occlusion.kernel_size");
  if (!o.at("sigma").is_null()) c.occlusion.sigma = read<double>(o.at("sigma"), "occlusion.sigma");
  c.occlusion.opacity = parse_enum(o.at("opacity"), "occlusion.opacity", parse_opacity);
  c.occlusion.side_fraction = read<double>(o.at("side_fraction"), "occlusion.side_fraction");
  c.occlusion.coverage = read<double>(o.at("coverage"), "occlusion.coverage");
  c.occlusion.n_blobs = read<int>(o.at("n_blobs"), "occlusion.n_blobs");
  c.occlusion.reference_range = read<double>(o.at("reference_range"), "occlusion.reference_range");
  c.occlusion.bev_threshold = read<double>(o.at("bev_threshold"), "occlusion.bev_threshold");
  c.occlusion.overlap_pairing =
      parse_enum(o.at("overlap_pairing"), "occlusion.overlap_pairing", [](const std::string& v) {
        if (v == "pair") return OverlapPairing::pair;
        if (v == "all") return OverlapPairing::all;
        throw InvalidArgument("expected 'pair' or 'all'");
      });
  c.occlusion.fixed_mask = read<bool>(o.at("fixed_mask"), "occlusion.fixed_mask");
  c.occlusion.mask_dir = read<std::string>(o.at("mask_dir"), "occlusion.mask_dir");

  const auto& m = j.at("model");
  c.model.hidden = read<int>(m.at("hidden"), "model.hidden");
  c.model.feature_stride = read<int>(m.at("feature_stride"), "model.feature_stride");

  const auto& t = j.at("train");
  c.train.learning_rate = read<double>(t.at("learning_rate"), "train.learning_rate");
  c.train.epochs = read<int>(t.at("epochs"), "train.epochs");
  c.train.batch_size = read<int>(t.at("batch_size"), "train.batch_size");
  c.train.seed = read<std::uint64_t>(t.at("seed"), "train.seed");
  c.train.beta1 = read<double>(t.at("beta1"), "train.beta1");
  c.train.beta2 = read<double>(t.at("beta2"), "train.beta2");
  c.train.epsilon = read<double>(t.at("epsilon"), "train.epsilon");
  c.train.weight_decay = read<double>(t.at("weight_decay"), "train.weight_decay");
  c.train.pos_weight.reset();
  if (!t.at("pos_weight").is_null()) c.train.pos_weight = read<double>(t.at("pos_weight"), "train.pos_weight");
  c.train.pos_weight_cap = read<double>(t.at("pos_weight_cap"), "train.pos_weight_cap");
  c.train.negative_sample_rate = read<double>(t.at("negative_sample_rate"), "train.negative_sample_rate");

  const auto& e = j.at("experiment");
  auto list = [](const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
  };
  c.experiment.seeds.clear();
  const auto seeds = list(e.at("seeds"), "experiment.seeds");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    c.experiment.seeds.push_back(read<std::uint64_t>(seeds[i], fmt::format("experiment.seeds[{}]", i)));
  }
  c.experiment.modalities.clear();
  const auto mods = list(e.at("modalities"), "experiment.modalities");
  for (std::size_t i = 0; i < mods.size(); ++i) {
    c.experiment.modalities.push_back(
        parse_enum(mods[i], fmt::format("experiment.modalities[{}]", i), parse_modality));
  }
  c.experiment.occlusions.clear();
  const auto occs = list(e.at("occlusions"), "experiment.occlusions");
  for (std::size_t i = 0; i < occs.size(); ++i) {
    c.experiment.occlusions.push_back(
        parse_enum(occs[i], fmt::format("experiment.occlusions[{}]", i), parse_occlusion_mode));
  }
  c.experiment.retrain_per_condition =
      read<bool>(e.at("retrain_per_condition"), "experiment.retrain_per_condition");
  c.experiment.per_scene_iou = read<bool>(e.at("per_scene_iou"), "experiment.per_scene_iou");
  c.experiment.panel_scenes = read<int>(e.at("panel_scenes"), "experiment.panel_scenes");
  c.experiment.feature_dump_scenes =
      read<int>(e.at("feature_dump_scenes"), "experiment.feature_dump_scenes");
  return c;
}

}  // namespace

void ResolvedConfig::validate() const {
  try {
    grid.validate();
  } catch (const InvalidArgument& e) {
    fail("grid", e.what());
  }
  if (data.train_scenes < 0) fail("data.train_scenes", "must be >= 0");
  if (data.val_scenes < 0) fail("data.val_scenes", "must be >= 0");
  if (data.min_vehicles < 0) fail("data.min_vehicles", "must be >= 0");
  if (data.max_vehicles < data.min_vehicles) fail("data.max_vehicles", "must be >= data.min_vehicles");
  if (!(data.world_extent > 0.0)) fail("data.world_extent", "must be > 0");
  if (!(data.ego_speed >= 0.0)) fail("data.ego_speed", "must be >= 0");

  if (sensors.lidar.n_azimuth < 1) fail("sensors.lidar.n_azimuth", "must be >= 1");
  for (std::size_t i = 0; i < sensors.lidar.elevation_deg.size(); ++i) {
    const double e = sensors.lidar.elevation_deg[i];
    if (!(e > -90.0 && e < 90.0)) fail(fmt::format("sensors.lidar.elevation_deg[{}]", i), "must be in (-90, 90)");
  }
  if (!(sensors.lidar.sensor_height > 0.0)) fail("sensors.lidar.sensor_height", "must be > 0");
  if (sensors.radar.n_returns_per_vehicle < 0) fail("sensors.radar.n_returns_per_vehicle", "must be >= 0");
  if (!(sensors.radar.noise_sigma >= 0.0)) fail("sensors.radar.noise_sigma", "must be >= 0");
  if (!(sensors.radar.sensor_height > 0.0)) fail("sensors.radar.sensor_height", "must be > 0");

  if (occlusion.kernel_size < 1 || occlusion.kernel_size % 2 == 0) {
    fail("occlusion.kernel_size", "must be odd and positive");
  }
  if (occlusion.sigma && !(*occlusion.sigma > 0.0)) fail("occlusion.sigma", "must be > 0");
  if (!(occlusion.side_fraction >= 0.0 && occlusion.side_fraction <= 1.0)) {
    fail("occlusion.side_fraction", "must be in [0, 1]");
  }
  if (!(occlusion.coverage > 0.0 && occlusion.coverage < 1.0)) fail("occlusion.coverage", "must be in (0, 1)");
  if (occlusion.n_blobs < 0) fail("occlusion.n_blobs", "must be >= 0");
  if (!(occlusion.reference_range > 0.0)) fail("occlusion.reference_range", "must be > 0");
  if (!(occlusion.bev_threshold > 0.0 && occlusion.bev_threshold <= 1.0)) {
    fail("occlusion.bev_threshold", "must be in (0, 1]");
  }

  if (model.hidden < 1) fail("model.hidden", "must be >= 1");
  if (model.feature_stride < 1) fail("model.feature_stride", "must be >= 1");
  try {
    train.validate();
  } catch (const InvalidArgument& e) {
    throw ValidationError(e.what());
  }

  if (experiment.seeds.empty()) fail("experiment.seeds", "must not be empty");
  if (experiment.modalities.empty()) fail("experiment.modalities", "must not be empty");
  for (std::size_t i = 0; i < experiment.modalities.size(); ++i) {
    if (!(experiment.modalities[i] & kCamera)) {
      fail(fmt::format("experiment.modalities[{}]", i), "must include the camera");
    }
  }
  if (std::set(experiment.modalities.begin(), experiment.modalities.end()).size() !=
      experiment.modalities.size()) {
    fail("experiment.modalities", "contains duplicates");
  }
  if (experiment.occlusions.empty()) fail("experiment.occlusions", "must not be empty");
  if (std::set(experiment.occlusions.begin(), experiment.occlusions.end()).size() !=
      experiment.occlusions.size()) {
    fail("experiment.occlusions", "contains duplicates");
  }
  if (experiment.panel_scenes < 0) fail("experiment.panel_scenes", "must be >= 0");
  if (experiment.feature_dump_scenes < 0) fail("experiment.feature_dump_scenes", "must be >= 0");
}

nlohmann::json config_to_json(const ResolvedConfig& c) {
  json mods = json::array();
  for (auto m : c.experiment.modalities) mods.push_back(modality_name(m));
  json occs = json::array();
  for (auto o : c.experiment.occlusions) occs.push_back(to_string(o));
  return {
      {"schema_version", kConfigSchemaVersion},
      {"grid", grid_to_json(c.grid)},
      {"data",
       {{"train_scenes", c.data.train_scenes},
        {"val_scenes", c.data.val_scenes},
        {"min_vehicles", c.data.min_vehicles},
        {"max_vehicles", c.data.max_vehicles},
        {"world_extent", c.data.world_extent},
        {"ego_speed", c.data.ego_speed}}},
      {"sensors",
       {{"lidar",
         {{"n_azimuth", c.sensors.lidar.n_azimuth},
          {"elevation_deg", c.sensors.lidar.elevation_deg},
          {"sensor_height", c.sensors.lidar.sensor_height}}},
        {"radar",
         {{"n_returns_per_vehicle", c.sensors.radar.n_returns_per_vehicle},
          {"noise_sigma", c.sensors.radar.noise_sigma},
          {"sensor_height", c.sensors.radar.sensor_height}}},
        {"velocity_pooling", pooling_name(c.sensors.velocity_pooling)}}},
      {"occlusion",
       {{"kernel_size", c.occlusion.kernel_size},
        {"sigma", c.occlusion.sigma ? json(*c.occlusion.sigma) : json(nullptr)},
        {"opacity", to_string(c.occlusion.opacity)},
        {"side_fraction", c.occlusion.side_fraction},
        {"coverage", c.occlusion.coverage},
        {"n_blobs", c.occlusion.n_blobs},
        {"reference_range", c.occlusion.reference_range},
        {"bev_threshold", c.occlusion.bev_threshold},
        {"overlap_pairing", to_string(c.occlusion.overlap_pairing)},
        {"fixed_mask", c.occlusion.fixed_mask},
        {"mask_dir", c.occlusion.mask_dir}}},
      {"model", {{"hidden", c.model.hidden}, {"feature_stride", c.model.feature_stride}}},
      {"train", train_config_to_json(c.train)},
      {"experiment",
       {{"seeds", c.experiment.seeds},
        {"modalities", mods},
        {"occlusions", occs},
        {"retrain_per_condition", c.experiment.retrain_per_condition},
        {"per_scene_iou", c.experiment.per_scene_iou},
        {"panel_scenes", c.experiment.panel_scenes},
        {"feature_dump_scenes", c.experiment.feature_dump_scenes}}},
  };
}

ResolvedConfig merge_config(const ResolvedConfig& base, const nlohmann::json& j) {
  json merged = config_to_json(base);
  overlay(merged, j, "");
  ResolvedConfig out = from_json(merged);
  out.validate();
  return out;
}

ResolvedConfig load_config(const std::string& path, const ResolvedConfig& base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed config file " + path + ": " + e.what());
  }
  return merge_config(base, j);
}

void save_config(const std::string& path, const ResolvedConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << config_to_json(cfg).dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

std::string config_hash(const ResolvedConfig& cfg) { return sha256_hex(config_to_json(cfg).dump()); }

}  // namespace bevocc
