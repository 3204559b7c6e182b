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

// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include "bevocc/bev.hpp"
#include "bevocc/experiment.hpp"
#include "bevocc/geometry.hpp"
#include "bevocc/manifest.hpp"
#include "bevocc/metrics.hpp"
#include "bevocc/occlusion.hpp"
#include "bevocc/ops.hpp"
#include "bevocc/rng.hpp"
#include "bevocc/seg_head.hpp"
#include "bevocc/sensors.hpp"
#include "test_util.hpp"

using namespace bevocc;
using bevocc::testutil::level_camera;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Collects failed checks for one criterion.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

Image random_image(int w, int h, int c, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Image img(w, h, c);
  for (auto& v : img.data) v = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

BEVGridSpec small_grid(int n, double extent, int nz, double z0, double z1) {
  BEVGridSpec g;
  g.x_extent = g.y_extent = extent;
  g.nx = g.ny = n;
  g.nz = nz;
  g.z_min = z0;
  g.z_max = z1;
  return g;
}

// ---------------------------------------------------------------------------

void degradation_row(Check& c) {
  const double clean[] = {47.4, 55.7, 60.8, 64.5};
  const double occluded[] = {34.3, 43.1, 50.3, 54.5};
  const double want[] = {27.6, 22.6, 17.2, 15.5};
  for (int i = 0; i < 4; ++i) {
    const double got = report_one_decimal(degradation_percent(clean[i], occluded[i]));
    c.expect(std::abs(got - want[i]) <= 0.05, fmt::format("column {}: {} vs {}", i, got, want[i]));
  }
}

void loss_values(Check& c) {
  const std::vector<std::uint8_t> one{1}, zero{0};
  const std::vector<double> x0{0.0}, x2{2.0};
  const double l0 = bce_with_logits_loss<double>(x0, one).loss;
  const double l2 = bce_with_logits_loss<double>(x2, zero).loss;
  c.expect(std::abs(l0 - std::log(2.0)) < 1e-6, fmt::format("x=0,y=1 gives {}", l0));
  c.expect(std::abs(l2 - 2.126928) < 1e-6, fmt::format("x=2,y=0 gives {}", l2));
  const std::vector<float> lf{0.0f}, lf2{2.0f};
  c.expect(std::abs(bce_with_logits_loss<float>(lf, one).loss - std::log(2.0)) < 1e-6, "float ln 2");
  c.expect(std::abs(bce_with_logits_loss<float>(lf2, zero).loss - 2.126928) < 1e-6, "float 2.126928");
  for (double x : {-1e4, -1e3, -50.0, 50.0, 1e3, 1e4}) {
    for (std::uint8_t y : {0, 1}) {
      const std::vector<float> xs{static_cast<float>(x)};
      const std::vector<std::uint8_t> ys{y};
      const auto r = bce_with_logits_loss<float>(xs, ys);
      c.expect(std::isfinite(r.loss) && std::isfinite(r.grad[0]) && r.loss >= 0,
               fmt::format("non-finite at x={} y={}", x, y));
    }
  }
}

void gradient_check(Check& c) {
  const auto t0 = Clock::now();
  Rng rng(31);
  // A small step keeps ReLU kinks out of the difference stencil.
  constexpr double h = 1e-6;
  BEVGridSpec g;
  g.nx = g.ny = 8;
  g.x_extent = g.y_extent = 2.0;
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int c_in = 1 + trial % 4, hidden = 2 + trial % 5;
    SegHeadParamsT<double> p(c_in, hidden);
    for (Eigen::Index i = 0; i < p.conv1.size(); ++i) p.conv1.data()[i] = rng.normal(0, 0.5);
    for (int k = 0; k < hidden; ++k) {
      p.bias1[k] = rng.normal(0, 0.5);
      p.linear2[k] = rng.normal(0, 0.5);
    }
    p.bias2 = rng.normal(0, 0.5);
    BEVFeatureMap f(g, c_in, kCamera);
    for (auto& v : f.data) v = static_cast<float>(rng.uniform(-1, 1));
    BevMask labels(8, 8);
    for (auto& v : labels.data) v = rng.uniform() < 0.3;
    const FeatureStack stack(f);
    LossOptions opt;
    opt.pos_weight = 1.0 + trial % 5;
    const auto analytic = loss_and_gradient(p, stack, labels, opt).second.flatten();
    auto values = p.flatten();
    auto eval = [&](const std::vector<double>& v) {
      SegHeadParamsT<double> q(c_in, hidden);
      q.unflatten(v);
      return bce_with_logits_loss<double>(forward(q, stack), labels.data, opt).loss;
    };
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double keep = values[i];
      values[i] = keep + h;
      const double up = eval(values);
      values[i] = keep - h;
      const double down = eval(values);
      values[i] = keep;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, std::abs(numeric - analytic[i]) /
                                  std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3}));
    }
  }
  const double s = seconds_since(t0);
  c.expect(worst < 1e-4, fmt::format("max relative error {:.3g}", worst));
  c.expect(s < 10.0, fmt::format("took {:.1f} s", s));
}

void lift_correctness(Check& c) {
  const auto t0 = Clock::now();
  Rng rng(41);
  const auto g = small_grid(4, 2.0, 1, -0.5, 0.5);
  const int ix = g.bin_x(0.5), iy = g.bin_y(0.5), iy_r = g.bin_y(-0.5);

  const auto exact_cam = level_camera("a", 0.0, 100.0, 50.0, 40.0, 100, 80, Vec3(-9.5, 0.5, 0.0));
  const std::vector<Image> feats{random_image(100, 80, 5, rng, -1, 1)};
  const auto exact = lift_camera_features(feats, {exact_cam}, Pose::identity(), g);
  for (int ch = 0; ch < 5; ++ch) {
    c.expect(std::abs(exact.at(ix, iy, 0, ch) - feats[0].at(50, 40, ch)) <= 1e-6, "integer pixel on axis");
    c.expect(std::abs(exact.at(ix, iy_r, 0, ch) - feats[0].at(60, 40, ch)) <= 1e-6, "integer pixel off axis");
  }

  const auto mid_cam = level_camera("a", 0.0, 100.0, 50.5, 40.0, 100, 80, Vec3(-9.5, 0.5, 0.0));
  const auto mid = lift_camera_features(feats, {mid_cam}, Pose::identity(), g);
  for (int ch = 0; ch < 5; ++ch) {
    const double want = 0.5 * (feats[0].at(50, 40, ch) + feats[0].at(51, 40, ch));
    c.expect(std::abs(mid.at(ix, iy, 0, ch) - want) <= 1e-6, "midpoint average");
  }

  const auto behind_cam = level_camera("a", 0.0, 100.0, 50.0, 40.0, 100, 80, Vec3(5.0, 0.0, 0.0));
  const auto behind = lift_camera_features(feats, {behind_cam}, Pose::identity(), g);
  c.expect(std::all_of(behind.data.begin(), behind.data.end(), [](float v) { return v == 0.0f; }),
           "voxels outside the frustum are not zero");

  const auto rig = nuscenes_like_rig(64, 36);
  const auto lg = small_grid(20, 20.0, 4, -1.0, 3.0);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Image> f, h, mix;
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    for (std::size_t k = 0; k < rig.size(); ++k) {
      f.push_back(random_image(64, 36, 2, rng, -1, 1));
      h.push_back(random_image(64, 36, 2, rng, -1, 1));
      Image m(64, 36, 2);
      for (std::size_t i = 0; i < m.data.size(); ++i) {
        m.data[i] = static_cast<float>(a * f.back().data[i] + b * h.back().data[i]);
      }
      mix.push_back(std::move(m));
    }
    const auto lf = lift_camera_features(f, rig, Pose::identity(), lg);
    const auto lh = lift_camera_features(h, rig, Pose::identity(), lg);
    const auto lm = lift_camera_features(mix, rig, Pose::identity(), lg);
    for (std::size_t i = 0; i < lm.data.size(); ++i) {
      worst = std::max(worst, std::abs(lm.data[i] - (a * lf.data[i] + b * lh.data[i])));
    }
  }
  c.expect(worst < 1e-5, fmt::format("linearity error {:.3g}", worst));
  const double s = seconds_since(t0);
  c.expect(s < 30.0, fmt::format("took {:.1f} s", s));
}

void occupancy_semantics(Check& c) {
  const auto t0 = Clock::now();
  Rng rng(51);
  const auto g = small_grid(24, 12.0, 8, -1.0, 7.0);
  int mismatched = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    PointCloud cloud;
    const int n = static_cast<int>(rng.uniform_int(0, 300));
    for (int i = 0; i < n; ++i) {
      Vec3 p(rng.uniform(-1.1, 1.1) * g.x_extent, rng.uniform(-1.1, 1.1) * g.y_extent,
             rng.uniform(g.z_min - 1, g.z_max + 1));
      if (rng.uniform() < 0.2) {
        p.y() = -g.y_extent + g.cell_size() * static_cast<double>(rng.uniform_int(0, g.ny));
        p.z() = g.z_min + g.level_height() * static_cast<double>(rng.uniform_int(0, g.nz));
      }
      cloud.points.push_back({p, 0.0});
      // Some points appear several times.
      if (rng.uniform() < 0.1) cloud.points.push_back({p, 0.0});
    }
    std::set<std::tuple<int, int, int>> occupied;
    for (const auto& pt : cloud.points) {
      const double fx = (pt.position.x() + g.x_extent) / g.cell_size();
      const double fy = (pt.position.y() + g.y_extent) / g.cell_size();
      const double fz = (pt.position.z() - g.z_min) / g.level_height();
      if (fx < 0 || fy < 0 || fz < 0 || fx >= g.nx || fy >= g.ny || fz >= g.nz) continue;
      occupied.emplace(static_cast<int>(fx), static_cast<int>(fy), static_cast<int>(fz));
    }
    const auto m = voxelize_points(cloud, g, false);
    bool ok = true;
    for (int ix = 0; ix < g.nx && ok; ++ix) {
      for (int iy = 0; iy < g.ny && ok; ++iy) {
        for (int iz = 0; iz < g.nz; ++iz) {
          const float want = occupied.count({ix, iy, iz}) ? 1.0f : 0.0f;
          if (m.at(ix, iy, iz) != want) {
            ok = false;
            break;
          }
        }
      }
    }
    mismatched += !ok;
  }
  c.expect(mismatched == 0, fmt::format("{} clouds disagree with the binning oracle", mismatched));

  PointCloud dup;
  for (int i = 0; i < 500; ++i) dup.points.push_back({Vec3(1.3, -2.7, 0.2), 3.0});
  const auto m = voxelize_points(dup, g, false);
  c.expect(*std::max_element(m.data.begin(), m.data.end()) == 1.0f, "duplicate points exceed 1");
  c.expect(std::count(m.data.begin(), m.data.end(), 1.0f) == 1, "duplicate points fill more than one voxel");
  const double s = seconds_since(t0);
  c.expect(s < 30.0, fmt::format("took {:.1f} s", s));
}

Image direct_blur(const Image& img, const GaussianKernel& k) {
  Image out(img.width, img.height, img.channels);
  const int r = k.radius();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int ch = 0; ch < img.channels; ++ch) {
        double acc = 0;
        for (int dy = -r; dy <= r; ++dy) {
          const int yy = std::clamp(y + dy, 0, img.height - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const int xx = std::clamp(x + dx, 0, img.width - 1);
            acc += k.weights[dy + r] * k.weights[dx + r] * img.at(xx, yy, ch);
          }
        }
        out.at(x, y, ch) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

void blur_pipeline(Check& c) {
  Rng rng(61);
  for (int k : {3, 7, 31}) {
    const auto kernel = GaussianKernel::make(k);
    double sum = 0;
    for (double w : kernel.weights) sum += w;
    c.expect(std::abs(sum - 1.0) <= 1e-6, fmt::format("k={} weights sum to {}", k, sum));
    const Image img = random_image(72, 48, 3, rng);
    const Image a = gaussian_blur(img, kernel), b = direct_blur(img, kernel);
    float worst = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    c.expect(worst <= 1e-5, fmt::format("k={} separable vs direct differ by {:.3g}", k, worst));
  }
  const double sum251 = [] {
    double s = 0;
    for (double w : GaussianKernel::make(251).weights) s += w;
    return s;
  }();
  c.expect(std::abs(sum251 - 1.0) <= 1e-6, "k=251 weights not normalized");

  const Image img = random_image(800, 448, 3, rng);
  const auto big = GaussianKernel::make(kDefaultBlurKernelSize);
  c.expect(apply_occlusion(img, OcclusionMask::empty(800, 448), big).data == img.data,
           "empty mask changes the image");
  const auto t0 = Clock::now();
  const Image blurred = gaussian_blur(img, big);
  const double s = seconds_since(t0);
  c.expect(blurred.same_shape(img), "blur changes the shape");
  c.expect(s < 1.0, fmt::format("k=251 blur of 800x448 took {:.2f} s", s));
}

// First t at which the ray is inside the box, by marching and bisection.
std::optional<double> march_oracle(const Ray& ray, const Vec3& centre, const Vec3& half, const Mat3& rot,
                                   double t_max, double step) {
  auto inside = [&](double t) {
    const Vec3 local = rot.transpose() * (ray.at(t) - centre);
    return (local.array().abs() <= half.array()).all();
  };
  for (double t = step; t <= t_max; t += step) {
    if (!inside(t)) continue;
    double lo = t - step, hi = t;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (inside(mid) ? hi : lo) = mid;
    }
    return hi;
  }
  return std::nullopt;
}

void geometry_round_trips(Check& c) {
  Rng rng(71);
  double worst = 0;
  int lost = 0;
  for (int i = 0; i < 1000; ++i) {
    CameraModel cam;
    const int w = 64 + static_cast<int>(rng.uniform_int(0, 900));
    const int h = 48 + static_cast<int>(rng.uniform_int(0, 500));
    cam.intrinsics = {rng.uniform(50, 1000), rng.uniform(50, 1000), rng.uniform(0, w - 1), rng.uniform(0, h - 1), w, h};
    cam.extrinsics = testutil::random_pose(rng);
    const Pose ego = testutil::random_pose(rng);
    const Vec2 px(rng.uniform(0, w - 1e-6), rng.uniform(0, h - 1e-6));
    const double depth = rng.uniform(0.2, 80.0);
    const auto p = project_point(cam, unproject_pixel(cam, px, depth, ego), ego);
    if (!p) {
      ++lost;
      continue;
    }
    worst = std::max({worst, std::abs(p->u - px.x()), std::abs(p->v - px.y()), std::abs(p->depth - depth)});
  }
  c.expect(lost == 0, fmt::format("{} round trips left the image", lost));
  c.expect(worst < 1e-6, fmt::format("round-trip error {:.3g}", worst));

  int disagreements = 0, hits = 0, cases = 0;
  while (cases < 1000) {
    const Vec3 centre(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-2, 2));
    const Vec3 half(rng.uniform(0.3, 2.5), rng.uniform(0.3, 1.5), rng.uniform(0.3, 1.2));
    const Mat3 rot = testutil::random_pose(rng).rotation;
    const Vec3 origin(rng.uniform(-12, 12), rng.uniform(-12, 12), rng.uniform(-4, 4));
    // Aim near the box so a good share of the rays hit.
    const Vec3 target = centre + Vec3(rng.normal(0, 2), rng.normal(0, 2), rng.normal(0, 1.5));
    if ((target - origin).norm() < 1e-3) continue;
    const Ray ray = Ray::through(origin, target - origin);
    // Origins inside the box report an exit distance; the oracle covers entries.
    if (((rot.transpose() * (origin - centre)).array().abs() <= half.array()).all()) continue;
    ++cases;
    const auto got = ray_obb_intersect(ray, centre, half, rot);
    auto want = march_oracle(ray, centre, half, rot, 40.0, 2e-3);
    // A grazing chord shorter than one step can slip between samples.
    if (got && !want) want = march_oracle(ray, centre, half, rot, 40.0, 1e-5);
    if (got.has_value() != want.has_value() || (got && std::abs(*got - *want) > 1e-3)) ++disagreements;
    hits += got.has_value();
  }
  c.expect(disagreements == 0, fmt::format("{} of 1000 ray/box cases disagree with the oracle", disagreements));
  c.expect(hits >= 200, fmt::format("only {} hits among the ray/box cases", hits));
}

// Clean IoU ordering, realistic-degradation ordering and camera-only
// placement ordering, counted per seed.
void table_directions(Check& c) {
  const ResolvedConfig cfg;
  const auto t0 = Clock::now();
  const auto m = run_matrix(cfg);
  const double s = seconds_since(t0);
  std::printf("%s", matrix_to_csv(m).c_str());
  const std::vector<ModalitySet> order{kCamera, kCamera | kRadar, kCamera | kLidar, kCamera | kRadar | kLidar};
  int a = 0, b = 0, cc = 0;
  for (const auto& seed : m.per_seed) {
    auto cell = [&](ModalitySet mod, OcclusionMode o) -> double {
      for (const auto& x : seed.cells) {
        if (x.modality == mod && x.occlusion == o && !x.failed) return x.iou_pct;
      }
      return std::nan("");
    };
    auto degr = [&](ModalitySet mod, OcclusionMode o) {
      return degradation_percent(cell(mod, OcclusionMode::none), cell(mod, o));
    };
    bool clean_ok = true, degr_ok = true;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
      clean_ok = clean_ok && cell(order[i], OcclusionMode::none) < cell(order[i + 1], OcclusionMode::none);
      degr_ok = degr_ok && degr(order[i], OcclusionMode::realistic) > degr(order[i + 1], OcclusionMode::realistic);
    }
    const double dr = degr(kCamera, OcclusionMode::realistic), dn = degr(kCamera, OcclusionMode::random_box),
                 dov = degr(kCamera, OcclusionMode::overlap);
    const bool placement_ok = dr > dn && dn > dov;
    std::printf("seed %llu: clean ordering %s, degradation ordering %s, placement ordering %s "
                "(realistic %.2f, random %.2f, overlap %.2f)\n",
                static_cast<unsigned long long>(seed.seed), clean_ok ? "yes" : "no", degr_ok ? "yes" : "no",
                placement_ok ? "yes" : "no", dr, dn, dov);
    a += clean_ok;
    b += degr_ok;
    cc += placement_ok;
  }
  const int need = static_cast<int>(m.per_seed.size()) * 2 / 3 + (m.per_seed.size() * 2 % 3 != 0);
  c.expect(m.per_seed.size() == 3, "expected three seeds");
  c.expect(a >= need, fmt::format("(a) clean ordering held in {} seeds", a));
  c.expect(b >= need, fmt::format("(b) degradation ordering held in {} seeds", b));
  c.expect(cc >= need, fmt::format("(c) placement ordering held in {} seeds", cc));
  c.expect(s < 900.0, fmt::format("took {:.0f} s", s));
  std::printf("matrix run took %.0f s\n", s);
}

void iou_oracle(Check& c) {
  Rng rng(91);
  int wrong = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int nx = static_cast<int>(rng.uniform_int(1, 40)), ny = static_cast<int>(rng.uniform_int(1, 40));
    BevMask a(nx, ny), b(nx, ny);
    const double pa = rng.uniform(), pb = rng.uniform();
    for (auto& v : a.data) v = rng.uniform() < pa;
    for (auto& v : b.data) v = rng.uniform() < pb;
    std::uint64_t inter = 0, uni = 0;
    for (int ix = 0; ix < nx; ++ix) {
      for (int iy = 0; iy < ny; ++iy) {
        inter += a.at(ix, iy) && b.at(ix, iy);
        uni += a.at(ix, iy) || b.at(ix, iy);
      }
    }
    const auto r = iou(a, b);
    const double want = uni ? static_cast<double>(inter) / static_cast<double>(uni) : 1.0;
    wrong += r.intersection != inter || r.union_ != uni || r.iou != want;
  }
  c.expect(wrong == 0, fmt::format("{} of 1000 pairs disagree", wrong));
  BevMask a(6, 6), b(6, 6);
  for (int ix = 1; ix < 3; ++ix) {
    for (int iy = 1; iy < 3; ++iy) {
      a.at(ix, iy) = 1;
      b.at(ix + 1, iy) = 1;
    }
  }
  c.expect(iou(a, b).iou == 1.0 / 3.0, "shifted 2x2 block is not 1/3");
}

void determinism(Check& c) {
  testutil::TempDir dir("acceptance_det");
  const nlohmann::json small = {
      {"grid", {{"nx", 60}, {"ny", 60}, {"x_extent", 30.0}, {"y_extent", 30.0}}},
      {"data", {{"world_extent", 30.0}, {"train_scenes", 6}, {"val_scenes", 3}}},
      {"train", {{"epochs", 3}}},
      {"occlusion", {{"kernel_size", 61}}},
      {"experiment", {{"seeds", {0, 1}}, {"panel_scenes", 1}}},
  };
  std::map<std::string, std::string> runs[2];
  for (int r = 0; r < 2; ++r) {
    MatrixOptions o;
    o.output_root = dir.path();
    o.run_id = r == 0 ? "first" : "second";
    o.overrides = small;
    const int code = cmd_matrix(o);
    c.expect(code == 0, fmt::format("run {} exited with {}", r, code));
    for (const auto& f : build_manifest(dir.path() / o.run_id, "x", "", {}).files) runs[r][f.path] = f.sha256;
    runs[r].erase("manifest.json");
  }
  c.expect(runs[0].count("results/matrix.json") == 1, "matrix.json missing");
  const bool has_features = std::any_of(runs[0].begin(), runs[0].end(), [](const auto& kv) {
    return kv.first.find(".bevf") != std::string::npos;
  });
  c.expect(has_features, "no feature files written");
  c.expect(runs[0] == runs[1], "file hashes differ between runs");
  for (const auto& [path, h] : runs[0]) {
    const auto it = runs[1].find(path);
    if (it == runs[1].end() || it->second != h) c.expect(false, "differs: " + path);
  }
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"degradation row", degradation_row},
      {"loss values", loss_values},
      {"gradient check", gradient_check},
      {"lift correctness", lift_correctness},
      {"occupancy semantics", occupancy_semantics},
      {"blur pipeline", blur_pipeline},
      {"geometry round trips", geometry_round_trips},
      {"table directions", table_directions},
      {"iou oracle", iou_oracle},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto t0 = Clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("threw: ") + e.what());
    }
    const bool ok = c.failures.empty();
    failed += !ok;
    std::printf("%s criterion %zu (%s) [%.1f s]\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                seconds_since(t0));
    for (const auto& f : c.failures) std::printf("    %s\n", f.c_str());
    std::fflush(stdout);
  }
  return failed;
}
