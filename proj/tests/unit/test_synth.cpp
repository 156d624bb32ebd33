#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wlf/ccl.hpp"
#include "wlf/error.hpp"
#include "wlf/pvc.hpp"
#include "wlf/range_image.hpp"
#include "wlf/spg.hpp"
#include "wlf/synth.hpp"

namespace wlf {
namespace {

constexpr ObjectClassSpec kNone{0, 0, {5, 10}, {1, 1}, {1, 1}, {1, 1}, {0, 0}};

SceneConfig background_only(std::uint64_t seed) {
  SceneConfig cfg;
  cfg.seed = seed;
  cfg.objects = {kNone, kNone, kNone};
  cfg.walls = kNone;
  cfg.poles = kNone;
  return cfg;
}

SceneConfig single(int cls, std::uint64_t seed, SceneConfig cfg = SceneConfig{}) {
  cfg.seed = seed;
  const auto spec = cfg.objects[static_cast<std::size_t>(cls - 1)];
  cfg.objects = {kNone, kNone, kNone};
  cfg.objects[static_cast<std::size_t>(cls - 1)] = spec;
  cfg.objects[static_cast<std::size_t>(cls - 1)].min_count = 1;
  cfg.objects[static_cast<std::size_t>(cls - 1)].max_count = 1;
  cfg.walls = kNone;
  cfg.poles = kNone;
  cfg.occlusion_fraction = 0.0;
  cfg.depth_jitter = 0.0;
  return cfg;
}

// Slab test in the cuboid's yawed frame, z between base and height.
std::optional<double> cuboid_hit(const SceneObject& o, const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
  const double c = std::cos(o.yaw), s = std::sin(o.yaw);
  const Eigen::Vector3d p(c * (origin.x() - o.cx) + s * (origin.y() - o.cy),
                          -s * (origin.x() - o.cx) + c * (origin.y() - o.cy), origin.z());
  const Eigen::Vector3d d(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());
  const Eigen::Vector3d lo(-o.length / 2, -o.width / 2, o.base), hi(o.length / 2, o.width / 2, o.height);
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (p[a] < lo[a] || p[a] > hi[a]) return std::nullopt;
      continue;
    }
    double ta = (lo[a] - p[a]) / d[a], tb = (hi[a] - p[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return std::nullopt;
  return t0;
}

bool same_bundle(const SyntheticScene& a, const SyntheticScene& b) {
  const auto& fa = a.bundle.frame;
  const auto& fb = b.bundle.frame;
  if (fa.size() != fb.size() || fa.beam_row != fb.beam_row || fa.gt_semantic != fb.gt_semantic ||
      fa.gt_instance != fb.gt_instance || a.bundle.boxes.size() != b.bundle.boxes.size()) {
    return false;
  }
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (fa.points[i].x != fb.points[i].x || fa.points[i].y != fb.points[i].y ||
        fa.points[i].z != fb.points[i].z) {
      return false;
    }
  }
  for (std::size_t k = 0; k < a.bundle.boxes.size(); ++k) {
    const auto& x = a.bundle.boxes[k].bounds;
    const auto& y = b.bundle.boxes[k].bounds;
    if (x.x_min != y.x_min || x.y_min != y.y_min || x.x_max != y.x_max || x.y_max != y.y_max) return false;
  }
  return true;
}

TEST(Synth, SameSeedIsBitIdentical) {
  SceneConfig cfg;
  cfg.seed = 42;
  cfg.depth_jitter = 0.02;
  EXPECT_TRUE(same_bundle(generate_scene(cfg), generate_scene(cfg)));
  cfg.seed = 43;
  auto other = cfg;
  other.seed = 42;
  EXPECT_FALSE(same_bundle(generate_scene(cfg), generate_scene(other)));
}

TEST(Synth, SingleCuboidMatchesRayCastOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto cfg = single(kVehicleClass, seed);
    const auto scene = generate_scene(cfg);
    ASSERT_EQ(scene.objects.size(), 1u);
    const auto& obj = scene.objects[0];
    ASSERT_EQ(obj.instance_id, 1);
    const auto& f = scene.bundle.frame;
    std::size_t on_object = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const auto [row, col] = scene.ray_cell[i];
      const double elev = (cfg.vfov_max_deg - (cfg.vfov_max_deg - cfg.vfov_min_deg) * row / (cfg.beams - 1)) *
                          std::numbers::pi / 180.0;
      const double az = (col + 0.5) / cfg.columns * 2 * std::numbers::pi - std::numbers::pi;
      const Eigen::Vector3d dir(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az), std::sin(elev));
      const double ground = dir.z() < 0 ? -cfg.sensor_height / dir.z() : std::numeric_limits<double>::infinity();
      const auto box = cuboid_hit(obj, scene.sensor_origin, dir);
      const bool object_first = box && *box < ground;
      ASSERT_EQ((*f.gt_instance)[i], object_first ? 1 : 0);
      ASSERT_EQ((*f.gt_semantic)[i], object_first ? kVehicleClass : 0);
      ASSERT_NEAR(scene.ray_length[i], object_first ? *box : ground, 1e-9);
      ASSERT_NEAR(f.points[i].range(), scene.ray_length[i], 1e-9);
      on_object += object_first;
    }
    EXPECT_GT(on_object, 0u);
  }
}

TEST(Synth, BoxContainsInstancePixels) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SceneConfig cfg;
    cfg.seed = seed;
    const auto scene = generate_scene(cfg);
    const auto& b = scene.bundle;
    ASSERT_NO_THROW(validate_boxes(b.boxes, b.calib.image_size));
    const auto proj = project_points(b.calib, b.frame);
    // Boxes are numbered over hit objects in order, as are instances.
    std::vector<std::int32_t> instance_of_box;
    for (const auto& o : scene.objects) {
      if (o.instance_id > 0) instance_of_box.push_back(o.instance_id);
    }
    for (const auto& box : b.boxes) {
      const auto inst = instance_of_box[static_cast<std::size_t>(box.box_id - 1)];
      for (std::size_t i = 0; i < b.frame.size(); ++i) {
        if ((*b.frame.gt_instance)[i] != inst || !proj.valid[i]) continue;
        ASSERT_TRUE(box.bounds.contains(proj.pixels[i].x(), proj.pixels[i].y()));
        ASSERT_EQ(box.class_id, (*b.frame.gt_semantic)[i]);
      }
    }
  }
}

TEST(Synth, EmptySceneIsAllBackground) {
  const auto scene = generate_scene(background_only(5));
  const auto& f = scene.bundle.frame;
  EXPECT_GT(f.size(), 0u);
  EXPECT_TRUE(scene.objects.empty());
  EXPECT_TRUE(scene.bundle.boxes.empty());
  for (auto s : *f.gt_semantic) EXPECT_EQ(s, 0);
  for (auto s : *f.gt_instance) EXPECT_EQ(s, 0);
  for (const auto& p : f.points) EXPECT_NEAR(p.z, -scene.sensor_origin.z(), 1e-9);
}

TEST(Synth, PointsLieOnSurfacesWithinJitter) {
  SceneConfig cfg;
  cfg.depth_jitter = 0.03;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    const auto scene = generate_scene(cfg);
    for (const auto& p : scene.bundle.frame.points) {
      const Eigen::Vector3d w = p.xyz() + scene.sensor_origin;
      double best = std::abs(w.z());
      for (const auto& o : scene.objects) best = std::min(best, std::abs(o.surface_distance(w)));
      ASSERT_LE(best, 3 * cfg.depth_jitter + 1e-9);
    }
  }
}

TEST(Synth, RangeImageDepthIsRayLength) {
  SceneConfig cfg;
  cfg.seed = 9;
  const auto scene = generate_scene(cfg);
  const auto& f = scene.bundle.frame;
  const auto img = build_range_image(f, f.num_beams, f.num_columns);
  for (std::size_t i = 0; i < f.size(); ++i) {
    ASSERT_EQ(img.point_cell[i], scene.ray_cell[i]);
    ASSERT_NEAR(img.at(scene.ray_cell[i].row, scene.ray_cell[i].col), scene.ray_length[i], 1e-5);
  }
}

TEST(Synth, IsolatedObjectsAreMostlyOneComponent) {
  // Grazing returns on roofs and cylinder silhouettes can leave a few points
  // beyond the class radius, so the check is on the largest component's share.
  double worst = 1.0, total = 0.0;
  int count = 0;
  for (int cls = 1; cls <= 3; ++cls) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto scene = generate_scene(single(cls, 100 + seed, SceneConfig::dense()));
      std::vector<Eigen::Vector3d> pts;
      const auto& f = scene.bundle.frame;
      for (std::size_t i = 0; i < f.size(); ++i) {
        if ((*f.gt_instance)[i] == 1) pts.push_back(f.points[i].xyz());
      }
      if (pts.size() < 10) continue;
      const auto c = ccl_cluster(pts, ClassRadii{}.for_class(cls));
      const double share = static_cast<double>(*std::max_element(c.sizes.begin(), c.sizes.end())) /
                           static_cast<double>(pts.size());
      worst = std::min(worst, share);
      total += share;
      ++count;
    }
  }
  ASSERT_GT(count, 20);
  EXPECT_GE(total / count, 0.95);
  EXPECT_GE(worst, 0.8);
}

TEST(Synth, ConfigJsonRoundTrip) {
  auto cfg = SceneConfig::dense();
  cfg.seed = 77;
  cfg.objects[1].max_count = 5;
  const auto back = scene_config_from_json(scene_config_to_json(cfg));
  EXPECT_EQ(scene_config_to_json(back), scene_config_to_json(cfg));
  EXPECT_EQ(back.beams, 64);
  EXPECT_EQ(back.objects[1].max_count, 5);
}

TEST(Synth, InvalidConfigsThrow) {
  SceneConfig cfg;
  cfg.beams = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SceneConfig{};
  cfg.objects[0].distance = {10, 5};
  EXPECT_THROW(generate_scene(cfg), ConfigError);
  cfg = SceneConfig{};
  cfg.depth_jitter = -1;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(FabricateScores, ZeroSigmaIsOneHot) {
  SceneConfig cfg;
  cfg.seed = 3;
  const auto scene = generate_scene(cfg);
  const auto& f = scene.bundle.frame;
  const auto s = fabricate_scores(f, 0.0, 1, 1);
  ASSERT_EQ(s.num_points(), f.size());
  ASSERT_EQ(s.num_classes(), 3u);
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      ASSERT_EQ(s.at(i, c), (*f.gt_semantic)[i] == static_cast<std::int32_t>(c + 1) ? 1.0 : 0.0);
    }
  }
}

TEST(FabricateScores, DeterministicPerSeedAndEpoch) {
  SceneConfig cfg;
  cfg.seed = 4;
  const auto& f = generate_scene(cfg).bundle.frame;
  const auto a = fabricate_scores(f, 0.2, 10, 1);
  const auto b = fabricate_scores(f, 0.2, 10, 1);
  const auto c = fabricate_scores(f, 0.2, 11, 1);
  const auto d = fabricate_scores(f, 0.2, 10, 2);
  EXPECT_TRUE(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  EXPECT_EQ(c.values().size(), a.values().size());
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), c.values().begin()));
  EXPECT_FALSE(std::equal(a.values().begin(), a.values().end(), d.values().begin()));
  EXPECT_NO_THROW(a.validate());
}

TEST(FabricateScores, RequiresGroundTruthAndValidSigma) {
  Frame f = test::frame_from({{1, 0, 0}});
  EXPECT_THROW(fabricate_scores(f, 0.1, 0, 1), ArgumentError);
  f.gt_semantic = std::vector<std::int32_t>{0};
  EXPECT_THROW(fabricate_scores(f, -0.1, 0, 1), ArgumentError);
}

TEST(FabricateScores, NoiselessVotesRecoverGroundTruthInFrustums) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneConfig cfg;
    cfg.seed = seed;
    const auto scene = generate_scene(cfg);
    const auto& b = scene.bundle;
    const auto& f = b.frame;
    const auto assign = crop_frustum(project_points(b.calib, f), b.boxes);
    VoteBuffer buf(4, 1);
    for (int e = 1; e <= 4; ++e) buf.record_epoch(f.frame_id, foreground_scores(fabricate_scores(f, 0.0, seed, e)));
    buf.set_current_epoch(4);
    const auto labels = frustum_labels(assign, b.boxes);
    const auto out = vote_correct(buf, PvcConfig{}, labels, f.frame_id, assign, b.boxes);
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (assign[i] == 0) continue;
      const auto gt = (*f.gt_semantic)[i];
      const auto box_class = find_box(b.boxes, assign[i])->class_id;
      // Points of another class seen through the box take the box class.
      if (gt == 0 || gt == box_class) {
        ASSERT_EQ(out.semantic[i], gt);
      } else {
        ASSERT_EQ(out.semantic[i], box_class);
      }
    }
  }
}

}  // namespace
}  // namespace wlf
