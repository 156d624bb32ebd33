#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "wlf/bundle.hpp"
#include "wlf/frame.hpp"
#include "wlf/losses.hpp"
#include "wlf/range_image.hpp"

namespace wlf {

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;
};

// Placement and size ranges of one object class. Vehicles are cuboids
// (length x width x height); pedestrians and cyclists are vertical cylinders
// of diameter `width`.
struct ObjectClassSpec {
  int min_count = 0;
  int max_count = 0;
  ValueRange distance;  // ground distance from the sensor, metres
  ValueRange length;
  ValueRange width;
  ValueRange height;
  ValueRange clearance;  // gap between the ground and the primitive's underside
};

struct SceneConfig {
  std::uint64_t seed = 0;
  int beams = 32;
  int columns = 512;
  double vfov_min_deg = -25.0;
  double vfov_max_deg = 3.0;
  double sensor_height = 1.8;
  double max_range = 80.0;
  // Foreground footprints stay within +-azimuth_spread_deg of the camera axis.
  double azimuth_spread_deg = 35.0;
  int max_objects = 10;
  // Share of objects placed directly behind an earlier one.
  double occlusion_fraction = 0.3;
  // Gaussian range noise sigma, truncated at 3 sigma.
  double depth_jitter = 0.0;
  // Noise sigma for fabricated teacher scores.
  double score_sigma = 0.2;
  int image_width = 1280;
  int image_height = 720;
  double focal_length = 720.0;
  Eigen::Vector3d camera_offset{0.2, 0.0, -0.3};  // camera centre in the sensor frame
  std::array<ObjectClassSpec, kNumClasses> objects{{
      {1, 4, {6.0, 30.0}, {3.8, 5.0}, {1.7, 2.0}, {1.4, 1.8}, {0.15, 0.35}},
      {0, 3, {4.0, 15.0}, {0.5, 0.7}, {0.5, 0.7}, {1.5, 1.9}, {0.0, 0.0}},
      {0, 2, {4.0, 15.0}, {0.8, 1.0}, {0.8, 1.0}, {1.6, 1.9}, {0.0, 0.0}},
  }};
  // Background structures, labeled class 0. Walls are cuboids turned to face
  // the sensor; poles are thin cylinders. Counts do not use max_objects.
  ObjectClassSpec walls{1, 2, {30.0, 60.0}, {8.0, 25.0}, {0.3, 0.6}, {3.0, 8.0}, {0.0, 0.0}};
  ObjectClassSpec poles{0, 4, {5.0, 40.0}, {0.2, 0.4}, {0.2, 0.4}, {3.0, 6.0}, {0.0, 0.0}};

  // 64 x 2048 sweep over a narrow vertical field of view: point spacing fine
  // enough for the default class radii at the configured distances.
  static SceneConfig dense();

  void validate() const;
};

nlohmann::json scene_config_to_json(const SceneConfig& cfg);
SceneConfig scene_config_from_json(const nlohmann::json& j);

enum class Primitive { kCuboid, kCylinder };

// Scene object in the world frame; class 0 marks a background structure (ground plane z = 0, sensor at
// (0, 0, sensor_height)).
struct SceneObject {
  std::int32_t class_id = 0;
  std::int32_t instance_id = 0;  // 0 when the object received no return
  Primitive primitive = Primitive::kCuboid;
  double cx = 0.0;
  double cy = 0.0;
  double yaw = 0.0;
  double length = 0.0;
  double width = 0.0;
  double height = 0.0;  // top of the primitive above the ground
  double base = 0.0;    // underside above the ground

  // Ray parameter of the first hit along origin + t * dir (dir unit length).
  std::optional<double> intersect(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) const;
  // Distance from a world point to the object's surface.
  double surface_distance(const Eigen::Vector3d& p) const;
};

struct SyntheticScene {
  FrameBundle bundle;
  std::vector<SceneObject> objects;
  std::vector<double> ray_length;   // per point, noise-free hit distance
  std::vector<CellIndex> ray_cell;  // per point, (beam, column) of the ray
  Eigen::Vector3d sensor_origin = Eigen::Vector3d::Zero();  // world frame
};

// Ray-casts one sweep against the ground plane and the sampled objects.
// Deterministic in the config (including its seed).
SyntheticScene generate_scene(const SceneConfig& cfg);

// clamp(one_hot(gt) + N(0, sigma), 0, 1) over foreground classes.
// Background points have an all-zero one-hot. Deterministic in
// (seed, epoch). Requires ground truth on the frame.
PointScores fabricate_scores(const Frame& frame, double sigma, std::uint64_t seed, int epoch,
                             int num_classes = kNumClasses);

}  // namespace wlf
