#include "wlf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "wlf/error.hpp"

using nlohmann::json;

namespace wlf {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRayEpsilon = 1e-9;

double uniform(std::mt19937_64& rng, const ValueRange& r) {
  if (r.hi <= r.lo) {
    return r.lo;
  }
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

// Distance of a point (in the primitive's local frame) to a 2D/3D box of
// half-extents `half` centred at the origin.
double box_sdf(const Eigen::Vector3d& q, const Eigen::Vector3d& half) {
  const Eigen::Vector3d d = q.cwiseAbs() - half;
  const double outside = d.cwiseMax(0.0).norm();
  const double inside = std::min(d.maxCoeff(), 0.0);
  return outside + inside;
}

json range_json(const ValueRange& r) { return json::array({r.lo, r.hi}); }

ValueRange range_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json spec_json(const ObjectClassSpec& spec) {
  return {{"count", {spec.min_count, spec.max_count}},
          {"distance", range_json(spec.distance)},
          {"length", range_json(spec.length)},
          {"width", range_json(spec.width)},
          {"height", range_json(spec.height)},
          {"clearance", range_json(spec.clearance)}};
}

void read_spec(const json& o, ObjectClassSpec& spec) {
  if (o.contains("count")) {
    spec.min_count = o["count"].at(0).get<int>();
    spec.max_count = o["count"].at(1).get<int>();
  }
  if (o.contains("distance")) spec.distance = range_from(o["distance"]);
  if (o.contains("length")) spec.length = range_from(o["length"]);
  if (o.contains("width")) spec.width = range_from(o["width"]);
  if (o.contains("height")) spec.height = range_from(o["height"]);
  if (o.contains("clearance")) spec.clearance = range_from(o["clearance"]);
}

void check_range(const ValueRange& r, const char* what) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw ConfigError(std::string("scene range '") + what + "' is not well ordered");
  }
}

Calibration scene_calibration(const SceneConfig& cfg) {
  Calibration calib;
  calib.intrinsic << cfg.focal_length, 0.0, cfg.image_width / 2.0, 0.0, cfg.focal_length,
      cfg.image_height / 2.0, 0.0, 0.0, 1.0;
  // Sensor axes (x forward, y left, z up) to camera axes (x right, y down,
  // z forward).
  Eigen::Matrix3d r;
  r << 0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0;
  calib.extrinsic.setIdentity();
  calib.extrinsic.topLeftCorner<3, 3>() = r;
  calib.extrinsic.topRightCorner<3, 1>() = -r * cfg.camera_offset;
  calib.image_size = {cfg.image_width, cfg.image_height};
  return calib;
}

double footprint_radius(const SceneObject& o) {
  if (o.primitive == Primitive::kCylinder) {
    return o.width / 2.0;
  }
  return 0.5 * std::hypot(o.length, o.width);
}

// Signed ground-plane distance from (x, y) to the object's footprint.
double footprint_sdf(const SceneObject& o, double x, double y) {
  const double dx = x - o.cx;
  const double dy = y - o.cy;
  if (o.primitive == Primitive::kCylinder) {
    return std::hypot(dx, dy) - o.width / 2.0;
  }
  const double c = std::cos(o.yaw);
  const double s = std::sin(o.yaw);
  const Eigen::Vector3d q(c * dx + s * dy, -s * dx + c * dy, 0.0);
  return box_sdf(q, {o.length / 2.0, o.width / 2.0, 0.0});
}

// Lower bound on the gap between two footprints.
double footprint_gap(const SceneObject& a, const SceneObject& b) {
  return std::max(footprint_sdf(a, b.cx, b.cy) - footprint_radius(b),
                  footprint_sdf(b, a.cx, a.cy) - footprint_radius(a));
}

void sample_size(const ObjectClassSpec& spec, std::mt19937_64& rng, SceneObject& o) {
  o.length = uniform(rng, spec.length);
  o.width = uniform(rng, spec.width);
  o.height = uniform(rng, spec.height);
  o.base = uniform(rng, spec.clearance);
  if (o.primitive == Primitive::kCylinder) {
    o.length = o.width;
  }
}

std::vector<SceneObject> sample_objects(const SceneConfig& cfg, std::mt19937_64& rng) {
  constexpr int kAttempts = 50;
  constexpr double kClearance = 0.3;
  constexpr double kMinSensorDistance = 3.0;
  const double spread = cfg.azimuth_spread_deg * kDegToRad;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<SceneObject> objects;
  auto fits = [&](const SceneObject& o) {
    return std::all_of(objects.begin(), objects.end(), [&](const SceneObject& other) {
      return footprint_gap(o, other) > kClearance;
    });
  };

  // Background structures first; foreground objects must avoid them.
  for (const auto* spec : {&cfg.walls, &cfg.poles}) {
    const bool wall = spec == &cfg.walls;
    const int count = std::uniform_int_distribution<int>(spec->min_count, spec->max_count)(rng);
    for (int k = 0; k < count; ++k) {
      SceneObject o;
      o.class_id = kBackgroundClass;
      o.primitive = wall ? Primitive::kCuboid : Primitive::kCylinder;
      sample_size(*spec, rng, o);
      for (int attempt = 0; attempt < kAttempts; ++attempt) {
        const double az = (2.0 * unit(rng) - 1.0) * spread;
        const double dist = uniform(rng, spec->distance);
        o.cx = dist * std::cos(az);
        o.cy = dist * std::sin(az);
        o.yaw = wall ? az + std::numbers::pi / 2.0 + (unit(rng) - 0.5) * 0.5 : 0.0;
        if (footprint_sdf(o, 0.0, 0.0) > kMinSensorDistance && fits(o)) {
          objects.push_back(o);
          break;
        }
      }
    }
  }

  std::vector<std::int32_t> classes;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& spec = cfg.objects[static_cast<std::size_t>(c)];
    const int count = std::uniform_int_distribution<int>(spec.min_count, spec.max_count)(rng);
    for (int k = 0; k < count; ++k) {
      classes.push_back(c + 1);
    }
  }
  std::shuffle(classes.begin(), classes.end(), rng);
  if (classes.size() > static_cast<std::size_t>(cfg.max_objects)) {
    classes.resize(static_cast<std::size_t>(cfg.max_objects));
  }

  std::vector<double> azimuths;
  std::vector<double> distances;
  for (std::int32_t cls : classes) {
    const auto& spec = cfg.objects[static_cast<std::size_t>(cls - 1)];
    SceneObject o;
    o.class_id = cls;
    o.primitive = cls == kVehicleClass ? Primitive::kCuboid : Primitive::kCylinder;
    sample_size(spec, rng, o);
    o.yaw = unit(rng) * std::numbers::pi;

    bool placed = false;
    for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
      double az = 0.0;
      double dist = 0.0;
      if (!azimuths.empty() && unit(rng) < cfg.occlusion_fraction) {
        const auto k = std::uniform_int_distribution<std::size_t>(0, azimuths.size() - 1)(rng);
        az = azimuths[k] + (unit(rng) - 0.5) * 4.0 * kDegToRad;
        dist = distances[k] + 3.0 + 7.0 * unit(rng);
      } else {
        az = (2.0 * unit(rng) - 1.0) * spread;
        dist = uniform(rng, spec.distance);
      }
      o.cx = dist * std::cos(az);
      o.cy = dist * std::sin(az);
      // Keep the whole footprint inside the azimuth spread so the camera
      // sees the full object.
      const double rad = footprint_radius(o);
      if (dist - rad < kMinSensorDistance || dist + rad > cfg.max_range ||
          std::abs(az) + std::asin(rad / dist) > spread) {
        continue;
      }
      placed = fits(o);
      if (placed) {
        azimuths.push_back(az);
        distances.push_back(dist);
      }
    }
    if (placed) {
      objects.push_back(o);
    }
  }
  return objects;
}

}  // namespace

SceneConfig SceneConfig::dense() {
  SceneConfig cfg;
  cfg.beams = 64;
  cfg.columns = 2048;
  cfg.vfov_min_deg = -17.6;
  cfg.vfov_max_deg = 2.4;
  cfg.sensor_height = 2.0;
  cfg.max_range = 75.0;
  cfg.occlusion_fraction = 0.4;
  cfg.depth_jitter = 0.01;
  return cfg;
}

void SceneConfig::validate() const {
  if (beams < 1 || columns < 1 || beams > 65535) {
    throw ConfigError("scene beams/columns out of range");
  }
  if (!(vfov_min_deg <= vfov_max_deg) || vfov_min_deg < -90.0 || vfov_max_deg > 90.0) {
    throw ConfigError("scene vertical field of view is not well ordered");
  }
  if (!(sensor_height > 0.0) || !(max_range > 0.0)) {
    throw ConfigError("sensor height and max range must be positive");
  }
  if (!(depth_jitter >= 0.0) || !(score_sigma >= 0.0)) {
    throw ConfigError("noise sigmas must be non-negative");
  }
  if (!(occlusion_fraction >= 0.0 && occlusion_fraction <= 1.0)) {
    throw ConfigError("occlusion_fraction must lie in [0, 1]");
  }
  if (max_objects < 0 || image_width < 1 || image_height < 1 || !(focal_length > 0.0)) {
    throw ConfigError("scene camera or object limits out of range");
  }
  for (const auto* spec_ptr : {&objects[0], &objects[1], &objects[2], &walls, &poles}) {
    const auto& spec = *spec_ptr;
    if (spec.min_count < 0 || spec.min_count > spec.max_count) {
      throw ConfigError("object count range is not well ordered");
    }
    check_range(spec.distance, "distance");
    check_range(spec.length, "length");
    check_range(spec.width, "width");
    check_range(spec.height, "height");
    check_range(spec.clearance, "clearance");
    if (spec.clearance.lo < 0.0 || spec.clearance.hi >= spec.height.lo) {
      throw ConfigError("object clearance must lie in [0, height)");
    }
    if (!(spec.width.lo > 0.0) || !(spec.height.lo > 0.0) || !(spec.length.lo > 0.0)) {
      throw ConfigError("object sizes must be positive");
    }
  }
}

json scene_config_to_json(const SceneConfig& cfg) {
  json objects = json::array();
  for (const auto& spec : cfg.objects) {
    objects.push_back(spec_json(spec));
  }
  return json{{"seed", cfg.seed},
              {"beams", cfg.beams},
              {"columns", cfg.columns},
              {"vfov_deg", {cfg.vfov_min_deg, cfg.vfov_max_deg}},
              {"sensor_height", cfg.sensor_height},
              {"max_range", cfg.max_range},
              {"azimuth_spread_deg", cfg.azimuth_spread_deg},
              {"max_objects", cfg.max_objects},
              {"occlusion_fraction", cfg.occlusion_fraction},
              {"depth_jitter", cfg.depth_jitter},
              {"score_sigma", cfg.score_sigma},
              {"image_size", {cfg.image_width, cfg.image_height}},
              {"focal_length", cfg.focal_length},
              {"camera_offset", {cfg.camera_offset.x(), cfg.camera_offset.y(), cfg.camera_offset.z()}},
              {"objects", objects},
              {"walls", spec_json(cfg.walls)},
              {"poles", spec_json(cfg.poles)}};
}

SceneConfig scene_config_from_json(const json& j) {
  SceneConfig cfg;
  if (j.value("preset", std::string()) == "dense") {
    cfg = SceneConfig::dense();
  }
  try {
    cfg.seed = j.value("seed", cfg.seed);
    cfg.beams = j.value("beams", cfg.beams);
    cfg.columns = j.value("columns", cfg.columns);
    if (j.contains("vfov_deg")) {
      cfg.vfov_min_deg = j["vfov_deg"].at(0).get<double>();
      cfg.vfov_max_deg = j["vfov_deg"].at(1).get<double>();
    }
    cfg.sensor_height = j.value("sensor_height", cfg.sensor_height);
    cfg.max_range = j.value("max_range", cfg.max_range);
    cfg.azimuth_spread_deg = j.value("azimuth_spread_deg", cfg.azimuth_spread_deg);
    cfg.max_objects = j.value("max_objects", cfg.max_objects);
    cfg.occlusion_fraction = j.value("occlusion_fraction", cfg.occlusion_fraction);
    cfg.depth_jitter = j.value("depth_jitter", cfg.depth_jitter);
    cfg.score_sigma = j.value("score_sigma", cfg.score_sigma);
    if (j.contains("image_size")) {
      cfg.image_width = j["image_size"].at(0).get<int>();
      cfg.image_height = j["image_size"].at(1).get<int>();
    }
    cfg.focal_length = j.value("focal_length", cfg.focal_length);
    if (j.contains("camera_offset")) {
      const auto& c = j["camera_offset"];
      cfg.camera_offset = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
    }
    if (j.contains("objects")) {
      const auto& arr = j["objects"];
      if (arr.size() != cfg.objects.size()) {
        throw ConfigError("scene 'objects' needs one entry per foreground class");
      }
      for (std::size_t c = 0; c < cfg.objects.size(); ++c) {
        read_spec(arr[c], cfg.objects[c]);
      }
    }
    if (j.contains("walls")) read_spec(j["walls"], cfg.walls);
    if (j.contains("poles")) read_spec(j["poles"], cfg.poles);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scene config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::optional<double> SceneObject::intersect(const Eigen::Vector3d& origin,
                                             const Eigen::Vector3d& dir) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  // Into the object frame: translate to the footprint centre, rotate by -yaw.
  const Eigen::Vector3d o0 = origin - Eigen::Vector3d(cx, cy, 0.0);
  const Eigen::Vector3d o(c * o0.x() + s * o0.y(), -s * o0.x() + c * o0.y(), o0.z());
  const Eigen::Vector3d d(c * dir.x() + s * dir.y(), -s * dir.x() + c * dir.y(), dir.z());

  if (primitive == Primitive::kCuboid) {
    const Eigen::Vector3d lo(-length / 2.0, -width / 2.0, base);
    const Eigen::Vector3d hi(length / 2.0, width / 2.0, height);
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
      if (std::abs(d[a]) < 1e-15) {
        if (o[a] < lo[a] || o[a] > hi[a]) {
          return std::nullopt;
        }
        continue;
      }
      double t0 = (lo[a] - o[a]) / d[a];
      double t1 = (hi[a] - o[a]) / d[a];
      if (t0 > t1) {
        std::swap(t0, t1);
      }
      t_near = std::max(t_near, t0);
      t_far = std::min(t_far, t1);
    }
    if (t_near > t_far || t_near <= kRayEpsilon) {
      return std::nullopt;
    }
    return t_near;
  }

  const double r = width / 2.0;
  std::optional<double> best;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-15) {
    const double b = 2.0 * (o.x() * d.x() + o.y() * d.y());
    const double cc = o.x() * o.x() + o.y() * o.y() - r * r;
    const double disc = b * b - 4.0 * a * cc;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / (2.0 * a);
      const double z = o.z() + t * d.z();
      if (t > kRayEpsilon && z >= base && z <= height) {
        best = t;
      }
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    for (double cap : {height, base}) {
      const double t = (cap - o.z()) / d.z();
      const Eigen::Vector3d p = o + t * d;
      if (t > kRayEpsilon && p.x() * p.x() + p.y() * p.y() <= r * r && (!best || t < *best)) {
        best = t;
      }
    }
  }
  return best;
}

double SceneObject::surface_distance(const Eigen::Vector3d& p) const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double half_h = (height - base) / 2.0;
  const Eigen::Vector3d q0 = p - Eigen::Vector3d(cx, cy, base + half_h);
  if (primitive == Primitive::kCuboid) {
    const Eigen::Vector3d q(c * q0.x() + s * q0.y(), -s * q0.x() + c * q0.y(), q0.z());
    return std::abs(box_sdf(q, {length / 2.0, width / 2.0, half_h}));
  }
  const double dr = std::hypot(q0.x(), q0.y()) - width / 2.0;
  const double dz = std::abs(q0.z()) - half_h;
  const double outside = std::hypot(std::max(dr, 0.0), std::max(dz, 0.0));
  const double inside = std::min(std::max(dr, dz), 0.0);
  return std::abs(outside + inside);
}

SyntheticScene generate_scene(const SceneConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  SyntheticScene scene;
  scene.objects = sample_objects(cfg, rng);
  scene.sensor_origin = {0.0, 0.0, cfg.sensor_height};

  Frame& frame = scene.bundle.frame;
  frame.frame_id = "synth_" + std::to_string(cfg.seed);
  frame.num_beams = cfg.beams;
  frame.num_columns = cfg.columns;
  std::vector<std::int32_t> gt_sem;
  std::vector<std::int32_t> gt_obj;  // index into scene.objects, -1 for ground

  std::normal_distribution<double> jitter(0.0, std::max(cfg.depth_jitter, 1e-12));
  const Eigen::Vector3d& origin = scene.sensor_origin;
  for (int row = 0; row < cfg.beams; ++row) {
    const double elev_deg =
        cfg.beams == 1 ? 0.5 * (cfg.vfov_min_deg + cfg.vfov_max_deg)
                       : cfg.vfov_max_deg - (cfg.vfov_max_deg - cfg.vfov_min_deg) * row /
                                                (cfg.beams - 1);
    const double elev = elev_deg * kDegToRad;
    for (int col = 0; col < cfg.columns; ++col) {
      const double az = (col + 0.5) / cfg.columns * 2.0 * std::numbers::pi - std::numbers::pi;
      const Eigen::Vector3d dir(std::cos(elev) * std::cos(az), std::cos(elev) * std::sin(az),
                                std::sin(elev));
      double t_hit = std::numeric_limits<double>::infinity();
      int hit = -1;
      if (dir.z() < 0.0) {
        t_hit = -origin.z() / dir.z();
      }
      for (std::size_t k = 0; k < scene.objects.size(); ++k) {
        const auto t = scene.objects[k].intersect(origin, dir);
        if (t && *t < t_hit) {
          t_hit = *t;
          hit = static_cast<int>(k);
        }
      }
      if (!(t_hit <= cfg.max_range)) {
        continue;
      }
      double t = t_hit;
      if (cfg.depth_jitter > 0.0) {
        const double bound = 3.0 * cfg.depth_jitter;
        t += std::clamp(jitter(rng), -bound, bound);
      }
      const Eigen::Vector3d p = dir * t;
      frame.points.push_back({p.x(), p.y(), p.z(), hit >= 0 ? 0.5 : 0.2});
      frame.beam_row.push_back(static_cast<std::uint16_t>(row));
      scene.ray_length.push_back(t_hit);
      scene.ray_cell.push_back({row, col});
      gt_obj.push_back(hit);
      gt_sem.push_back(hit >= 0 ? scene.objects[static_cast<std::size_t>(hit)].class_id
                                : kBackgroundClass);
    }
  }

  // Instance ids in object order, only for objects that were hit.
  std::vector<std::size_t> hits(scene.objects.size(), 0);
  for (int k : gt_obj) {
    if (k >= 0) {
      ++hits[static_cast<std::size_t>(k)];
    }
  }
  std::int32_t next_instance = 1;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const bool foreground = scene.objects[k].class_id != kBackgroundClass;
    scene.objects[k].instance_id = foreground && hits[k] > 0 ? next_instance++ : 0;
  }
  std::vector<std::int32_t> gt_inst(gt_obj.size(), 0);
  for (std::size_t i = 0; i < gt_obj.size(); ++i) {
    if (gt_obj[i] >= 0) {
      // Background structures keep instance 0.
      gt_inst[i] = scene.objects[static_cast<std::size_t>(gt_obj[i])].instance_id;
    }
  }
  frame.gt_semantic = std::move(gt_sem);
  frame.gt_instance = std::move(gt_inst);

  scene.bundle.calib = scene_calibration(cfg);
  const ProjectedPoints proj = project_points(scene.bundle.calib, frame);

  // Tight integer pixel bounds of each object's projected returns.
  std::int32_t next_box = 1;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    if (scene.objects[k].instance_id == 0) {
      continue;
    }
    double u0 = std::numeric_limits<double>::infinity();
    double v0 = u0;
    double u1 = -u0;
    double v1 = -u0;
    for (std::size_t i = 0; i < gt_obj.size(); ++i) {
      if (gt_obj[i] != static_cast<int>(k) || !proj.valid[i]) {
        continue;
      }
      u0 = std::min(u0, proj.pixels[i].x());
      v0 = std::min(v0, proj.pixels[i].y());
      u1 = std::max(u1, proj.pixels[i].x());
      v1 = std::max(v1, proj.pixels[i].y());
    }
    if (!std::isfinite(u0)) {
      continue;
    }
    Box2D box;
    box.box_id = next_box++;
    box.class_id = scene.objects[k].class_id;
    box.bounds = {std::floor(u0), std::floor(v0),
                  std::min(std::floor(u1) + 1.0, static_cast<double>(cfg.image_width)),
                  std::min(std::floor(v1) + 1.0, static_cast<double>(cfg.image_height))};
    scene.bundle.boxes.push_back(box);
  }
  return scene;
}

PointScores fabricate_scores(const Frame& frame, double sigma, std::uint64_t seed, int epoch,
                             int num_classes) {
  if (!(sigma >= 0.0)) {
    throw ArgumentError("score sigma must be non-negative");
  }
  if (!frame.gt_semantic) {
    throw ArgumentError("frame " + frame.frame_id + " has no ground truth to fabricate scores from");
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, 1.0);
  PointScores scores(frame.size(), static_cast<std::size_t>(num_classes));
  const auto& gt = *frame.gt_semantic;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    for (int c = 0; c < num_classes; ++c) {
      const double one_hot = gt[i] == c + 1 ? 1.0 : 0.0;
      const double v = sigma > 0.0 ? one_hot + sigma * noise(rng) : one_hot;
      scores.at(i, static_cast<std::size_t>(c)) = std::clamp(v, 0.0, 1.0);
    }
  }
  return scores;
}

}  // namespace wlf
