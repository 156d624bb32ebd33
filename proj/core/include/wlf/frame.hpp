#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace wlf {

// Semantic class codes shared by every module. Class 0 is background and
// foreground classes are 1..kNumClasses. kIgnoreLabel marks points that
// should be excluded from supervision and metrics.
inline constexpr std::int32_t kIgnoreLabel = -1;
inline constexpr std::int32_t kBackgroundClass = 0;
inline constexpr std::int32_t kVehicleClass = 1;
inline constexpr std::int32_t kPedestrianClass = 2;
inline constexpr std::int32_t kCyclistClass = 3;
inline constexpr int kNumClasses = 3;

const std::vector<std::string>& default_class_names();

struct LidarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double intensity = 0.0;

  Eigen::Vector3d xyz() const { return {x, y, z}; }
  double range() const { return xyz().norm(); }
};

// One LiDAR sweep in the sensor frame (sensor at the origin). `beam_row`
// holds the laser index of each return; `num_beams` x `num_columns` is the
// nominal range-image resolution of the sensor.
struct Frame {
  std::string frame_id;
  std::vector<LidarPoint> points;
  std::vector<std::uint16_t> beam_row;
  int num_beams = 0;
  int num_columns = 0;
  std::optional<std::vector<std::int32_t>> gt_semantic;
  std::optional<std::vector<std::int32_t>> gt_instance;

  std::size_t size() const { return points.size(); }
  bool has_ground_truth() const { return gt_semantic.has_value() && gt_instance.has_value(); }
  std::vector<Eigen::Vector3d> positions() const;
};

// Throws InvalidFrameError on non-finite coordinates, out-of-range beam
// rows, or ground-truth arrays of the wrong length.
void validate_frame(const Frame& frame);

struct ImageSize {
  int width = 0;
  int height = 0;
};

struct Calibration {
  Eigen::Matrix3d intrinsic = Eigen::Matrix3d::Identity();
  // Rigid LiDAR -> camera transform.
  Eigen::Matrix4d extrinsic = Eigen::Matrix4d::Identity();
  ImageSize image_size;
};

// Throws ConfigError unless the intrinsic is upper-triangular with positive
// focal lengths and the extrinsic rotation block is orthonormal.
void validate_calibration(const Calibration& calib);

struct PixelBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  // Half-open containment: [min, max) on both axes.
  bool contains(double u, double v) const {
    return u >= x_min && u < x_max && v >= y_min && v < y_max;
  }
};

struct Box2D {
  std::int32_t box_id = 0;    // 1..N_box
  std::int32_t class_id = 0;  // 1..N_cls
  PixelBox bounds;
};

// Boxes must be well formed, lie inside the image extended by 1 px, and
// carry unique ids. Throws ConfigError otherwise.
void validate_boxes(std::span<const Box2D> boxes, ImageSize image, int num_classes = kNumClasses);

const Box2D* find_box(std::span<const Box2D> boxes, std::int32_t box_id);

struct ProjectedPoints {
  std::vector<Eigen::Vector2d> pixels;  // (u, v); NaN when behind the camera
  std::vector<double> depth;            // camera-frame Z
  std::vector<std::uint8_t> valid;

  std::size_t size() const { return valid.size(); }
};

Eigen::Vector3d lidar_to_camera(const Calibration& calib, const Eigen::Vector3d& point);

// Pinhole projection of every point. Points behind the camera or outside the
// image are marked invalid. Throws InvalidFrameError on non-finite input.
ProjectedPoints project_points(const Calibration& calib, const Frame& frame);

// Inverse of project_points for a single pixel at camera depth `depth`;
// returns the LiDAR-frame point.
Eigen::Vector3d back_project(const Calibration& calib, const Eigen::Vector2d& pixel, double depth);

// Per-point box id (0 = outside every box or not projectable). Overlaps go
// to the smallest box by area, then the smallest box id.
std::vector<std::int32_t> crop_frustum(const ProjectedPoints& proj, std::span<const Box2D> boxes);

}  // namespace wlf
