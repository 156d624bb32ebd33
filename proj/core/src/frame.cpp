#include "wlf/frame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include <Eigen/Dense>

#include "wlf/error.hpp"

namespace wlf {

const std::vector<std::string>& default_class_names() {
  static const std::vector<std::string> names{"background", "vehicle", "pedestrian", "cyclist"};
  return names;
}

std::vector<Eigen::Vector3d> Frame::positions() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back(p.xyz());
  }
  return out;
}

void validate_frame(const Frame& frame) {
  const std::size_t n = frame.size();
  if (frame.beam_row.size() != n) {
    throw InvalidFrameError("frame " + frame.frame_id + ": beam_row has " +
                            std::to_string(frame.beam_row.size()) + " entries for " +
                            std::to_string(n) + " points");
  }
  if (frame.num_beams <= 0 || frame.num_columns <= 0) {
    throw InvalidFrameError("frame " + frame.frame_id + ": non-positive range image size");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = frame.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity)) {
      throw InvalidFrameError("frame " + frame.frame_id + ": non-finite point " + std::to_string(i));
    }
    if (frame.beam_row[i] >= frame.num_beams) {
      throw InvalidFrameError("frame " + frame.frame_id + ": beam row " +
                              std::to_string(frame.beam_row[i]) + " >= " +
                              std::to_string(frame.num_beams));
    }
  }
  if (frame.gt_semantic && frame.gt_semantic->size() != n) {
    throw InvalidFrameError("frame " + frame.frame_id + ": gt_semantic length mismatch");
  }
  if (frame.gt_instance && frame.gt_instance->size() != n) {
    throw InvalidFrameError("frame " + frame.frame_id + ": gt_instance length mismatch");
  }
}

void validate_calibration(const Calibration& calib) {
  const auto& k = calib.intrinsic;
  if (!k.allFinite() || !calib.extrinsic.allFinite()) {
    throw ConfigError("calibration has non-finite entries");
  }
  if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 || k(2, 2) != 1.0) {
    throw ConfigError("intrinsic must be upper-triangular with K[2][2] = 1");
  }
  if (k(0, 0) <= 0.0 || k(1, 1) <= 0.0) {
    throw ConfigError("intrinsic focal lengths must be positive");
  }
  const Eigen::Matrix3d r = calib.extrinsic.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Eigen::Matrix3d::Identity()).norm() >= 1e-9) {
    throw ConfigError("extrinsic rotation block is not orthonormal");
  }
  const Eigen::RowVector4d bottom = calib.extrinsic.row(3);
  if (bottom != Eigen::RowVector4d(0.0, 0.0, 0.0, 1.0)) {
    throw ConfigError("extrinsic bottom row must be [0 0 0 1]");
  }
  if (calib.image_size.width <= 0 || calib.image_size.height <= 0) {
    throw ConfigError("image size must be positive");
  }
}

void validate_boxes(std::span<const Box2D> boxes, ImageSize image, int num_classes) {
  constexpr double kTolerance = 1.0;
  std::set<std::int32_t> ids;
  for (const auto& b : boxes) {
    const auto& r = b.bounds;
    const std::string tag = "box " + std::to_string(b.box_id);
    if (b.box_id < 1) {
      throw ConfigError(tag + ": box ids start at 1");
    }
    if (!ids.insert(b.box_id).second) {
      throw ConfigError(tag + ": duplicate box id");
    }
    if (b.class_id < 1 || b.class_id > num_classes) {
      throw ConfigError(tag + ": class " + std::to_string(b.class_id) + " out of range");
    }
    if (!(r.x_min < r.x_max) || !(r.y_min < r.y_max)) {
      throw ConfigError(tag + ": degenerate bounds");
    }
    if (r.x_min < -kTolerance || r.y_min < -kTolerance || r.x_max > image.width + kTolerance ||
        r.y_max > image.height + kTolerance) {
      throw ConfigError(tag + ": bounds outside the image");
    }
  }
}

const Box2D* find_box(std::span<const Box2D> boxes, std::int32_t box_id) {
  for (const auto& b : boxes) {
    if (b.box_id == box_id) {
      return &b;
    }
  }
  return nullptr;
}

Eigen::Vector3d lidar_to_camera(const Calibration& calib, const Eigen::Vector3d& point) {
  return calib.extrinsic.topLeftCorner<3, 3>() * point + calib.extrinsic.topRightCorner<3, 1>();
}

ProjectedPoints project_points(const Calibration& calib, const Frame& frame) {
  const std::size_t n = frame.size();
  ProjectedPoints out;
  out.pixels.resize(n);
  out.depth.resize(n);
  out.valid.assign(n, 0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double w = calib.image_size.width;
  const double h = calib.image_size.height;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = frame.points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw InvalidFrameError("frame " + frame.frame_id + ": non-finite point " + std::to_string(i));
    }
    const Eigen::Vector3d cam = lidar_to_camera(calib, p.xyz());
    out.depth[i] = cam.z();
    if (cam.z() <= 0.0) {
      out.pixels[i] = {nan, nan};
      continue;
    }
    const Eigen::Vector3d uvw = calib.intrinsic * (cam / cam.z());
    out.pixels[i] = uvw.head<2>();
    const double u = uvw.x();
    const double v = uvw.y();
    out.valid[i] = (u >= 0.0 && u < w && v >= 0.0 && v < h) ? 1 : 0;
  }
  return out;
}

Eigen::Vector3d back_project(const Calibration& calib, const Eigen::Vector2d& pixel, double depth) {
  const Eigen::Vector3d ray = calib.intrinsic.triangularView<Eigen::Upper>().solve(
      Eigen::Vector3d(pixel.x(), pixel.y(), 1.0));
  const Eigen::Vector3d cam = ray * depth;
  const Eigen::Matrix3d r = calib.extrinsic.topLeftCorner<3, 3>();
  const Eigen::Vector3d t = calib.extrinsic.topRightCorner<3, 1>();
  return r.transpose() * (cam - t);
}

std::vector<std::int32_t> crop_frustum(const ProjectedPoints& proj, std::span<const Box2D> boxes) {
  // Most specific box first so the first hit wins.
  std::vector<const Box2D*> order;
  order.reserve(boxes.size());
  for (const auto& b : boxes) {
    order.push_back(&b);
  }
  std::sort(order.begin(), order.end(), [](const Box2D* a, const Box2D* b) {
    if (a->bounds.area() != b->bounds.area()) {
      return a->bounds.area() < b->bounds.area();
    }
    return a->box_id < b->box_id;
  });

  std::vector<std::int32_t> assign(proj.size(), 0);
  for (std::size_t i = 0; i < proj.size(); ++i) {
    if (!proj.valid[i]) {
      continue;
    }
    const auto& px = proj.pixels[i];
    for (const Box2D* b : order) {
      if (b->bounds.contains(px.x(), px.y())) {
        assign[i] = b->box_id;
        break;
      }
    }
  }
  return assign;
}

}  // namespace wlf
