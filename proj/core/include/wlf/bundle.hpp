#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wlf/frame.hpp"
#include "wlf/labels.hpp"

namespace wlf {

// A frame bundle directory:
//   manifest.json    frame id, counts, dtypes, class names
//   points.f32       N x 4 float32 (x, y, z, intensity)
//   beam_row.u16     N uint16
//   gt_semantic.i32  N int32 (optional)
//   gt_instance.i32  N int32 (optional)
//   calib.json       intrinsic / extrinsic / image size
//   boxes.json       2D box annotations
// Pseudo labels live beside them as sem.i32 / inst.i32.
struct FrameBundle {
  Frame frame;
  Calibration calib;
  std::vector<Box2D> boxes;
  std::vector<std::string> class_names = default_class_names();
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kSemanticLabelFile = "sem.i32";
inline constexpr const char* kInstanceLabelFile = "inst.i32";

FrameBundle read_bundle(const std::filesystem::path& dir);
void write_bundle(const std::filesystem::path& dir, const FrameBundle& bundle);

bool has_labels(const std::filesystem::path& dir);
PseudoLabels read_labels(const std::filesystem::path& dir, std::size_t num_points);
void write_labels(const std::filesystem::path& dir, const PseudoLabels& labels);

nlohmann::json calibration_to_json(const Calibration& calib);
Calibration calibration_from_json(const nlohmann::json& j);
nlohmann::json boxes_to_json(const std::vector<Box2D>& boxes);
std::vector<Box2D> boxes_from_json(const nlohmann::json& j);

}  // namespace wlf
