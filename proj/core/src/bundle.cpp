#include "wlf/bundle.hpp"

#include <cstdint>

#include "wlf/binary_io.hpp"
#include "wlf/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wlf {
namespace {

constexpr const char* kPointsFile = "points.f32";
constexpr const char* kBeamRowFile = "beam_row.u16";
constexpr const char* kGtSemanticFile = "gt_semantic.i32";
constexpr const char* kGtInstanceFile = "gt_instance.i32";
constexpr const char* kCalibFile = "calib.json";
constexpr const char* kBoxesFile = "boxes.json";

json parse_json_file(const fs::path& path) {
  const std::string text = io::read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

json array_entry(const char* file, const char* dtype, std::vector<std::size_t> shape) {
  return json{{"file", file}, {"dtype", dtype}, {"shape", shape}};
}

}  // namespace

json calibration_to_json(const Calibration& calib) {
  json k = json::array();
  for (int r = 0; r < 3; ++r) {
    k.push_back({calib.intrinsic(r, 0), calib.intrinsic(r, 1), calib.intrinsic(r, 2)});
  }
  json e = json::array();
  for (int r = 0; r < 4; ++r) {
    e.push_back({calib.extrinsic(r, 0), calib.extrinsic(r, 1), calib.extrinsic(r, 2),
                 calib.extrinsic(r, 3)});
  }
  return json{{"intrinsic", k},
              {"extrinsic", e},
              {"image_size", {calib.image_size.width, calib.image_size.height}}};
}

Calibration calibration_from_json(const json& j) {
  Calibration calib;
  try {
    const auto& k = j.at("intrinsic");
    const auto& e = j.at("extrinsic");
    if (k.size() != 3 || e.size() != 4) {
      throw ConfigError("calibration matrices have the wrong shape");
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        calib.intrinsic(r, c) = k.at(r).at(c).get<double>();
      }
    }
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c) {
        calib.extrinsic(r, c) = e.at(r).at(c).get<double>();
      }
    }
    calib.image_size.width = j.at("image_size").at(0).get<int>();
    calib.image_size.height = j.at("image_size").at(1).get<int>();
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("malformed calibration: ") + ex.what());
  }
  validate_calibration(calib);
  return calib;
}

json boxes_to_json(const std::vector<Box2D>& boxes) {
  json out = json::array();
  for (const auto& b : boxes) {
    out.push_back({{"box_id", b.box_id},
                   {"class_id", b.class_id},
                   {"bounds", {b.bounds.x_min, b.bounds.y_min, b.bounds.x_max, b.bounds.y_max}}});
  }
  return out;
}

std::vector<Box2D> boxes_from_json(const json& j) {
  std::vector<Box2D> boxes;
  try {
    for (const auto& item : j) {
      Box2D b;
      b.box_id = item.at("box_id").get<std::int32_t>();
      b.class_id = item.at("class_id").get<std::int32_t>();
      const auto& r = item.at("bounds");
      b.bounds = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                  r.at(3).get<double>()};
      boxes.push_back(b);
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("malformed boxes: ") + ex.what());
  }
  return boxes;
}

void write_bundle(const fs::path& dir, const FrameBundle& bundle) {
  const Frame& f = bundle.frame;
  validate_frame(f);
  fs::create_directories(dir);
  const std::size_t n = f.size();

  std::vector<float> pts;
  pts.reserve(n * 4);
  for (const auto& p : f.points) {
    pts.insert(pts.end(), {static_cast<float>(p.x), static_cast<float>(p.y),
                           static_cast<float>(p.z), static_cast<float>(p.intensity)});
  }
  io::write_array<float>(dir / kPointsFile, pts);
  io::write_array<std::uint16_t>(dir / kBeamRowFile, f.beam_row);

  json arrays{{"points", array_entry(kPointsFile, "float32", {n, 4})},
              {"beam_row", array_entry(kBeamRowFile, "uint16", {n})}};
  if (f.gt_semantic) {
    io::write_array<std::int32_t>(dir / kGtSemanticFile, *f.gt_semantic);
    arrays["gt_semantic"] = array_entry(kGtSemanticFile, "int32", {n});
  }
  if (f.gt_instance) {
    io::write_array<std::int32_t>(dir / kGtInstanceFile, *f.gt_instance);
    arrays["gt_instance"] = array_entry(kGtInstanceFile, "int32", {n});
  }

  json manifest{{"frame_id", f.frame_id},
                {"num_points", n},
                {"num_beams", f.num_beams},
                {"num_columns", f.num_columns},
                {"num_boxes", bundle.boxes.size()},
                {"arrays", arrays},
                {"class_names", bundle.class_names},
                {"calibration", kCalibFile},
                {"boxes", kBoxesFile}};
  io::write_text(dir / kManifestFile, manifest.dump(2) + "\n");
  io::write_text(dir / kCalibFile, calibration_to_json(bundle.calib).dump(2) + "\n");
  io::write_text(dir / kBoxesFile, boxes_to_json(bundle.boxes).dump(2) + "\n");
}

FrameBundle read_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw InputError("bundle directory " + dir.string() + " does not exist");
  }
  if (!fs::exists(dir / kManifestFile)) {
    throw InputError(dir.string() + ": missing " + kManifestFile);
  }
  const json manifest = parse_json_file(dir / kManifestFile);

  FrameBundle bundle;
  Frame& f = bundle.frame;
  std::ptrdiff_t n = 0;
  json arrays;
  try {
    f.frame_id = manifest.at("frame_id").get<std::string>();
    n = manifest.at("num_points").get<std::ptrdiff_t>();
    f.num_beams = manifest.at("num_beams").get<int>();
    f.num_columns = manifest.at("num_columns").get<int>();
    arrays = manifest.at("arrays");
    if (manifest.contains("class_names")) {
      bundle.class_names = manifest.at("class_names").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(dir.string() + "/manifest.json: " + e.what());
  }

  const auto file_of = [&](const char* key, const char* fallback) -> fs::path {
    if (arrays.contains(key) && arrays[key].contains("file")) {
      return dir / arrays[key]["file"].get<std::string>();
    }
    return dir / fallback;
  };

  const auto pts = io::read_array<float>(file_of("points", kPointsFile), n * 4);
  f.points.resize(static_cast<std::size_t>(n));
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    f.points[i] = {pts[4 * i], pts[4 * i + 1], pts[4 * i + 2], pts[4 * i + 3]};
  }
  f.beam_row = io::read_array<std::uint16_t>(file_of("beam_row", kBeamRowFile), n);
  if (arrays.contains("gt_semantic")) {
    f.gt_semantic = io::read_array<std::int32_t>(file_of("gt_semantic", kGtSemanticFile), n);
  }
  if (arrays.contains("gt_instance")) {
    f.gt_instance = io::read_array<std::int32_t>(file_of("gt_instance", kGtInstanceFile), n);
  }
  validate_frame(f);

  const fs::path calib_path = dir / manifest.value("calibration", std::string(kCalibFile));
  const fs::path boxes_path = dir / manifest.value("boxes", std::string(kBoxesFile));
  bundle.calib = calibration_from_json(parse_json_file(calib_path));
  bundle.boxes = fs::exists(boxes_path) ? boxes_from_json(parse_json_file(boxes_path))
                                        : std::vector<Box2D>{};
  validate_boxes(bundle.boxes, bundle.calib.image_size,
                 static_cast<int>(bundle.class_names.size()) - 1);
  return bundle;
}

bool has_labels(const fs::path& dir) {
  return fs::exists(dir / kSemanticLabelFile) && fs::exists(dir / kInstanceLabelFile);
}

PseudoLabels read_labels(const fs::path& dir, std::size_t num_points) {
  PseudoLabels labels;
  const auto n = static_cast<std::ptrdiff_t>(num_points);
  labels.semantic = io::read_array<std::int32_t>(dir / kSemanticLabelFile, n);
  labels.instance = io::read_array<std::int32_t>(dir / kInstanceLabelFile, n);
  return labels;
}

void write_labels(const fs::path& dir, const PseudoLabels& labels) {
  fs::create_directories(dir);
  io::write_array<std::int32_t>(dir / kSemanticLabelFile, labels.semantic);
  io::write_array<std::int32_t>(dir / kInstanceLabelFile, labels.instance);
}

}  // namespace wlf
