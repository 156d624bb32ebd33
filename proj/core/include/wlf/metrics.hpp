#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wlf/frame.hpp"
#include "wlf/labels.hpp"

namespace wlf {

// IoU per foreground class (index = class id - 1). A class absent from both
// prediction and ground truth has no IoU and is left out of the mean.
struct IouResult {
  std::vector<std::optional<double>> per_class;
  std::optional<double> miou;
};

// Accumulates TP / FP / FN for classes 1..num_classes. Ground-truth ignore
// points are skipped. A predicted ignore or background on a class point is a
// miss for that class.
class ConfusionAccumulator {
 public:
  explicit ConfusionAccumulator(int num_classes = kNumClasses);

  void add(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt);
  IouResult result() const;

 private:
  int num_classes_;
  std::vector<std::uint64_t> tp_;
  std::vector<std::uint64_t> fp_;
  std::vector<std::uint64_t> fn_;
};

IouResult miou(std::span<const std::int32_t> pred, std::span<const std::int32_t> gt,
               int num_classes = kNumClasses);

// One instance as a sorted set of point indices.
struct InstanceMask {
  std::int32_t class_id = 0;
  std::vector<std::size_t> points;
  double score = 1.0;
};

double point_set_iou(std::span<const std::size_t> a, std::span<const std::size_t> b);

// 0.50, 0.55, ..., 0.95
const std::array<double, 10>& coco_iou_thresholds();

struct ApResult {
  std::vector<std::optional<double>> per_threshold;  // mean over classes with GT
  std::vector<std::optional<double>> per_class;      // mean over thresholds
  std::optional<double> ap;
  std::optional<double> ap50;
  std::optional<double> ap75;
};

// COCO-style instance AP over point sets. Each frame is matched on its own:
// predictions in descending score order (stable) take the unmatched
// ground truth of the same class with the highest IoU >= threshold. The
// precision/recall curve over all frames is read at 101 recall points.
class ApAccumulator {
 public:
  explicit ApAccumulator(int num_classes = kNumClasses);

  void add_frame(std::span<const InstanceMask> preds, std::span<const InstanceMask> gts);
  ApResult result() const;

 private:
  struct Detection {
    double score;
    std::size_t order;
    std::array<bool, 10> matched;
  };

  int num_classes_;
  std::size_t next_order_ = 0;
  std::vector<std::vector<Detection>> detections_;  // per class
  std::vector<std::size_t> num_gt_;                 // per class
};

ApResult instance_ap(std::span<const InstanceMask> preds, std::span<const InstanceMask> gts,
                     int num_classes = kNumClasses);

// Interpolated AP from a ranked list of TP flags: precision made monotone
// from the right, sampled at recall 0, 0.01, ..., 1.
double interpolated_ap(const std::vector<bool>& ranked_tp, std::size_t num_gt);

// Instances from pseudo labels. Points whose ground truth is ignore are
// dropped; the score of an instance is its size over the largest instance
// in the frame.
std::vector<InstanceMask> prediction_instances(const PseudoLabels& labels,
                                               std::span<const std::int32_t> gt_semantic);
std::vector<InstanceMask> ground_truth_instances(std::span<const std::int32_t> gt_semantic,
                                                 std::span<const std::int32_t> gt_instance);

struct MetricReport {
  IouResult iou;
  ApResult ap;
  std::size_t num_frames = 0;
  std::size_t num_points = 0;
};

class MetricAccumulator {
 public:
  explicit MetricAccumulator(int num_classes = kNumClasses);

  void add_frame(const PseudoLabels& labels, std::span<const std::int32_t> gt_semantic,
                 std::span<const std::int32_t> gt_instance);
  MetricReport report() const;

 private:
  ConfusionAccumulator confusion_;
  ApAccumulator ap_;
  std::size_t num_frames_ = 0;
  std::size_t num_points_ = 0;
};

nlohmann::json report_to_json(const MetricReport& report, const std::vector<std::string>& class_names);
std::string report_to_text(const MetricReport& report, const std::vector<std::string>& class_names);

}  // namespace wlf
