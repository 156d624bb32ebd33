#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "wlf/frame.hpp"

namespace wlf {

// Dense h x w score map, row-major.
struct ProbMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  ProbMap() = default;
  ProbMap(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

  std::size_t size() const { return values.size(); }
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
};

struct MaskPrediction {
  ProbMap prob_map;
  double score = 0.0;
  PixelBox pred_box;
};

struct IpgConfig {
  double k = 1.0;
  double tau_low = 0.3;
  double tau_high = 0.7;

  void validate() const;
};

struct TrinaryMask {
  int height = 0;
  int width = 0;
  std::vector<std::int8_t> values;  // -1 ignore, 0 background, 1 foreground
};

// Axis-aligned box IoU on continuous pixel coordinates.
double box_iou(const PixelBox& a, const PixelBox& b);

// w_j = s_j exp(k IoU_j) / sum_j s_j exp(k IoU_j). Falls back to uniform
// weights when every score is zero.
std::vector<double> fusion_weights(std::span<const double> scores, std::span<const double> ious,
                                   double k);

// Weighted sum of the predictions assigned to one ground-truth box.
ProbMap weight_masks(std::span<const MaskPrediction> preds, const Box2D& gt_box, double k);

TrinaryMask binarize(const ProbMap& fused, const IpgConfig& cfg);

inline constexpr double kLossEpsilon = 1e-7;

// BCE (probabilities clamped to [eps, 1 - eps]) plus soft dice
// 1 - 2 sum(p y) / (sum p + sum y + eps), both over non-ignored pixels.
// Zero kept pixels gives 0.
double pseudo_loss(const ProbMap& pred, const TrinaryMask& target);

// d pseudo_loss / d pred; ignored pixels get 0.
ProbMap pseudo_loss_gradient(const ProbMap& pred, const TrinaryMask& target);

// Mean of pseudo_loss over instances (0 for an empty list).
double mean_pseudo_loss(std::span<const ProbMap> preds, std::span<const TrinaryMask> targets);

// mask_<id>.f32 (h x w float32) with a mask_<id>.json sidecar holding
// height, width, score, pred_box and the ground-truth box it belongs to.
struct StoredMask {
  int mask_id = 0;
  std::int32_t gt_box_id = 0;
  MaskPrediction prediction;
};

void write_mask(const std::filesystem::path& dir, const StoredMask& mask);
std::vector<StoredMask> read_masks(const std::filesystem::path& dir);
void write_prob_map(const std::filesystem::path& path, const ProbMap& map);
ProbMap read_prob_map(const std::filesystem::path& path, int height, int width);

}  // namespace wlf
