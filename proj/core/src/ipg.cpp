#include "wlf/ipg.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <string>

#include <nlohmann/json.hpp>

#include "wlf/binary_io.hpp"
#include "wlf/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wlf {

void IpgConfig::validate() const {
  if (!(tau_low > 0.0 && tau_low < tau_high && tau_high < 1.0)) {
    throw ConfigError("IPG thresholds need 0 < tau_low < tau_high < 1");
  }
  if (!std::isfinite(k)) {
    throw ConfigError("IPG k must be finite");
  }
}

double box_iou(const PixelBox& a, const PixelBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) {
    return 0.0;
  }
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<double> fusion_weights(std::span<const double> scores, std::span<const double> ious,
                                   double k) {
  if (scores.size() != ious.size()) {
    throw ArgumentError("scores and IoUs differ in length");
  }
  if (scores.empty()) {
    throw ArgumentError("fusion needs at least one prediction");
  }
  std::vector<double> w(scores.size());
  double total = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (!(scores[j] >= 0.0) || !std::isfinite(ious[j])) {
      throw ArgumentError("fusion scores must be non-negative and IoUs finite");
    }
    w[j] = scores[j] * std::exp(k * ious[j]);
    total += w[j];
  }
  if (total <= 0.0) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
    return w;
  }
  for (double& x : w) {
    x /= total;
  }
  return w;
}

ProbMap weight_masks(std::span<const MaskPrediction> preds, const Box2D& gt_box, double k) {
  if (preds.empty()) {
    throw ArgumentError("weight_masks needs at least one prediction");
  }
  const int h = preds.front().prob_map.height;
  const int w = preds.front().prob_map.width;
  std::vector<double> scores;
  std::vector<double> ious;
  for (const auto& p : preds) {
    if (p.prob_map.height != h || p.prob_map.width != w) {
      throw ArgumentError("all probability maps must share one shape");
    }
    scores.push_back(p.score);
    ious.push_back(box_iou(p.pred_box, gt_box.bounds));
  }
  const auto weights = fusion_weights(scores, ious, k);
  ProbMap fused(h, w, 0.0);
  for (std::size_t j = 0; j < preds.size(); ++j) {
    const auto& src = preds[j].prob_map.values;
    for (std::size_t i = 0; i < fused.size(); ++i) {
      fused.values[i] += weights[j] * src[i];
    }
  }
  return fused;
}

TrinaryMask binarize(const ProbMap& fused, const IpgConfig& cfg) {
  TrinaryMask out{fused.height, fused.width, std::vector<std::int8_t>(fused.size(), -1)};
  for (std::size_t i = 0; i < fused.size(); ++i) {
    const double v = fused.values[i];
    if (v > cfg.tau_high) {
      out.values[i] = 1;
    } else if (v < cfg.tau_low) {
      out.values[i] = 0;
    }
  }
  return out;
}

namespace {

void check_shapes(const ProbMap& pred, const TrinaryMask& target) {
  if (pred.height != target.height || pred.width != target.width ||
      pred.size() != target.values.size()) {
    throw ArgumentError("prediction and pseudo mask shapes differ");
  }
}

struct DiceTerms {
  double intersection = 0.0;
  double pred_sum = 0.0;
  double target_sum = 0.0;
  std::size_t kept = 0;
};

DiceTerms dice_terms(const ProbMap& pred, const TrinaryMask& target) {
  DiceTerms t;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (target.values[i] < 0) {
      continue;
    }
    const double p = pred.values[i];
    const double y = target.values[i];
    t.intersection += p * y;
    t.pred_sum += p;
    t.target_sum += y;
    ++t.kept;
  }
  return t;
}

}  // namespace

double pseudo_loss(const ProbMap& pred, const TrinaryMask& target) {
  check_shapes(pred, target);
  const DiceTerms d = dice_terms(pred, target);
  if (d.kept == 0) {
    return 0.0;
  }
  double bce = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (target.values[i] < 0) {
      continue;
    }
    const double p = std::clamp(pred.values[i], kLossEpsilon, 1.0 - kLossEpsilon);
    const double y = target.values[i];
    bce -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  bce /= static_cast<double>(d.kept);
  const double dice = 1.0 - 2.0 * d.intersection / (d.pred_sum + d.target_sum + kLossEpsilon);
  return bce + dice;
}

ProbMap pseudo_loss_gradient(const ProbMap& pred, const TrinaryMask& target) {
  check_shapes(pred, target);
  ProbMap grad(pred.height, pred.width, 0.0);
  const DiceTerms d = dice_terms(pred, target);
  if (d.kept == 0) {
    return grad;
  }
  const double denom = d.pred_sum + d.target_sum + kLossEpsilon;
  const double n = static_cast<double>(d.kept);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (target.values[i] < 0) {
      continue;
    }
    const double raw = pred.values[i];
    const double y = target.values[i];
    double g_bce = 0.0;
    if (raw > kLossEpsilon && raw < 1.0 - kLossEpsilon) {
      g_bce = (-y / raw + (1.0 - y) / (1.0 - raw)) / n;
    }
    const double g_dice = -2.0 * (y * denom - d.intersection) / (denom * denom);
    grad.values[i] = g_bce + g_dice;
  }
  return grad;
}

double mean_pseudo_loss(std::span<const ProbMap> preds, std::span<const TrinaryMask> targets) {
  if (preds.size() != targets.size()) {
    throw ArgumentError("one pseudo mask per prediction is required");
  }
  if (preds.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    total += pseudo_loss(preds[i], targets[i]);
  }
  return total / static_cast<double>(preds.size());
}

void write_prob_map(const fs::path& path, const ProbMap& map) {
  std::vector<float> values(map.values.begin(), map.values.end());
  io::write_array<float>(path, values);
}

ProbMap read_prob_map(const fs::path& path, int height, int width) {
  const auto raw = io::read_array<float>(path, static_cast<std::ptrdiff_t>(height) * width);
  ProbMap map(height, width);
  std::copy(raw.begin(), raw.end(), map.values.begin());
  return map;
}

void write_mask(const fs::path& dir, const StoredMask& mask) {
  fs::create_directories(dir);
  const std::string stem = "mask_" + std::to_string(mask.mask_id);
  const auto& pred = mask.prediction;
  write_prob_map(dir / (stem + ".f32"), pred.prob_map);
  const json sidecar{{"mask_id", mask.mask_id},
                     {"gt_box_id", mask.gt_box_id},
                     {"height", pred.prob_map.height},
                     {"width", pred.prob_map.width},
                     {"score", pred.score},
                     {"pred_box",
                      {pred.pred_box.x_min, pred.pred_box.y_min, pred.pred_box.x_max,
                       pred.pred_box.y_max}}};
  io::write_text(dir / (stem + ".json"), sidecar.dump(2) + "\n");
}

std::vector<StoredMask> read_masks(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw InputError("mask directory " + dir.string() + " does not exist");
  }
  static const std::regex pattern(R"(mask_(\d+)\.json)");
  std::vector<StoredMask> masks;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::smatch m;
    if (!std::regex_match(name, m, pattern)) {
      continue;
    }
    StoredMask mask;
    try {
      const json j = json::parse(io::read_text(entry.path()));
      mask.mask_id = std::stoi(m[1].str());
      mask.gt_box_id = j.at("gt_box_id").get<std::int32_t>();
      const int h = j.at("height").get<int>();
      const int w = j.at("width").get<int>();
      mask.prediction.score = j.at("score").get<double>();
      const auto& b = j.at("pred_box");
      mask.prediction.pred_box = {b.at(0).get<double>(), b.at(1).get<double>(),
                                  b.at(2).get<double>(), b.at(3).get<double>()};
      mask.prediction.prob_map =
          read_prob_map(dir / ("mask_" + m[1].str() + ".f32"), h, w);
    } catch (const json::exception& e) {
      throw ConfigError(entry.path().string() + ": " + e.what());
    }
    masks.push_back(std::move(mask));
  }
  std::sort(masks.begin(), masks.end(),
            [](const StoredMask& a, const StoredMask& b) { return a.mask_id < b.mask_id; });
  return masks;
}

}  // namespace wlf
