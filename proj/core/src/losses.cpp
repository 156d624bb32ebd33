#include "wlf/losses.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "wlf/error.hpp"

namespace wlf {
namespace {

void check_pair(const PointScores& teacher, const PointScores& student) {
  if (teacher.num_points() != student.num_points() ||
      teacher.num_classes() != student.num_classes()) {
    throw ArgumentError("teacher and student scores differ in shape");
  }
}

}  // namespace

void PointScores::validate() const {
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ArgumentError("point scores must be finite and lie in [0, 1]");
    }
  }
}

double cscs(const PointScores& teacher, const PointScores& student) {
  check_pair(teacher, student);
  const auto p = teacher.values();
  const auto q = student.values();
  if (p.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double qc = std::clamp(q[i], kLossEpsilon, 1.0 - kLossEpsilon);
    sum += p[i] * std::log(qc) + (1.0 - p[i]) * std::log(1.0 - qc);
  }
  return -sum / static_cast<double>(p.size());
}

PointScores cscs_gradient(const PointScores& teacher, const PointScores& student) {
  check_pair(teacher, student);
  PointScores grad(student.num_points(), student.num_classes(), 0.0);
  const auto p = teacher.values();
  const auto q = student.values();
  const auto g = grad.values();
  const double n = static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] > kLossEpsilon && q[i] < 1.0 - kLossEpsilon) {
      g[i] = -(p[i] / q[i] - (1.0 - p[i]) / (1.0 - q[i])) / n;
    }
  }
  return grad;
}

PointScores sample_pixel_scores(std::span<const ProbMap> class_maps, const ProjectedPoints& proj,
                                std::vector<std::size_t>& kept) {
  kept.clear();
  if (class_maps.empty()) {
    throw ArgumentError("at least one class score map is required");
  }
  const int h = class_maps.front().height;
  const int w = class_maps.front().width;
  for (const auto& m : class_maps) {
    if (m.height != h || m.width != w) {
      throw ArgumentError("class score maps differ in shape");
    }
  }
  for (std::size_t i = 0; i < proj.size(); ++i) {
    if (proj.valid[i]) {
      kept.push_back(i);
    }
  }
  PointScores out(kept.size(), class_maps.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const auto& px = proj.pixels[kept[k]];
    const int col = std::clamp(static_cast<int>(std::floor(px.x())), 0, w - 1);
    const int row = std::clamp(static_cast<int>(std::floor(px.y())), 0, h - 1);
    for (std::size_t c = 0; c < class_maps.size(); ++c) {
      out.at(k, c) = class_maps[c].at(row, col);
    }
  }
  return out;
}

PointScores gather_points(const PointScores& scores, std::span<const std::size_t> indices) {
  PointScores out(indices.size(), scores.num_classes());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= scores.num_points()) {
      throw ArgumentError("point index out of range");
    }
    for (std::size_t c = 0; c < scores.num_classes(); ++c) {
      out.at(k, c) = scores.at(indices[k], c);
    }
  }
  return out;
}

void LossWeights::validate() const {
  for (double a : {boxinst, pseudo, cscs_3d_to_2d, cls, vote, cscs_2d_to_3d}) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw ConfigError("loss weights must be finite and non-negative");
    }
  }
}

CombinedLoss combine_losses(const LossComponents& components, const LossWeights& weights) {
  CombinedLoss out;
  const auto take = [&](const std::optional<double>& v, const char* name) {
    if (!v) {
      out.missing.emplace_back(name);
      spdlog::warn("loss component '{}' is absent and counted as 0", name);
      return 0.0;
    }
    if (!std::isfinite(*v)) {
      throw ArgumentError(std::string("loss component '") + name + "' is not finite");
    }
    return *v;
  };
  const double boxinst = take(components.boxinst, "boxinst");
  const double pseudo = take(components.pseudo, "pseudo");
  const double c32 = take(components.cscs_3d_to_2d, "cscs_3d_to_2d");
  const double cls = take(components.cls, "cls");
  const double vote = take(components.vote, "vote");
  const double c23 = take(components.cscs_2d_to_3d, "cscs_2d_to_3d");

  out.loss_2d = weights.boxinst * boxinst + weights.pseudo * pseudo + weights.cscs_3d_to_2d * c32;
  out.loss_3d = weights.cls * cls + weights.vote * vote + weights.cscs_2d_to_3d * c23;
  out.total = out.loss_2d + out.loss_3d;
  return out;
}

}  // namespace wlf
