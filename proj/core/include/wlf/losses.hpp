#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wlf/frame.hpp"
#include "wlf/ipg.hpp"

namespace wlf {

// N_in x N_cls per-point per-class scores in [0, 1], row-major.
class PointScores {
 public:
  PointScores() = default;
  PointScores(std::size_t num_points, std::size_t num_classes, double fill = 0.0)
      : num_points_(num_points), num_classes_(num_classes), values_(num_points * num_classes, fill) {}

  std::size_t num_points() const { return num_points_; }
  std::size_t num_classes() const { return num_classes_; }
  double& at(std::size_t point, std::size_t cls) { return values_[point * num_classes_ + cls]; }
  double at(std::size_t point, std::size_t cls) const { return values_[point * num_classes_ + cls]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  // Throws ArgumentError on non-finite or out-of-range entries.
  void validate() const;

 private:
  std::size_t num_points_ = 0;
  std::size_t num_classes_ = 0;
  std::vector<double> values_;
};

// -(1 / (N C)) sum [p log q + (1 - p) log(1 - q)] with q clamped to
// [eps, 1 - eps]. The teacher argument is constant; swap modalities for the
// two cross-supervision directions. Throws ArgumentError on shape mismatch.
double cscs(const PointScores& teacher, const PointScores& student);

// d cscs / d student.
PointScores cscs_gradient(const PointScores& teacher, const PointScores& student);

// Samples per-class 2D score maps at each projected point (nearest pixel).
// Only validly projected points are kept; their indices go to `kept`.
PointScores sample_pixel_scores(std::span<const ProbMap> class_maps, const ProjectedPoints& proj,
                                std::vector<std::size_t>& kept);

// Rows of `scores` at `indices`.
PointScores gather_points(const PointScores& scores, std::span<const std::size_t> indices);

struct LossWeights {
  double boxinst = 1.0;       // alpha_1
  double pseudo = 1.0;        // alpha_2
  double cscs_3d_to_2d = 0.5; // alpha_3
  double cls = 100.0;         // alpha_4
  double vote = 1.0;          // alpha_5
  double cscs_2d_to_3d = 2.0; // alpha_6

  void validate() const;
};

struct LossComponents {
  std::optional<double> boxinst;
  std::optional<double> pseudo;
  std::optional<double> cscs_3d_to_2d;
  std::optional<double> cls;
  std::optional<double> vote;
  std::optional<double> cscs_2d_to_3d;
};

struct CombinedLoss {
  double loss_2d = 0.0;
  double loss_3d = 0.0;
  double total = 0.0;
  std::vector<std::string> missing;  // components treated as zero
};

// Weighted per-branch sums and their total. Missing components count as 0
// and are logged; NaN or infinite components throw ArgumentError.
CombinedLoss combine_losses(const LossComponents& components, const LossWeights& weights);

}  // namespace wlf
