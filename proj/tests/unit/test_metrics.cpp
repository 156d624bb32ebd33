#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "wlf/error.hpp"
#include "wlf/metrics.hpp"

namespace wlf {
namespace {

using Labels = std::vector<std::int32_t>;

InstanceMask inst(std::int32_t cls, std::vector<std::size_t> pts, double score = 1.0) {
  return {cls, std::move(pts), score};
}

// Random micro-instance: up to 20 points, up to 4 instances per side.
struct Micro {
  std::vector<InstanceMask> preds, gts;
};

Micro random_micro(std::mt19937_64& rng) {
  Micro m;
  const std::size_t n = 1 + rng() % 20;
  for (auto* side : {&m.gts, &m.preds}) {
    const int k = static_cast<int>(rng() % 5);
    std::vector<int> owner(n);
    for (auto& o : owner) o = static_cast<int>(rng() % static_cast<std::uint64_t>(k + 1)) - 1;
    for (int j = 0; j < k; ++j) {
      InstanceMask mask{1 + static_cast<std::int32_t>(rng() % 3), {}, static_cast<double>(rng() % 5) / 4.0};
      for (std::size_t i = 0; i < n; ++i) if (owner[i] == j) mask.points.push_back(i);
      if (!mask.points.empty()) side->push_back(std::move(mask));
    }
  }
  return m;
}

TEST(Miou, PerfectPrediction) {
  const Labels l{0, 1, 2, 3, 1};
  const auto r = miou(l, l);
  for (const auto& v : r.per_class) EXPECT_EQ(*v, 1.0);
  EXPECT_EQ(*r.miou, 1.0);
}

TEST(Miou, OneThirdOverlap) {
  // Prediction covers points a, b; ground truth covers b, c.
  const auto r = miou(Labels{1, 1, 0, 0}, Labels{0, 1, 1, 0}, 1);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 1.0 / 3.0);
}

TEST(Miou, DisjointIsZero) {
  const auto r = miou(Labels{1, 1, 0, 0}, Labels{0, 0, 1, 1}, 1);
  EXPECT_EQ(*r.miou, 0.0);
}

TEST(Miou, AbsentClassesLeaveTheMean) {
  const auto r = miou(Labels{1, 0}, Labels{1, 0});
  EXPECT_TRUE(r.per_class[0].has_value());
  EXPECT_FALSE(r.per_class[1].has_value());
  EXPECT_FALSE(r.per_class[2].has_value());
  EXPECT_EQ(*r.miou, 1.0);
  EXPECT_FALSE(miou(Labels{0, 0}, Labels{0, 0}).miou.has_value());
}

TEST(Miou, IgnoreHandling) {
  // Ground-truth ignore is skipped; predicted ignore on a vehicle point is a miss.
  const auto r = miou(Labels{2, -1, 1}, Labels{-1, 1, 1}, 2);
  EXPECT_DOUBLE_EQ(*r.per_class[0], 0.5);
  EXPECT_FALSE(r.per_class[1].has_value());
}

TEST(Miou, LengthMismatchThrows) {
  EXPECT_THROW(miou(Labels{1}, Labels{1, 1}), ArgumentError);
}

TEST(Miou, MatchesConfusionMatrixOracle) {
  std::mt19937_64 rng(500);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    Labels pred(n), gt(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<std::int32_t>(rng() % 5) - 1;
      gt[i] = static_cast<std::int32_t>(rng() % 5) - 1;
    }
    const auto r = miou(pred, gt);
    const auto expected = oracle::confusion_iou(pred, gt, 3);
    for (std::size_t c = 0; c < 3; ++c) {
      ASSERT_EQ(r.per_class[c].has_value(), expected[c].has_value());
      if (expected[c]) ASSERT_NEAR(*r.per_class[c], *expected[c], 1e-12);
    }
  }
}

TEST(Miou, InvariantUnderPointPermutation) {
  std::mt19937_64 rng(501);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 30;
    Labels pred(n), gt(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<std::int32_t>(rng() % 5) - 1;
      gt[i] = static_cast<std::int32_t>(rng() % 5) - 1;
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Labels p2(n), g2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p2[i] = pred[perm[i]];
      g2[i] = gt[perm[i]];
    }
    ASSERT_EQ(miou(pred, gt).per_class, miou(p2, g2).per_class);
  }
}

TEST(PointSetIou, SortedIntersection) {
  const std::vector<std::size_t> a{1, 2, 3}, b{2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(point_set_iou(a, b), 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(point_set_iou(std::vector<std::size_t>{}, std::vector<std::size_t>{}), 0.0);
}

TEST(InstanceAp, ExactSinglePrediction) {
  const std::vector<InstanceMask> g{inst(1, {0, 1, 2})};
  const auto r = instance_ap(g, g);
  for (const auto& v : r.per_threshold) EXPECT_EQ(*v, 1.0);
  EXPECT_EQ(*r.ap, 1.0);
}

TEST(InstanceAp, NoPredictionsIsZero) {
  const std::vector<InstanceMask> g{inst(2, {0, 1})};
  EXPECT_EQ(*instance_ap(std::vector<InstanceMask>{}, g).ap, 0.0);
}

TEST(InstanceAp, HalfRecallWithFalsePositive) {
  const std::vector<InstanceMask> g{inst(1, {0, 1}), inst(1, {2, 3})};
  const std::vector<InstanceMask> p{inst(1, {0, 1}, 0.9), inst(1, {4, 5}, 0.8)};
  const auto r = instance_ap(p, g);
  EXPECT_NEAR(*r.ap50, 51.0 / 101.0, 1e-6);
  EXPECT_NEAR(*oracle::instance_ap(p, g, 3, 0.5), 51.0 / 101.0, 1e-12);
}

TEST(InstanceAp, ClassesWithoutGroundTruthAreUndefined) {
  const std::vector<InstanceMask> p{inst(3, {0})};
  const auto r = instance_ap(p, std::vector<InstanceMask>{});
  EXPECT_FALSE(r.ap.has_value());
  EXPECT_FALSE(r.per_class[2].has_value());
}

TEST(InterpolatedAp, HandCurves) {
  EXPECT_DOUBLE_EQ(interpolated_ap({true}, 1), 1.0);
  EXPECT_DOUBLE_EQ(interpolated_ap({}, 3), 0.0);
  // FP then TP: precision 1/2 up to recall 1.
  EXPECT_DOUBLE_EQ(interpolated_ap({false, true}, 1), 0.5);
  // TP, FP, TP over 2 GT: precision 1 up to recall 0.5, then 2/3.
  EXPECT_NEAR(interpolated_ap({true, false, true}, 2), (51.0 + 50.0 * 2.0 / 3.0) / 101.0, 1e-12);
}

TEST(InstanceAp, MatchesPrCurveOracle) {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = random_micro(rng);
    const auto r = instance_ap(m.preds, m.gts);
    const auto expected = oracle::instance_ap(m.preds, m.gts, 3);
    ASSERT_EQ(r.ap.has_value(), expected.has_value());
    if (expected) ASSERT_NEAR(*r.ap, *expected, 1e-9);
    const auto e50 = oracle::instance_ap(m.preds, m.gts, 3, 0.5);
    if (e50) ASSERT_NEAR(*r.ap50, *e50, 1e-9);
  }
}

TEST(InstanceAp, NonIncreasingInThreshold) {
  std::mt19937_64 rng(778);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = random_micro(rng);
    const auto r = instance_ap(m.preds, m.gts);
    if (!r.ap) continue;
    for (std::size_t t = 1; t < r.per_threshold.size(); ++t) {
      ASSERT_LE(*r.per_threshold[t], *r.per_threshold[t - 1] + 1e-12);
    }
  }
}

TEST(InstanceAp, InvariantUnderPermutationWithDistinctScores) {
  std::mt19937_64 rng(779);
  for (int trial = 0; trial < 300; ++trial) {
    auto m = random_micro(rng);
    for (std::size_t j = 0; j < m.preds.size(); ++j) m.preds[j].score = 1.0 - 0.1 * static_cast<double>(j);
    const auto base = instance_ap(m.preds, m.gts);
    // Relabel points and shuffle both instance lists.
    std::vector<std::size_t> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto moved = m;
    for (auto* side : {&moved.preds, &moved.gts}) {
      for (auto& mask : *side) {
        for (auto& p : mask.points) p = perm[p];
        std::sort(mask.points.begin(), mask.points.end());
      }
      std::shuffle(side->begin(), side->end(), rng);
    }
    const auto r = instance_ap(moved.preds, moved.gts);
    ASSERT_EQ(r.ap.has_value(), base.ap.has_value());
    if (base.ap) ASSERT_NEAR(*r.ap, *base.ap, 1e-12);
  }
}

TEST(Instances, FromLabelsAndGroundTruth) {
  PseudoLabels l(6);
  l.semantic = {1, 1, 2, -1, 0, 2};
  l.instance = {4, 4, 7, 0, 0, 7};
  const Labels gt_sem{1, -1, 2, 0, 0, 2};
  const Labels gt_inst{1, 0, 2, 0, 0, 2};
  const auto preds = prediction_instances(l, gt_sem);
  ASSERT_EQ(preds.size(), 2u);
  EXPECT_EQ(preds[0].points, (std::vector<std::size_t>{0}));  // point 1 is ignore in GT
  EXPECT_EQ(preds[1].points, (std::vector<std::size_t>{2, 5}));
  EXPECT_DOUBLE_EQ(preds[0].score, 0.5);
  EXPECT_DOUBLE_EQ(preds[1].score, 1.0);
  const auto gts = ground_truth_instances(gt_sem, gt_inst);
  ASSERT_EQ(gts.size(), 2u);
  EXPECT_EQ(gts[1].class_id, 2);
}

TEST(MetricAccumulator, ReportsValuesInUnitInterval) {
  std::mt19937_64 rng(780);
  MetricAccumulator acc;
  for (int f = 0; f < 50; ++f) {
    const std::size_t n = 1 + rng() % 30;
    PseudoLabels l(n);
    Labels gs(n), gi(n);
    for (std::size_t i = 0; i < n; ++i) {
      l.semantic[i] = static_cast<std::int32_t>(rng() % 4);
      l.instance[i] = l.semantic[i] > 0 ? static_cast<std::int32_t>(1 + rng() % 3) : 0;
      gs[i] = static_cast<std::int32_t>(rng() % 5) - 1;
      gi[i] = gs[i] > 0 ? static_cast<std::int32_t>(1 + rng() % 3) : 0;
    }
    acc.add_frame(l, gs, gi);
  }
  const auto rep = acc.report();
  EXPECT_EQ(rep.num_frames, 50u);
  const auto j = report_to_json(rep, {"background", "vehicle", "pedestrian", "cyclist"});
  for (const char* key : {"miou", "ap", "ap50", "ap75"}) {
    ASSERT_TRUE(j[key].is_number()) << key;
    EXPECT_GE(j[key].get<double>(), 0.0);
    EXPECT_LE(j[key].get<double>(), 1.0);
  }
  const auto text = report_to_text(rep, {"background", "vehicle", "pedestrian", "cyclist"});
  EXPECT_NE(text.find("vehicle"), std::string::npos);
  EXPECT_NE(text.find("AP50"), std::string::npos);
}

}  // namespace
}  // namespace wlf
