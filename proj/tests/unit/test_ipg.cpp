#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "wlf/error.hpp"
#include "wlf/ipg.hpp"

namespace wlf {
namespace {

MaskPrediction mask(const ProbMap& map, double score, PixelBox box) { return {map, score, box}; }

ProbMap random_map(std::mt19937_64& rng, int h, int w, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  ProbMap m(h, w);
  for (auto& v : m.values) v = u(rng);
  return m;
}

TrinaryMask random_target(std::mt19937_64& rng, int h, int w) {
  TrinaryMask t{h, w, std::vector<std::int8_t>(static_cast<std::size_t>(h * w))};
  for (auto& v : t.values) v = static_cast<std::int8_t>(static_cast<int>(rng() % 3) - 1);
  return t;
}

TEST(BoxIou, KnownOverlaps) {
  EXPECT_DOUBLE_EQ(box_iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_DOUBLE_EQ(box_iou({0, 0, 10, 10}, {5, 0, 15, 10}), 50.0 / 150.0);
  EXPECT_DOUBLE_EQ(box_iou({0, 0, 1, 1}, {1, 0, 2, 1}), 0.0);
}

TEST(FusionWeights, WorkedExample) {
  const std::vector<double> s{0.8, 0.2}, iou{0.9, 0.5};
  const auto w = fusion_weights(s, iou, 1.0);
  // Direct evaluation: 0.8 e^0.9 / (0.8 e^0.9 + 0.2 e^0.5).
  const double a = 0.8 * std::exp(0.9), b = 0.2 * std::exp(0.5);
  EXPECT_NEAR(w[0], a / (a + b), 1e-12);
  EXPECT_NEAR(w[0], 0.8565, 1e-4);
  EXPECT_NEAR(w[1], 0.1435, 1e-4);
}

TEST(FusionWeights, SumToOneAndNonNegative) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0), kd(-5.0, 5.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<double> s(n), iou(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = u(rng);
      iou[j] = u(rng);
    }
    const auto w = fusion_weights(s, iou, kd(rng));
    double total = 0.0;
    for (double x : w) {
      ASSERT_GE(x, 0.0);
      total += x;
    }
    ASSERT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(FusionWeights, IncreasingScoreOrIouRaisesWeight) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.05, 0.9);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    std::vector<double> s(n), iou(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = u(rng);
      iou[j] = u(rng);
    }
    const double k = 0.5 + u(rng);
    const auto base = fusion_weights(s, iou, k);
    auto s2 = s;
    s2[0] += 0.05;
    ASSERT_GT(fusion_weights(s2, iou, k)[0], base[0]);
    auto iou2 = iou;
    iou2[0] += 0.05;
    ASSERT_GT(fusion_weights(s, iou2, k)[0], base[0]);
  }
}

TEST(FusionWeights, AllZeroScoresFallBackToUniform) {
  const std::vector<double> s{0.0, 0.0, 0.0, 0.0}, iou{0.1, 0.2, 0.3, 0.4};
  for (double w : fusion_weights(s, iou, 1.0)) EXPECT_DOUBLE_EQ(w, 0.25);
}

TEST(FusionWeights, RejectsBadInput) {
  EXPECT_THROW(fusion_weights(std::vector<double>{}, std::vector<double>{}, 1.0), ArgumentError);
  EXPECT_THROW(fusion_weights(std::vector<double>{0.5}, std::vector<double>{0.5, 0.5}, 1.0), ArgumentError);
  EXPECT_THROW(fusion_weights(std::vector<double>{-0.1}, std::vector<double>{0.5}, 1.0), ArgumentError);
}

TEST(WeightMasks, SinglePredictionIsIdentity) {
  std::mt19937_64 rng(1);
  const auto m = random_map(rng, 5, 7);
  const std::vector<MaskPrediction> preds{mask(m, 0.3, {0, 0, 4, 4})};
  const auto fused = weight_masks(preds, Box2D{1, 1, {1, 1, 5, 5}}, 1.0);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(fused.values[i], m.values[i], 1e-15);
}

TEST(WeightMasks, ZeroKEqualScoresIsMean) {
  std::mt19937_64 rng(2);
  const auto a = random_map(rng, 4, 4), b = random_map(rng, 4, 4);
  const std::vector<MaskPrediction> preds{mask(a, 0.6, {0, 0, 4, 4}), mask(b, 0.6, {2, 2, 3, 3})};
  const auto fused = weight_masks(preds, Box2D{1, 1, {0, 0, 4, 4}}, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(fused.values[i], 0.5 * (a.values[i] + b.values[i]), 1e-12);
}

TEST(WeightMasks, FusedStaysWithinInputRange) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 5;
    std::vector<MaskPrediction> preds;
    for (std::size_t j = 0; j < n; ++j) {
      const double x = 10 * u(rng), y = 10 * u(rng);
      preds.push_back(mask(random_map(rng, 3, 6), u(rng), {x, y, x + 1 + 5 * u(rng), y + 1 + 5 * u(rng)}));
    }
    const auto fused = weight_masks(preds, Box2D{1, 1, {2, 2, 8, 8}}, 1.0);
    for (std::size_t i = 0; i < fused.size(); ++i) {
      double lo = 1.0, hi = 0.0;
      for (const auto& p : preds) {
        lo = std::min(lo, p.prob_map.values[i]);
        hi = std::max(hi, p.prob_map.values[i]);
      }
      ASSERT_GE(fused.values[i], lo - 1e-12);
      ASSERT_LE(fused.values[i], hi + 1e-12);
    }
  }
}

TEST(WeightMasks, ShapeMismatchThrows) {
  const std::vector<MaskPrediction> preds{mask(ProbMap(2, 2), 1, {}), mask(ProbMap(3, 2), 1, {})};
  EXPECT_THROW(weight_masks(preds, Box2D{}, 1.0), ArgumentError);
  EXPECT_THROW(weight_masks(std::vector<MaskPrediction>{}, Box2D{}, 1.0), ArgumentError);
}

TEST(Binarize, ThresholdsAtPointThreeAndPointSeven) {
  ProbMap m(1, 5);
  m.values = {0.8, 0.1, 0.5, 0.7, 0.3};
  const auto t = binarize(m, IpgConfig{});
  EXPECT_EQ(t.values, (std::vector<std::int8_t>{1, 0, -1, -1, -1}));
  EXPECT_EQ(t.height, 1);
  EXPECT_EQ(t.width, 5);
}

TEST(IpgConfig, Validation) {
  EXPECT_NO_THROW(IpgConfig{}.validate());
  EXPECT_THROW((IpgConfig{1.0, 0.7, 0.3}.validate()), ConfigError);
  EXPECT_THROW((IpgConfig{1.0, 0.0, 0.5}.validate()), ConfigError);
}

TEST(PseudoLoss, PerfectMatchIsNearZero) {
  ProbMap p(2, 2);
  p.values = {1, 0, 0, 1};
  const TrinaryMask t{2, 2, {1, 0, 0, 1}};
  EXPECT_LT(pseudo_loss(p, t), 1e-5);
}

TEST(PseudoLoss, HalfEverywhere) {
  const ProbMap p(2, 2, 0.5);
  const TrinaryMask t{2, 2, {1, 1, 0, 0}};
  // BCE ln 2 plus dice 1 - 2 * 1 / (2 + 2).
  EXPECT_NEAR(pseudo_loss(p, t), std::log(2.0) + 0.5, 1e-6);
  EXPECT_NEAR(pseudo_loss(p, t), 1.1931, 1e-4);
}

TEST(PseudoLoss, IgnoredPixelsDropOut) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_map(rng, 4, 6, 0.01, 0.99);
    const auto t = random_target(rng, 4, 6);
    ProbMap kept_p(1, 0);
    TrinaryMask kept_t{1, 0, {}};
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (t.values[i] < 0) continue;
      kept_p.values.push_back(p.values[i]);
      kept_t.values.push_back(t.values[i]);
      ++kept_p.width;
      ++kept_t.width;
    }
    ASSERT_NEAR(pseudo_loss(p, t), pseudo_loss(kept_p, kept_t), 1e-12);
  }
}

TEST(PseudoLoss, AllIgnoredIsZero) {
  const TrinaryMask t{2, 2, {-1, -1, -1, -1}};
  EXPECT_EQ(pseudo_loss(ProbMap(2, 2, 0.3), t), 0.0);
  EXPECT_THROW(pseudo_loss(ProbMap(2, 3, 0.3), t), ArgumentError);
}

TEST(PseudoLoss, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(5);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    auto p = random_map(rng, 3, 5, 0.05, 0.95);
    auto t = random_target(rng, 3, 5);
    t.values[0] = 1;  // keep at least one pixel
    const auto g = pseudo_loss_gradient(p, t);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double v = p.values[i];
      p.values[i] = v + h;
      const double up = pseudo_loss(p, t);
      p.values[i] = v - h;
      const double down = pseudo_loss(p, t);
      p.values[i] = v;
      const double fd = (up - down) / (2 * h);
      if (t.values[i] < 0) {
        ASSERT_EQ(g.values[i], 0.0);
        continue;
      }
      ASSERT_LT(std::fabs(g.values[i] - fd), 1e-4 * std::max(1.0, std::fabs(fd)))
          << "pixel " << i << " analytic " << g.values[i] << " numeric " << fd;
    }
  }
}

TEST(PseudoLoss, MeanOverInstances) {
  const std::vector<ProbMap> preds{ProbMap(2, 2, 0.5), ProbMap(1, 1, 1.0)};
  const std::vector<TrinaryMask> targets{{2, 2, {1, 1, 0, 0}}, {1, 1, {1}}};
  EXPECT_NEAR(mean_pseudo_loss(preds, targets),
              0.5 * (pseudo_loss(preds[0], targets[0]) + pseudo_loss(preds[1], targets[1])), 1e-15);
  EXPECT_EQ(mean_pseudo_loss(std::vector<ProbMap>{}, std::vector<TrinaryMask>{}), 0.0);
}

TEST(MaskFiles, RoundTrip) {
  test::ScratchDir dir("masks");
  std::mt19937_64 rng(6);
  StoredMask a{3, 2, mask(random_map(rng, 4, 5), 0.75, {1, 2, 3, 4})};
  StoredMask b{1, 1, mask(random_map(rng, 4, 5), 0.5, {0, 0, 2, 2})};
  write_mask(dir.path(), a);
  write_mask(dir.path(), b);
  const auto masks = read_masks(dir.path());
  ASSERT_EQ(masks.size(), 2u);
  EXPECT_EQ(masks[0].mask_id, 1);
  EXPECT_EQ(masks[1].gt_box_id, 2);
  EXPECT_DOUBLE_EQ(masks[1].prediction.score, 0.75);
  EXPECT_DOUBLE_EQ(masks[1].prediction.pred_box.y_max, 4.0);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_FLOAT_EQ(static_cast<float>(masks[1].prediction.prob_map.values[i]),
                    static_cast<float>(a.prediction.prob_map.values[i]));
  }
  EXPECT_THROW(read_masks(dir / "absent"), InputError);
}

}  // namespace
}  // namespace wlf
