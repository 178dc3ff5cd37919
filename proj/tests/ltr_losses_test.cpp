// tests/ltr_losses_test.cpp

// Copyright 2026 The chanrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>

#include "chanrank/gradcheck.hpp"
#include "chanrank/ltr_losses.hpp"

namespace chanrank {
namespace {

const double kLn2 = std::log(2.0);

// Reference sigmoid written out longhand for the oracles below.
double Sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(PointwiseXce, HandValues) {
  auto a = PointwiseXce(1.0, 0.0);
  EXPECT_NEAR(a.loss, kLn2, 1e-15);
  EXPECT_NEAR(a.grad, -0.5, 1e-15);

  auto b = PointwiseXce(0.5, 0.0);
  EXPECT_NEAR(b.loss, kLn2, 1e-15);
  EXPECT_NEAR(b.grad, 0.0, 1e-15);

  auto c = PointwiseXce(0.7, 0.2);
  double expected = -(0.7 * std::log(Sig(0.2)) + 0.3 * std::log(1.0 - Sig(0.2)));
  EXPECT_NEAR(c.loss, expected, 1e-14);
  EXPECT_NEAR(c.grad, -0.1502, 5e-5);
  EXPECT_NEAR(c.grad, Sig(0.2) - 0.7, 1e-15);
}

TEST(PointwiseXce, RejectsLabelsOutsideUnitInterval) {
  EXPECT_THROW(PointwiseXce(1.2, 0.0), Error);
  EXPECT_THROW(PointwiseXce(-0.1, 0.0), Error);
}

TEST(PointwiseXce, GradientSignProperty) {
  auto rng = DerivedRng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    double w = UniformDouble(rng, 0, 1), f = UniformDouble(rng, -6, 6);
    auto lg = PointwiseXce(w, f);
    EXPECT_EQ(lg.grad > 0, Sig(f) > w);
  }
}

TEST(PointwiseXce, PositiveOnlyVariant) {
  auto lg = PointwiseXce(0.8, 0.3, XceForm::kPositiveOnly);
  EXPECT_NEAR(lg.loss, -0.8 * std::log(Sig(0.3)), 1e-14);
  EXPECT_NEAR(lg.grad, 0.8 * (Sig(0.3) - 1.0), 1e-14);
}

TEST(PointwiseMse, HandValues) {
  EXPECT_EQ(PointwiseMse(0.4, 0.4).loss, 0.0);
  auto a = PointwiseMse(1.0, 0.0);
  EXPECT_EQ(a.loss, 1.0);
  EXPECT_EQ(a.grad, -2.0);
  auto b = PointwiseMse(0.3, 0.8);
  EXPECT_NEAR(b.loss, 0.25, 1e-15);
  EXPECT_NEAR(b.grad, 1.0, 1e-15);
}

TEST(PairwiseLabel, TieRule) {
  EXPECT_EQ(PairwiseLabel(0.8, 0.3), 1);
  EXPECT_EQ(PairwiseLabel(0.3, 0.8), 0);
  EXPECT_EQ(PairwiseLabel(0.5, 0.5), 0);
}

TEST(PairSet, Examples) {
  std::vector<double> w{0.9, 0.5, 0.5};
  PairSet p = BuildPairSet(std::span<const double>(w), 0.1);
  EXPECT_EQ(p, (PairSet{{0, 1}, {0, 2}}));

  std::vector<double> d{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  EXPECT_EQ(BuildPairSet(std::span<const double>(d), 0.0).size(), 28u);

  std::vector<double> e(6, 0.4);
  for (double delta : {0.0, 0.2, 1.0})
    EXPECT_TRUE(BuildPairSet(std::span<const double>(e), delta).empty());
  EXPECT_THROW(BuildPairSet(std::span<const double>(e), -0.1), Error);
}

TEST(PairSet, BoundAndThresholdProperty) {
  auto rng = DerivedRng(2, 0);
  for (int trial = 0; trial < 300; ++trial) {
    int m = static_cast<int>(UniformInt(rng, 2, 12));
    std::vector<double> w(static_cast<std::size_t>(m));
    for (auto &x : w) x = std::round(UniformDouble(rng, 0, 1) * 10) / 10;  // force ties
    double delta = UniformDouble(rng, 0, 0.3);
    PairSet p = BuildPairSet(std::span<const double>(w), delta);
    EXPECT_LE(p.size(), static_cast<std::size_t>(m * (m - 1) / 2));
    for (auto [i, j] : p) {
      EXPECT_LT(i, j);
      EXPECT_GT(std::abs(w[i] - w[j]), delta);
    }
  }
}

TEST(RankNet, HandValues) {
  EXPECT_NEAR(RankNetLoss(0.3, 0.3, 1).loss, kLn2, 1e-15);
  EXPECT_LT(RankNetLoss(20.0, 0.0, 1).loss, 1e-8);
  auto lg = RankNetLoss(1.0, 0.0, 0);
  EXPECT_NEAR(lg.loss, std::log(1.0 + std::exp(1.0)), 1e-14);
  EXPECT_NEAR(lg.loss, 1.3133, 5e-5);
  EXPECT_NEAR(lg.grad_i, Sig(1.0), 1e-15);
  EXPECT_EQ(lg.grad_j, -lg.grad_i);
  EXPECT_THROW(RankNetLoss(0.0, 0.0, 2), Error);
}

TEST(RankNet, AntisymmetryProperty) {
  auto rng = DerivedRng(3, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    double fi = UniformDouble(rng, -30, 30), fj = UniformDouble(rng, -30, 30);
    EXPECT_NEAR(RankNetProbability(fi, fj) + RankNetProbability(fj, fi), 1.0, 1e-12);
    for (int y : {0, 1}) {
      auto a = RankNetLoss(fi, fj, y);
      auto b = RankNetLoss(fj, fi, 1 - y);
      EXPECT_NEAR(a.loss, b.loss, 1e-12);
      EXPECT_NEAR(a.grad_i, b.grad_j, 1e-12);
    }
  }
}

TEST(ListNet, HandValues) {
  std::vector<double> w{1.0, 0.0}, f{0.0, 0.0};
  auto lg = ListNetLoss(std::span<const double>(w), std::span<const double>(f));
  EXPECT_NEAR(lg.loss, kLn2, 1e-15);
  double p0 = std::exp(1.0) / (std::exp(1.0) + 1.0);
  EXPECT_NEAR(p0, 0.7311, 5e-5);
  EXPECT_NEAR(lg.grad[0], 0.5 - p0, 1e-15);
  EXPECT_NEAR(lg.grad[1], 0.5 - (1 - p0), 1e-15);
}

TEST(ListNet, MinimumAtMatchingDistributions) {
  std::vector<double> w{0.2, 0.9, 0.5, 0.1};
  auto lg = ListNetLoss(std::span<const double>(w), std::span<const double>(w));
  double entropy = 0;
  double z = 0;
  for (double x : w) z += std::exp(x);
  for (double x : w) entropy -= std::exp(x) / z * std::log(std::exp(x) / z);
  EXPECT_NEAR(lg.loss, entropy, 1e-14);
  for (double g : lg.grad) EXPECT_NEAR(g, 0.0, 1e-15);

  std::vector<double> shifted{3.2, 3.9, 3.5, 3.1};
  auto lh = ListNetLoss(std::span<const double>(w), std::span<const double>(shifted));
  for (double g : lh.grad) EXPECT_NEAR(g, 0.0, 1e-15);
}

TEST(ListNet, ShiftInvarianceProperty) {
  auto rng = DerivedRng(4, 0);
  for (int trial = 0; trial < 500; ++trial) {
    int m = static_cast<int>(UniformInt(rng, 2, 10));
    std::vector<double> w(m), f(m), g(m);
    double c = UniformDouble(rng, -50, 50);
    for (int i = 0; i < m; ++i) {
      w[i] = UniformDouble(rng, 0, 1);
      f[i] = UniformDouble(rng, -5, 5);
      g[i] = f[i] + c;
    }
    auto a = ListNetLoss(std::span<const double>(w), std::span<const double>(f));
    auto b = ListNetLoss(std::span<const double>(w), std::span<const double>(g));
    EXPECT_NEAR(a.loss, b.loss, 1e-12);
    for (int i = 0; i < m; ++i) EXPECT_NEAR(a.grad[i], b.grad[i], 1e-12);
  }
}

TEST(ListNet, RejectsDegenerateLists) {
  std::vector<double> one{0.5};
  EXPECT_THROW(ListNetLoss(std::span<const double>(one), std::span<const double>(one)), Error);
}

// Analytic vs central-difference gradients of every batch loss.
TEST(BatchLoss, GradientsMatchFiniteDifferences) {
  auto rng = DerivedRng(5, 0);
  for (Strategy s : {Strategy::kPointwiseXce, Strategy::kPointwiseMse,
                     Strategy::kRankNet, Strategy::kListNet}) {
    for (int trial = 0; trial < 100; ++trial) {
      int lists = static_cast<int>(UniformInt(rng, 1, 4));
      std::vector<std::vector<double>> w(lists), f(lists);
      for (int u = 0; u < lists; ++u) {
        int m = static_cast<int>(UniformInt(rng, 2, 8));
        for (int i = 0; i < m; ++i) {
          w[u].push_back(UniformDouble(rng, 0, 1));
          f[u].push_back(UniformDouble(rng, -3, 3));
        }
      }
      auto analytic = BatchLoss(s, w, f);
      for (int u = 0; u < lists; ++u)
        for (std::size_t i = 0; i < f[u].size(); ++i) {
          double x0 = f[u][i];
          double fd = CentralDifference([&](double v) { f[u][i] = v; },
                                        [&] { return BatchLoss(s, w, f).loss; }, x0);
          EXPECT_LT(RelativeError(analytic.grad[u][i], fd), 1e-6)
              << StrategyName(s) << " trial " << trial;
        }
    }
  }
}

TEST(BatchLoss, Reductions) {
  std::vector<std::vector<double>> w{{1.0, 0.0}, {0.5, 0.5}};
  std::vector<std::vector<double>> f{{0.0, 0.0}, {0.0, 0.0}};
  // Second list has no pair: RankNet averages over the first one only.
  EXPECT_NEAR(BatchLoss(Strategy::kRankNet, w, f).loss, kLn2, 1e-15);
  // Point-wise MSE: channels summed, lists averaged.
  EXPECT_NEAR(BatchLoss(Strategy::kPointwiseMse, w, f).loss, (1.0 + 0.5) / 2, 1e-15);
  EXPECT_NEAR(BatchLoss(Strategy::kListNet, w, f).loss, kLn2, 1e-15);
}

TEST(Strategy, ParseRoundTrip) {
  for (Strategy s : {Strategy::kPointwiseXce, Strategy::kPointwiseMse,
                     Strategy::kRankNet, Strategy::kListNet})
    EXPECT_EQ(ParseStrategy(StrategyName(s)), s);
  EXPECT_THROW(ParseStrategy("lambdarank"), Error);
}

}  // namespace
}  // namespace chanrank
