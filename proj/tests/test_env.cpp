#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "srcseek/env.hpp"

using namespace srcseek;

TEST(AcousticSpl, ClampedValueAtSource) {
  AcousticSource src;
  // 20 log10(0.00495 / (sqrt(2) * 0.01) / 20e-6), evaluated independently
  const double expected = 20.0 * std::log10(0.00495 / (std::sqrt(2.0) * 0.01) / 20e-6);
  EXPECT_NEAR(acoustic_spl(src.location, src), expected, 1e-12);
  EXPECT_NEAR(acoustic_spl(src.location, src), 84.8612, 1e-4);
}

TEST(AcousticSpl, OneMeterIsFortyBelowClamp) {
  AcousticSource src{{0, 0}};
  EXPECT_NEAR(acoustic_spl({1.0, 0.0}, src), 44.8612, 1e-4);
  EXPECT_NEAR(acoustic_spl({0.0, 0.0}, src) - acoustic_spl({1.0, 0.0}, src), 40.0, 1e-9);
}

TEST(AcousticSpl, RadialSymmetry) {
  AcousticSource src{{0.2, -0.3}};
  EXPECT_DOUBLE_EQ(acoustic_spl({0.7, -0.3}, src), acoustic_spl({0.2, 0.2}, src));
}

TEST(AcousticSpl, TwentyDbPerDecade) {
  AcousticSource src{{0, 0}};
  for (double r : {0.01, 0.013, 0.1, 0.37, 1.0, 2.5}) {
    EXPECT_NEAR(acoustic_spl({r, 0}, src) - acoustic_spl({10 * r, 0}, src), 20.0, 1e-9) << r;
  }
}

TEST(AcousticSpl, StrictlyDecreasingBeyondClamp) {
  AcousticSource src{{0, 0}};
  double prev = acoustic_spl({0.01, 0}, src);
  for (int i = 1; i <= 300; ++i) {
    const double r = 0.01 + i * 0.01;
    const double v = acoustic_spl({0, r}, src);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(AcousticSpl, ConstantInsideClamp) {
  AcousticSource src{{0.5, 0.5}};
  const double at = acoustic_spl(src.location, src);
  EXPECT_EQ(acoustic_spl({0.505, 0.5}, src), at);
  EXPECT_EQ(acoustic_spl({0.5, 0.49}, src), at);
}

TEST(AcousticSpl, RejectsBadSource) {
  AcousticSource src;
  src.p0 = 0;
  EXPECT_THROW(PointSourceField{src}, std::invalid_argument);
  src = {};
  src.r_min = -1;
  EXPECT_THROW(src.validate(), std::invalid_argument);
}

TEST(NoisySample, ZeroNoiseIsClean) {
  PointSourceField f{AcousticSource{}};
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const Position p{-1 + 0.1 * i, 0.3};
    EXPECT_EQ(noisy_sample(f, p, NoiseConfig::none(), rng), f.value(p));
  }
}

TEST(NoisySample, SeededSequenceRepeats) {
  PointSourceField f{AcousticSource{}};
  Rng a(42), b(42);
  NoiseConfig cfg;
  for (int i = 0; i < 200; ++i) {
    EXPECT_EQ(noisy_sample(f, {0.1, 0.2}, cfg, a), noisy_sample(f, {0.1, 0.2}, cfg, b));
  }
}

TEST(NoisySample, GaussianMeanConverges) {
  PointSourceField f{AcousticSource{}};
  NoiseConfig cfg;
  cfg.outlier_probability = 0;
  Rng rng(3);
  const Position p{0.0, 0.0};
  double sum = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += noisy_sample(f, p, cfg, rng);
  EXPECT_NEAR(sum / n, f.value(p), 3.0 * cfg.gaussian_sigma / 100.0);
}

TEST(NoisySample, OutliersAreLargePositiveSpikes) {
  NoiseConfig cfg{0.0, 1.0, 15.0, 30.0};
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    const double v = perturb(50.0, cfg, rng);
    EXPECT_GE(v, 65.0);
    EXPECT_LE(v, 80.0);
  }
}

TEST(NoisySample, RejectsBadConfig) {
  EXPECT_THROW((NoiseConfig{-1, 0, 0, 0}.validate()), std::invalid_argument);
  EXPECT_THROW((NoiseConfig{1, 1.5, 15, 30}.validate()), std::invalid_argument);
  EXPECT_THROW((NoiseConfig{1, 0.1, 30, 15}.validate()), std::invalid_argument);
}

TEST(GridScan, ResolutionTwoGivesCorners) {
  PointSourceField f{AcousticSource{}};
  const GridField g = grid_scan(f, ArenaBounds{}, 2);
  ASSERT_EQ(g.values.size(), 4u);
  EXPECT_EQ(g.xs, (std::vector<double>{-1, 1}));
  EXPECT_EQ(g.ys, (std::vector<double>{-1, 1}));
  EXPECT_EQ(g.at(1, 1), f.value({1, 1}));
}

TEST(GridScan, MaximumAtNodeNearestSource) {
  AcousticSource src{{0.95, 0.95}};
  PointSourceField f{src};
  const GridField g = grid_scan(f, ArenaBounds{}, 41);
  ASSERT_EQ(g.values.size(), 1681u);
  std::size_t best = 0, nearest = 0;
  double best_d = 1e9;
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    if (g.values[k] > g.values[best]) best = k;
    const Position p{g.xs[k % 41], g.ys[k / 41]};
    if (distance(p, src.location) < best_d) {
      best_d = distance(p, src.location);
      nearest = k;
    }
  }
  EXPECT_EQ(best, nearest);
}

TEST(GridScan, MatchesPointwiseEvaluation) {
  PointSourceField f{AcousticSource{{-0.3, 0.4}}};
  const GridField g = grid_scan(f, ArenaBounds{{-1, -0.5}, {2, 1}}, 17);
  for (std::size_t j = 0; j < g.ys.size(); ++j) {
    for (std::size_t i = 0; i < g.xs.size(); ++i) EXPECT_NEAR(g.at(i, j), f.value({g.xs[i], g.ys[j]}), 1e-12);
  }
}

TEST(GridScan, RejectsResolutionBelowTwo) {
  PointSourceField f{AcousticSource{}};
  EXPECT_THROW(grid_scan(f, ArenaBounds{}, 1), std::invalid_argument);
}

TEST(InterpField, ReproducesNodes) {
  PointSourceField f{AcousticSource{}};
  const GridField g = grid_scan(f, ArenaBounds{}, 9);
  InterpolatedField in{g};
  for (std::size_t j = 0; j < g.ys.size(); ++j) {
    for (std::size_t i = 0; i < g.xs.size(); ++i) EXPECT_EQ(in.value({g.xs[i], g.ys[j]}), g.at(i, j));
  }
}

TEST(InterpField, CellCenterAverage) {
  GridField g{{0, 1}, {0, 1}, {0, 0, 0, 4}};
  InterpolatedField in{g};
  EXPECT_DOUBLE_EQ(in.value({0.5, 0.5}), 1.0);
}

TEST(InterpField, ClampsOutsideHull) {
  GridField g{{0, 1}, {0, 1}, {0, 2, 6, 8}};
  InterpolatedField in{g};
  EXPECT_DOUBLE_EQ(in.value({5, 0.5}), in.value({1, 0.5}));
  EXPECT_DOUBLE_EQ(in.value({-3, -3}), 0.0);
  EXPECT_DOUBLE_EQ(in.value({0.25, 9}), in.value({0.25, 1}));
}

TEST(InterpField, ContinuousAcrossCellEdges) {
  PointSourceField f{AcousticSource{}};
  InterpolatedField in{grid_scan(f, ArenaBounds{}, 11)};
  for (double x = -0.8; x < 0.9; x += 0.2) {
    const double e = 1e-9;
    EXPECT_NEAR(in.value({x - e, 0.13}), in.value({x + e, 0.13}), 1e-6);
    EXPECT_NEAR(in.value({0.37, x - e}), in.value({0.37, x + e}), 1e-6);
  }
}

TEST(InterpField, RejectsIrregularGrid) {
  EXPECT_THROW((InterpolatedField{GridField{{0}, {0, 1}, {1, 2}}}), std::invalid_argument);
  EXPECT_THROW((InterpolatedField{GridField{{0, 0}, {0, 1}, {1, 2, 3, 4}}}), std::invalid_argument);
  EXPECT_THROW((InterpolatedField{GridField{{0, 1}, {0, 1}, {1, 2, 3}}}), std::invalid_argument);
}

TEST(GridCsv, RoundTrip) {
  PointSourceField f{AcousticSource{}};
  const GridField g = grid_scan(f, ArenaBounds{}, 7);
  std::stringstream ss;
  write_grid_csv(ss, g);
  const GridField back = read_grid_csv(ss);
  ASSERT_EQ(back.values.size(), g.values.size());
  for (std::size_t k = 0; k < g.values.size(); ++k) EXPECT_NEAR(back.values[k], g.values[k], 1e-6);
  std::stringstream again;
  write_grid_csv(again, back);
  std::stringstream first;
  write_grid_csv(first, g);
  EXPECT_EQ(again.str(), first.str());
}

TEST(GridCsv, RejectsBadHeader) {
  std::stringstream ss("a,b,c\n0,0,1\n");
  EXPECT_ANY_THROW(read_grid_csv(ss));
}
