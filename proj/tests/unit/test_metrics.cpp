// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include <gtest/gtest.h>

#include "atf/error.hpp"
#include "atf/metrics.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace atf;
using test::random_mask;
using test::random_tensor;

namespace {

Tensor map2d(std::size_t h, std::size_t w, std::vector<real> v) {
  return Tensor({1, h, w}, std::move(v));
}

oracle::Map to_map(const Tensor &t) {
  return {t.dim(1), t.dim(2), std::vector<double>(t.data().begin(), t.data().end())};
}

} // namespace

TEST(Metrics, MaeCases) {
  const Tensor g = map2d(2, 2, {0, 1, 1, 0});
  EXPECT_EQ(mae(g, g), 0.0);
  EXPECT_EQ(mae(map2d(2, 2, {1, 0, 0, 1}), g), 1.0);
  EXPECT_NEAR(mae(map2d(2, 2, {0.2, 0.8, 0.5, 0.0}), g), 0.225, 1e-15);
  EXPECT_THROW(mae(Tensor({1, 2, 3}), g), Error);
}

TEST(Metrics, FMeasureCases) {
  const Tensor g = map2d(2, 2, {0, 1, 1, 0});
  EXPECT_DOUBLE_EQ(f_measure(g, g).max, 1.0);
  EXPECT_EQ(f_measure(Tensor({1, 2, 2}), g).max, 0.0);

  // one true and one false positive, recall 1
  const Tensor g1 = map2d(2, 2, {1, 0, 0, 0});
  const FMeasure f = f_measure(map2d(2, 2, {0.9, 0.6, 0.1, 0.1}), g1);
  const real want = 1.3 * 0.5 / (0.3 * 0.5 + 1);
  bool found = false;
  for (real v : f.curve)
    found = found || std::abs(v - want) < 1e-12;
  EXPECT_TRUE(found);
  EXPECT_NEAR(want, 0.5652, 1e-4);

  try {
    f_measure(g, Tensor({1, 2, 2}));
    FAIL() << "no error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyGroundTruth);
  }
}

TEST(Metrics, SMeasureCases) {
  Rng rng(1);
  const Tensor g = random_mask({1, 8, 8}, rng, 0.4);
  EXPECT_NEAR(s_measure(g, g), 1.0, 1e-9);
  for (int i = 0; i < 20; ++i) {
    Tensor s = random_tensor({1, 8, 8}, rng, 0, 1);
    const real v = s_measure(s, g);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const real c = s_measure(Tensor({1, 8, 8}, 0.5), g);
  EXPECT_TRUE(std::isfinite(c));
}

TEST(Metrics, EMeasureCases) {
  Rng rng(2);
  const Tensor g = random_mask({1, 6, 6}, rng, 0.5);
  const EMeasure self = e_measure(g, g);
  // every threshold below 1 reproduces G; only t = 1 switches everything off
  for (std::size_t k = 0; k + 1 < self.curve.size(); ++k)
    EXPECT_NEAR(self.curve[k], 1.0, 1e-9) << k;
  EXPECT_TRUE(std::isfinite(e_measure(Tensor({1, 6, 6}, 0.3), g).mean));
}

TEST(Metrics, EMeasureComplementIsSmall) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor g = random_mask({1, 4, 4}, rng, 0.5);
    real fg = 0;
    for (real v : g.data())
      fg += v;
    if (fg == 0 || fg == 16)
      continue;
    Tensor s = g;
    for (auto &v : s.data())
      v = 1 - v;
    const EMeasure e = e_measure(s, g);
    const auto want = oracle::e_curve(to_map(s), to_map(g));
    for (std::size_t k = 0; k + 1 < e.curve.size(); ++k) {
      EXPECT_LT(e.curve[k], 0.5);
      EXPECT_NEAR(e.curve[k], want[k], 1e-12);
    }
  }
}

TEST(Metrics, MatchOraclesOnRandomPairs) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor g = random_mask({1, 8, 8}, rng, rng.uniform(0.05, 0.95));
    const Tensor s = random_tensor({1, 8, 8}, rng, 0, 1);
    const oracle::Map ms = to_map(s), mg = to_map(g);
    EXPECT_NEAR(mae(s, g), oracle::mae(ms, mg), 1e-6);
    EXPECT_NEAR(s_measure(s, g), oracle::s_measure(ms, mg), 1e-6);
    EXPECT_NEAR(e_measure(s, g).mean, oracle::mean_e(ms, mg), 1e-6);
    real fg = 0;
    for (real v : g.data())
      fg += v;
    if (fg > 0) {
      EXPECT_NEAR(f_measure(s, g).max, oracle::max_f(ms, mg), 1e-6);
    }
  }
}

TEST(Metrics, IdentityScores) {
  Rng rng(5);
  const Tensor g = random_mask({1, 16, 16}, rng, 0.3);
  const FrameScores f = score_frame(g, g);
  EXPECT_EQ(f.mae, 0.0);
  EXPECT_DOUBLE_EQ(f.max_f, 1.0);
  EXPECT_NEAR(f.s_alpha, 1.0, 1e-9);
  EXPECT_NEAR(f.e_phi, (255 + 0.25) / 256, 1e-9); // t = 1 leaves nothing on
}

TEST(Metrics, HalfMapOnBalancedMask) {
  Tensor g({1, 4, 4});
  for (std::size_t i = 0; i < 8; ++i)
    g[i] = 1;
  EXPECT_DOUBLE_EQ(mae(Tensor({1, 4, 4}, 0.5), g), 0.5);
}

TEST(Metrics, AccumulatorIsFrameWeighted) {
  MetricsAccumulator acc;
  FrameScores a, b, c;
  a.mae = 0.1;
  b.mae = 0.2;
  c.mae = 0.6;
  a.max_f = b.max_f = 0.5;
  c.f_defined = false;
  acc.add("v1", a);
  acc.add("v1", b);
  acc.add("v2", c);
  const MetricsReport r = acc.finish();
  ASSERT_EQ(r.videos.size(), 2u);
  EXPECT_NEAR(r.videos[0].mae, 0.15, 1e-15);
  EXPECT_NEAR(r.overall.mae, 0.3, 1e-15);
  EXPECT_EQ(r.overall.f_frames, 2u);
  EXPECT_NEAR(r.overall.max_f, 0.5, 1e-15);
  EXPECT_NE(format_report_keyvalues(r).find("overall.mae"), std::string::npos);
}
