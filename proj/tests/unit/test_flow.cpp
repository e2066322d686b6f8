// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "atf/error.hpp"
#include "atf/flow.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace atf;
using atf::test::TempDir;

namespace {

Tensor read_back(const TempDir &dir, const Tensor &flow) {
  write_flow_file(flow, dir / "f.flo");
  return read_flow_file(dir / "f.flo");
}

ErrorKind kind_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kUsage;
}

} // namespace

TEST(FlowFile, RoundTripIsBitExact) {
  TempDir dir("flow");
  Rng rng(3);
  Tensor flow = test::random_tensor({2, 5, 7}, rng, -20, 20);
  for (auto &v : flow.data())
    v = static_cast<float>(v);
  EXPECT_EQ(read_back(dir, flow), flow);
}

TEST(FlowFile, ByteLevelWriterDecodes) {
  TempDir dir("flow");
  oracle::write_flo_bytes(dir / "k.flo", 2, 2, {1, -1, 1, -1, 1, -1, 1, -1});
  const Tensor t = read_flow_file(dir / "k.flo");
  ASSERT_EQ(t.shape(), (Shape{2, 2, 2}));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(t[i], 1.0);
    EXPECT_EQ(t[4 + i], -1.0);
  }
}

TEST(FlowFile, ChannelOrderFollowsInterleaving) {
  TempDir dir("flow");
  // pixel (y, x) holds u = 10y + x, v = -(10y + x)
  std::vector<float> uv;
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) {
      uv.push_back(static_cast<float>(10 * y + x));
      uv.push_back(-static_cast<float>(10 * y + x));
    }
  oracle::write_flo_bytes(dir / "k.flo", 3, 2, uv);
  const Tensor t = read_flow_file(dir / "k.flo");
  ASSERT_EQ(t.shape(), (Shape{2, 2, 3}));
  EXPECT_EQ(t[1 * 3 + 2], 12.0);
  EXPECT_EQ(t[6 + 1 * 3 + 2], -12.0);
}

TEST(FlowFile, ZeroFlowFileSize) {
  TempDir dir("flow");
  write_flow_file(Tensor({2, 4, 4}), dir / "z.flo");
  EXPECT_EQ(std::filesystem::file_size(dir / "z.flo"), 12u + 128u);
}

TEST(FlowFile, BadSentinel) {
  TempDir dir("flow");
  {
    std::ofstream out(dir / "bad.flo", std::ios::binary);
    const float zero = 0;
    const std::uint32_t one = 1;
    out.write(reinterpret_cast<const char *>(&zero), 4);
    out.write(reinterpret_cast<const char *>(&one), 4);
    out.write(reinterpret_cast<const char *>(&one), 4);
    out.write(reinterpret_cast<const char *>(&zero), 4);
    out.write(reinterpret_cast<const char *>(&zero), 4);
  }
  EXPECT_EQ(kind_of([&] { read_flow_file(dir / "bad.flo"); }), ErrorKind::kBadMagic);
}

TEST(FlowFile, TruncatedPayload) {
  TempDir dir("flow");
  write_flow_file(Tensor({2, 4, 4}, 1.0), dir / "t.flo");
  std::filesystem::resize_file(dir / "t.flo", 12 + 100);
  EXPECT_EQ(kind_of([&] { read_flow_file(dir / "t.flo"); }), ErrorKind::kTruncated);
}

TEST(FlowFile, NonFiniteRejectedBeforeWriting) {
  TempDir dir("flow");
  Tensor f({2, 2, 2});
  f[3] = std::nan("");
  EXPECT_THROW(write_flow_file(f, dir / "n.flo"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "n.flo"));
}

TEST(FlowFile, MissingFile) {
  TempDir dir("flow");
  EXPECT_EQ(kind_of([&] { read_flow_file(dir / "none.flo"); }), ErrorKind::kMissingFile);
}

TEST(FlowColor, WheelMatchesOracle) {
  const auto w = oracle::color_wheel();
  ASSERT_EQ(w.size(), kWheelColors);
  for (std::size_t k = 0; k < kWheelColors; ++k)
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(wheel_color(k)[c], w[k][c], 1e-12) << "color " << k;
}

TEST(FlowColor, ZeroFlowIsWhite) {
  const Tensor img = flow_to_color(Tensor({2, 3, 4}));
  for (real v : img.data())
    EXPECT_EQ(v, 1.0);
}

TEST(FlowColor, KnownAnglesMatchOracle) {
  Tensor flow({2, 3, 3});
  const double angles[9] = {0, 0.5, 1.2, 2.0, 3.0, -0.4, -1.5, -2.6, 3.14159};
  const double mags[9] = {1, 0.5, 0.25, 0.9, 0.3, 0.75, 0.6, 0.1, 0.45};
  for (int i = 0; i < 9; ++i) {
    flow[i] = mags[i] * std::cos(angles[i]);
    flow[9 + i] = mags[i] * std::sin(angles[i]);
  }
  const Tensor img = flow_to_color(flow);
  double max_rad = 0;
  for (int i = 0; i < 9; ++i)
    max_rad = std::max(max_rad, std::hypot(flow[i], flow[9 + i]));
  for (int i = 0; i < 9; ++i) {
    const auto want = oracle::flow_color(flow[i] / max_rad, flow[9 + i] / max_rad);
    for (int c = 0; c < 3; ++c)
      EXPECT_NEAR(img[c * 9 + i], want[c], 1e-12) << "pixel " << i << " channel " << c;
  }
}

TEST(FlowColor, OppositeDirectionsAreHalfAWheelApart) {
  const real a = wheel_position(1, 0), b = wheel_position(-1, 0);
  EXPECT_NEAR(std::abs(a - b), (kWheelColors - 1) / 2.0, 1e-12);
  const real c = wheel_position(0.3, -0.7), d = wheel_position(-0.3, 0.7);
  EXPECT_NEAR(std::abs(c - d), (kWheelColors - 1) / 2.0, 1e-12);
}
