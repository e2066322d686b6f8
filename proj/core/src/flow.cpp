// SPDX-License-Identifier: Apache-2.0
#include "atf/flow.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <vector>

#include "atf/error.hpp"

namespace atf {

static_assert(std::endian::native == std::endian::little,
              "flow I/O assumes a little-endian host");

namespace {

std::vector<std::array<real, 3>> build_wheel() {
  constexpr int kRY = 15, kYG = 6, kGC = 4, kCB = 11, kBM = 13, kMR = 6;
  std::vector<std::array<real, 3>> wheel;
  auto ramp = [](int i, int n) { return std::floor(255.0 * i / n); };
  for (int i = 0; i < kRY; ++i)
    wheel.push_back({255, ramp(i, kRY), 0});
  for (int i = 0; i < kYG; ++i)
    wheel.push_back({255 - ramp(i, kYG), 255, 0});
  for (int i = 0; i < kGC; ++i)
    wheel.push_back({0, 255, ramp(i, kGC)});
  for (int i = 0; i < kCB; ++i)
    wheel.push_back({0, 255 - ramp(i, kCB), 255});
  for (int i = 0; i < kBM; ++i)
    wheel.push_back({ramp(i, kBM), 0, 255});
  for (int i = 0; i < kMR; ++i)
    wheel.push_back({255, 0, 255 - ramp(i, kMR)});
  for (auto &c : wheel)
    for (auto &v : c)
      v /= 255;
  return wheel;
}

const std::vector<std::array<real, 3>> &wheel() {
  static const auto w = build_wheel();
  return w;
}

} // namespace

Tensor read_flow_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::kMissingFile, "missing " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (bytes.size() < 4)
    fail(ErrorKind::kTruncated, path.string() + ": shorter than the header");
  float magic;
  std::memcpy(&magic, bytes.data(), 4);
  if (magic != kFlowMagic)
    fail(ErrorKind::kBadMagic, path.string() + ": sentinel is not 202021.25");
  if (bytes.size() < 12)
    fail(ErrorKind::kTruncated, path.string() + ": shorter than the header");
  std::int32_t w, h;
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16))
    fail(ErrorKind::kCorrupt, path.string() + ": implausible size " +
                                  std::to_string(w) + " x " + std::to_string(h));
  const auto uw = static_cast<std::size_t>(w), uh = static_cast<std::size_t>(h);
  const std::size_t count = 2 * uw * uh;
  if (bytes.size() - 12 < count * 4)
    fail(ErrorKind::kTruncated, path.string() + ": payload holds " +
                                    std::to_string((bytes.size() - 12) / 4) + " of " +
                                    std::to_string(count) + " floats");
  std::vector<float> raw(count);
  std::memcpy(raw.data(), bytes.data() + 12, count * 4);
  Tensor flow({2, uh, uw});
  const std::size_t plane = uw * uh;
  for (std::size_t i = 0; i < plane; ++i) {
    flow[i] = raw[2 * i];
    flow[plane + i] = raw[2 * i + 1];
  }
  return flow;
}

void write_flow_file(const Tensor &flow, const std::filesystem::path &path) {
  if (flow.rank() != 3 || flow.dim(0) != 2)
    fail(ErrorKind::kShape, "flow must be 2 x H x W, got " + shape_str(flow.shape()));
  const std::size_t h = flow.dim(1), w = flow.dim(2), plane = h * w;
  std::vector<float> raw(2 * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    raw[2 * i] = static_cast<float>(flow[i]);
    raw[2 * i + 1] = static_cast<float>(flow[plane + i]);
  }
  for (float v : raw)
    if (!std::isfinite(v))
      fail(ErrorKind::kNumeric, "flow for " + path.string() + " has a non-finite entry");
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    fail(ErrorKind::kIo, "cannot write " + path.string());
  const auto iw = static_cast<std::int32_t>(w), ih = static_cast<std::int32_t>(h);
  out.write(reinterpret_cast<const char *>(&kFlowMagic), 4);
  out.write(reinterpret_cast<const char *>(&iw), 4);
  out.write(reinterpret_cast<const char *>(&ih), 4);
  out.write(reinterpret_cast<const char *>(raw.data()),
            static_cast<std::streamsize>(raw.size() * 4));
  if (!out)
    fail(ErrorKind::kIo, "write failed for " + path.string());
}

std::array<real, 3> wheel_color(std::size_t k) { return wheel().at(k); }

real wheel_position(real u, real v) {
  const real a = std::atan2(-v, -u) / std::numbers::pi;
  return (a + 1) / 2 * static_cast<real>(kWheelColors - 1);
}

Tensor flow_to_color(const Tensor &flow) {
  if (flow.rank() != 3 || flow.dim(0) != 2)
    fail(ErrorKind::kShape, "flow must be 2 x H x W, got " + shape_str(flow.shape()));
  const std::size_t plane = flow.dim(1) * flow.dim(2);
  real max_rad = 0;
  for (std::size_t i = 0; i < plane; ++i)
    max_rad = std::max(max_rad, std::hypot(flow[i], flow[plane + i]));
  Tensor out({3, flow.dim(1), flow.dim(2)}, 1.0);
  if (max_rad == 0)
    return out;
  const auto &w = wheel();
  for (std::size_t i = 0; i < plane; ++i) {
    const real u = flow[i] / max_rad, v = flow[plane + i] / max_rad;
    const real rad = std::hypot(u, v);
    const real fk = wheel_position(u, v);
    const auto k0 = static_cast<std::size_t>(std::floor(fk));
    const std::size_t k1 = (k0 + 1) % kWheelColors;
    const real f = fk - static_cast<real>(k0);
    for (std::size_t c = 0; c < 3; ++c) {
      real col = (1 - f) * w[k0 % kWheelColors][c] + f * w[k1][c];
      col = rad <= 1 ? 1 - rad * (1 - col) : col * 0.75;
      out[c * plane + i] = col;
    }
  }
  return out;
}

} // namespace atf
