// SPDX-License-Identifier: Apache-2.0
#include "atf/fixture.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "atf/error.hpp"
#include "atf/flow.hpp"
#include "atf/image_io.hpp"
#include "atf/rng.hpp"

namespace fs = std::filesystem;

namespace atf {

namespace {

int bounce(long offset, long span) {
  if (span <= 0)
    return 0;
  const long period = 2 * span;
  long m = offset % period;
  if (m < 0)
    m += period;
  return static_cast<int>(m <= span ? m : period - m);
}

bool covers(const FixtureSpec &spec, int cx, int cy, std::size_t x, std::size_t y) {
  const auto r = static_cast<real>(spec.radius);
  const real dx = static_cast<real>(x) + 0.5 - cx, dy = static_cast<real>(y) + 0.5 - cy;
  if (spec.object == FixtureObject::kSquare)
    return std::abs(dx) < r && std::abs(dy) < r;
  return dx * dx + dy * dy < r * r;
}

struct Texture {
  // Three sinusoids per channel.
  real fx[3][3], fy[3][3], phase[3][3];
};

Texture random_texture(Rng &rng) {
  Texture t{};
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 3; ++k) {
      t.fx[c][k] = rng.uniform(0.05, 0.4);
      t.fy[c][k] = rng.uniform(0.05, 0.4);
      t.phase[c][k] = rng.uniform(0, 2 * std::numbers::pi);
    }
  return t;
}

real texture_at(const Texture &t, int c, std::size_t x, std::size_t y) {
  real v = 0;
  for (int k = 0; k < 3; ++k)
    v += std::sin(t.fx[c][k] * static_cast<real>(x) + t.fy[c][k] * static_cast<real>(y) +
                  t.phase[c][k]);
  return 0.45 + 0.12 * v;
}

void write_video(const FixtureSpec &spec, const DatasetLayout &layout, const std::string &id,
                 std::uint64_t seed) {
  Rng rng(seed);
  const FixtureSpec &vs = spec;
  const Texture bg = random_texture(rng);
  const real obj[3] = {rng.uniform(0.8, 0.95), rng.uniform(0.05, 0.25), rng.uniform(0.05, 0.2)};
  const std::size_t n = spec.size, plane = n * n;
  std::vector<real> noise(plane);
  for (auto &v : noise)
    v = rng.uniform(-0.03, 0.03);

  std::pair<int, int> prev = fixture_position(vs, 0);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const auto [cx, cy] = fixture_position(vs, t);
    const int du = t == 0 ? 0 : cx - prev.first, dv = t == 0 ? 0 : cy - prev.second;
    Tensor rgb({3, n, n}), depth({1, n, n}), gt({1, n, n}), flow({2, n, n});
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) {
        const std::size_t i = y * n + x;
        const bool on = covers(vs, cx, cy, x, y);
        for (int c = 0; c < 3; ++c)
          rgb[c * plane + i] = std::clamp(
              (on ? obj[c] : texture_at(bg, c, x, y)) + noise[i], real{0}, real{1});
        depth[i] = on ? 0.2 + 0.2 * noise[i] : 0.8 + 0.05 * static_cast<real>(y) / n;
        gt[i] = on ? 1 : 0;
        flow[i] = on ? du : 0;
        flow[plane + i] = on ? dv : 0;
      }
    write_rgb_png(layout.frame_path(id, Channel::kRgb, t), rgb);
    write_gray16_png(layout.frame_path(id, Channel::kDepth, t), depth);
    write_gray8_png(layout.frame_path(id, Channel::kGt, t), gt);
    write_flow_file(flow, layout.frame_path(id, Channel::kFlow, t));
    prev = {cx, cy};
  }
}

} // namespace

std::pair<int, int> fixture_position(const FixtureSpec &spec, std::size_t t) {
  const long lo = static_cast<long>(spec.radius);
  const long span = static_cast<long>(spec.size) - 2 * lo;
  const long tt = static_cast<long>(t);
  const long sx = spec.start_x < 0 ? static_cast<long>(spec.size) / 2 : spec.start_x;
  const long sy = spec.start_y < 0 ? static_cast<long>(spec.size) / 2 : spec.start_y;
  return {static_cast<int>(lo + bounce(sx - lo + spec.velocity_x * tt, span)),
          static_cast<int>(lo + bounce(sy - lo + spec.velocity_y * tt, span))};
}

DatasetLayout generate_fixture(const FixtureSpec &spec, const fs::path &root) {
  if (spec.videos + spec.test_videos == 0 || spec.frames == 0 || spec.size == 0)
    fail(ErrorKind::kConfig, "fixture needs at least one video, frame and pixel");
  if (spec.radius == 0 || 2 * spec.radius > spec.size)
    fail(ErrorKind::kConfig, "fixture object of radius " + std::to_string(spec.radius) +
                                 " does not fit a " + std::to_string(spec.size) + " frame");
  const int lo = static_cast<int>(spec.radius), hi = static_cast<int>(spec.size - spec.radius);
  for (int s : {spec.start_x, spec.start_y})
    if (s >= 0 && (s < lo || s > hi))
      fail(ErrorKind::kConfig, "fixture start position outside [" + std::to_string(lo) + ", " +
                                   std::to_string(hi) + "]");
  DatasetLayout train{root, Split::kTrain, {}}, test{root, Split::kTest, {}};
  for (std::size_t v = 0; v < spec.videos + spec.test_videos; ++v) {
    const bool is_train = v < spec.videos;
    char id[32];
    std::snprintf(id, sizeof id, "video%03zu", v);
    DatasetLayout &layout = is_train ? train : test;
    write_video(spec, layout, id, Rng::derive(spec.seed, v));
    layout.videos.push_back({id, spec.frames});
  }
  fs::create_directories(root / "train");
  if (spec.test_videos)
    fs::create_directories(root / "test");
  return train;
}

} // namespace atf
