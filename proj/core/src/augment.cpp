// SPDX-License-Identifier: Apache-2.0
#include "atf/augment.hpp"

namespace atf {

namespace {

Tensor flip_raster(const Tensor &t) {
  const std::size_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  Tensor out(t.shape());
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        out[(k * h + y) * w + x] = t[(k * h + y) * w + (w - 1 - x)];
  return out;
}

// One counter-clockwise quarter turn: out(y', x') = in(x', W - 1 - y').
Tensor turn_raster(const Tensor &t) {
  const std::size_t c = t.dim(0), h = t.dim(1), w = t.dim(2);
  Tensor out({c, w, h});
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t yo = 0; yo < w; ++yo)
      for (std::size_t xo = 0; xo < h; ++xo)
        out[(k * w + yo) * h + xo] = t[(k * h + xo) * w + (w - 1 - yo)];
  return out;
}

} // namespace

FrameSample hflip(const FrameSample &s) {
  FrameSample out = s;
  out.rgb = flip_raster(s.rgb);
  out.depth = flip_raster(s.depth);
  out.gt = flip_raster(s.gt);
  out.flow = flip_raster(s.flow);
  const std::size_t plane = out.flow.dim(1) * out.flow.dim(2);
  for (std::size_t i = 0; i < plane; ++i)
    out.flow[i] = -out.flow[i];
  return out;
}

FrameSample rotate90(const FrameSample &s, int quarter_turns) {
  FrameSample out = s;
  const int turns = ((quarter_turns % 4) + 4) % 4;
  for (int i = 0; i < turns; ++i) {
    out.rgb = turn_raster(out.rgb);
    out.depth = turn_raster(out.depth);
    out.gt = turn_raster(out.gt);
    Tensor f = turn_raster(out.flow);
    const std::size_t plane = f.dim(1) * f.dim(2);
    for (std::size_t k = 0; k < plane; ++k) {
      const real u = f[k], v = f[plane + k];
      f[k] = v;
      f[plane + k] = -u;
    }
    out.flow = std::move(f);
  }
  return out;
}

FrameSample add_pepper(const FrameSample &s, real rate, Rng &rng) {
  FrameSample out = s;
  if (rate <= 0)
    return out;
  const std::size_t plane = out.rgb.dim(1) * out.rgb.dim(2);
  for (std::size_t i = 0; i < plane; ++i)
    if (rng.uniform() < rate)
      for (std::size_t c = 0; c < 3; ++c)
        out.rgb[c * plane + i] = 0;
  return out;
}

FrameSample augment_sample(const FrameSample &s, Rng &rng, const AugmentPolicy &policy) {
  FrameSample out = s;
  if (policy.hflip && rng.uniform() < 0.5)
    out = hflip(out);
  if (policy.rotate90)
    out = rotate90(out, static_cast<int>(rng.below(4)));
  if (policy.pepper)
    out = add_pepper(out, policy.pepper_rate, rng);
  return out;
}

} // namespace atf
