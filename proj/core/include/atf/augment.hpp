// SPDX-License-Identifier: Apache-2.0
/**
 * @file   augment.hpp
 * @brief  Training-time augmentation applied jointly to all modalities.
 *
 * Geometric ops move every raster identically and rewrite flow vectors:
 * a horizontal flip maps (u, v) to (-u, v); a quarter turn counter-clockwise
 * maps (u, v) to (v, -u). Pepper noise zeroes random RGB pixels only.
 */
#pragma once

#include "atf/dataset.hpp"
#include "atf/rng.hpp"

namespace atf {

struct AugmentPolicy {
  bool rotate90 = true;
  bool hflip = true;
  bool pepper = true;
  real pepper_rate = 0.05;

  friend bool operator==(const AugmentPolicy &, const AugmentPolicy &) = default;
};

FrameSample hflip(const FrameSample &s);
/// `quarter_turns` counter-clockwise rotations (any integer, taken mod 4).
FrameSample rotate90(const FrameSample &s, int quarter_turns);
FrameSample add_pepper(const FrameSample &s, real rate, Rng &rng);

/// Flip with probability 1/2, a uniform number of quarter turns, then pepper,
/// each only when enabled by `policy`.
FrameSample augment_sample(const FrameSample &s, Rng &rng, const AugmentPolicy &policy);

} // namespace atf
