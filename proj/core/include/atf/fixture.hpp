// SPDX-License-Identifier: Apache-2.0
/**
 * @file   fixture.hpp
 * @brief  Synthetic moving-object videos in the on-disk dataset layout.
 *
 * Each video shows one object (square of side 2r or disc of radius r)
 * moving with a constant velocity over a textured background, bouncing off
 * the borders. Positions are integral, so the flow stored for frame t is the
 * exact displacement from frame t-1 on the object's pixels at frame t and
 * zero elsewhere. Depth is about 0.2 on the object and 0.8 behind it.
 */
#pragma once

#include <cstdint>
#include <filesystem>

#include "atf/dataset.hpp"

namespace atf {

enum class FixtureObject { kSquare, kDisc };

struct FixtureSpec {
  std::size_t videos = 1;      ///< training videos
  std::size_t test_videos = 0; ///< additional test videos
  std::size_t frames = 20;
  std::size_t size = 64; ///< square frames
  FixtureObject object = FixtureObject::kSquare;
  std::size_t radius = 8;
  int velocity_x = 2, velocity_y = 1;
  /// Object centre at frame 0; negative means the image centre.
  int start_x = -1, start_y = -1;
  std::uint64_t seed = 0;
};

/// Object centre of frame t (triangle-wave bounce inside the valid range).
std::pair<int, int> fixture_position(const FixtureSpec &spec, std::size_t t);

/// Writes root/train (and root/test) and returns the training layout.
/// Throws ConfigError when the object does not fit.
DatasetLayout generate_fixture(const FixtureSpec &spec, const std::filesystem::path &root);

} // namespace atf
