// SPDX-License-Identifier: Apache-2.0
/**
 * @file   flow.hpp
 * @brief  Raw optical-flow files and color-wheel rendering.
 *
 * Flow fields are 2 x H x W tensors: channel 0 holds u (x displacement,
 * pixels per frame), channel 1 holds v (y displacement, downwards).
 *
 * File layout, little-endian: float32 202021.25, int32 W, int32 H, then
 * H * W interleaved (u, v) float32 pairs in row-major order.
 */
#pragma once

#include <array>
#include <filesystem>

#include "atf/tensor.hpp"

namespace atf {

inline constexpr float kFlowMagic = 202021.25f;

/// BadMagic for a wrong sentinel, Truncated for a short payload.
Tensor read_flow_file(const std::filesystem::path &path);
/// Values are narrowed to float32. Non-finite entries raise an error before
/// anything is written.
void write_flow_file(const Tensor &flow, const std::filesystem::path &path);

/// Number of colors on the standard flow wheel.
inline constexpr std::size_t kWheelColors = 55;

/// Wheel color `k` (0..54) as RGB in [0, 1].
std::array<real, 3> wheel_color(std::size_t k);
/// Fractional wheel index in [0, 54] for direction (u, v).
real wheel_position(real u, real v);

/// 3 x H x W RGB in [0, 1]. Magnitudes are normalized by the frame maximum;
/// zero motion is white.
Tensor flow_to_color(const Tensor &flow);

} // namespace atf
