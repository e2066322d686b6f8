// SPDX-License-Identifier: Apache-2.0
/**
 * @file   image_io.hpp
 * @brief  PNG rasters as C x H x W tensors in [0, 1].
 */
#pragma once

#include <filesystem>

#include "atf/tensor.hpp"

namespace atf {

/// 3 x H x W, RGB order. 8- and 16-bit files are accepted; gray files are
/// replicated to three channels, alpha is dropped.
Tensor read_rgb_png(const std::filesystem::path &path);
/// 1 x H x W; 16-bit data is divided by 65535, 8-bit by 255.
Tensor read_gray_png(const std::filesystem::path &path);
/// 1 x H x W in {0, 1}. Any pixel other than 0 or the maximum code raises
/// InvalidMask.
Tensor read_mask_png(const std::filesystem::path &path);

struct ImageSize {
  std::size_t height = 0, width = 0;
  friend bool operator==(const ImageSize &, const ImageSize &) = default;
};
/// Decodes the header only.
ImageSize read_png_size(const std::filesystem::path &path);

/// Bilinear (half-pixel centers) resize of a C x H x W raster.
Tensor resize_chw(const Tensor &image, std::size_t height, std::size_t width);

/// 8-bit output with round-to-nearest after clamping to [0, 1].
void write_rgb_png(const std::filesystem::path &path, const Tensor &rgb);
void write_gray8_png(const std::filesystem::path &path, const Tensor &gray);
void write_gray16_png(const std::filesystem::path &path, const Tensor &gray);

} // namespace atf
