// SPDX-License-Identifier: Apache-2.0
/**
 * @file   ops.hpp
 * @brief  Differentiable primitives on N x C x H x W feature maps.
 */
#pragma once

#include <initializer_list>
#include <span>
#include <vector>

#include "atf/autograd.hpp"

namespace atf::nn {

/// 2-D cross-correlation. `bias` may be an undefined Var.
/// weight: O x C x k x k, square kernels only.
Var conv2d(const Var &x, const Var &weight, const Var &bias, int stride,
           int padding);

/// Group normalization with per-channel affine terms; biased variance.
Var group_norm(const Var &x, const Var &gamma, const Var &beta,
               std::size_t groups, real eps = 1e-5);

/// Batch normalization. In training mode the running statistics are updated
/// with `momentum`; in evaluation mode they are used as constants.
Var batch_norm(const Var &x, const Var &gamma, const Var &beta,
               Tensor &running_mean, Tensor &running_var, bool training,
               real momentum = 0.1, real eps = 1e-5);

Var relu(const Var &x);
Var sigmoid(const Var &x);
Var add(const Var &a, const Var &b);
Var mul(const Var &a, const Var &b);
Var scale(const Var &x, real factor);

/// x (N x C x H x W) times gate (N x 1 x H x W), broadcast over channels.
Var mul_position_gate(const Var &x, const Var &gate);

Var concat_channels(std::span<const Var> parts);
inline Var concat_channels(std::initializer_list<Var> parts) {
  std::vector<Var> v(parts);
  return concat_channels(std::span<const Var>(v));
}

/// Max pooling with implicit -inf padding; ties resolve to the first
/// maximum in row-major window order.
Var max_pool2d(const Var &x, int kernel, int stride, int padding);

/// Bilinear resampling with half-pixel centers (align_corners = false).
Var resize_bilinear(const Var &x, std::size_t out_h, std::size_t out_w);

/// Softmax across the channel axis at every pixel.
Var softmax_channels(const Var &x);

/// Scalar sum of all elements.
Var sum(const Var &x);
/// Scalar mean of all elements.
Var mean(const Var &x);

/// Non-differentiable bilinear resize used by data paths.
Tensor resize_bilinear(const Tensor &x, std::size_t out_h, std::size_t out_w);

} // namespace atf::nn
