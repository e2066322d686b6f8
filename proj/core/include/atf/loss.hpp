// SPDX-License-Identifier: Apache-2.0
/**
 * @file   loss.hpp
 * @brief  Pixel-position-aware loss and the four-term training objective.
 *
 * Per sample, with S clamped to [eps, 1 - eps]:
 *   w     = 1 + mu * |AvgPool_k(GT) - GT|        (zero padding, divisor k*k)
 *   wBCE  = sum(w * BCE(S, GT)) / sum(w)
 *   I     = sum(w * S * GT), U = sum(w * (S + GT))
 *   wIoU  = 1 - (I + smooth) / (U - I + smooth)
 *   Omega = wBCE + wIoU
 * Batched inputs give the mean over samples.
 */
#pragma once

#include "atf/atfnet.hpp"
#include "atf/autograd.hpp"
#include "atf/config.hpp"

namespace atf {

struct LossConfig {
  real lambda1 = 1; ///< depth branch
  real lambda2 = 1; ///< flow branch
  real lambda3 = 1; ///< fused map
  real weight_multiplier = 5;
  std::size_t window = 31;
  real smooth = 1;
  real clamp_eps = 1e-7;

  /// ConfigError on negative lambdas, an even window, or eps outside (0, 0.5).
  void validate() const;
  friend bool operator==(const LossConfig &, const LossConfig &) = default;
};

/// Position weights w for an N x 1 x H x W mask.
Tensor ppa_weights(const Tensor &gt, const LossConfig &cfg = {});

/// S and GT are N x 1 x H x W; returns a scalar.
Var ppa_loss(const Var &s, const Tensor &gt, const LossConfig &cfg = {});

struct LossBreakdown {
  Var total;
  real rgb = 0, depth = 0, flow = 0, fused = 0; ///< unweighted terms
};

/// Omega(S_rgb) + l1 Omega(S_depth) + l2 Omega(S_flow) + l3 Omega(S_f);
/// undefined branch maps contribute nothing.
LossBreakdown total_loss(const SaliencyOutputs &outputs, const Tensor &gt,
                         const LossConfig &cfg = {});

} // namespace atf
