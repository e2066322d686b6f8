// SPDX-License-Identifier: Apache-2.0
/**
 * @file   mea.hpp
 * @brief  Encoder-level cross-modal aggregation.
 *
 * For level i with inputs F_r, F_f, F_d (c x w x h each):
 *   Fr' = Proj(F_r), Ff' = Proj(F_f), Fd' = Proj(F_d)      (c/2 channels)
 *   A   = row-softmax(Fd'^T Ff')                           ((wh) x (wh))
 *   B   = MaxPool3x3(Proj(Concat(F_d, reshape(Ff' A))))    (c/2 channels)
 *   C   = BConv(Concat(Fr' * B, Fr'))                      (c_fuse channels)
 *   Theta_i = BConv(Concat(MaxPool2x2/2(Theta_{i-1}), C)), Theta_1 = BConv(C)
 */
#pragma once

#include <optional>
#include <span>

#include "atf/layers.hpp"
#include "atf/model_config.hpp"

namespace atf {

struct MeaParams {
  std::size_t level = 1;
  std::size_t channels = 0;
  ConvParams reduce_rgb, reduce_flow, reduce_depth;
  ConvParams fuse_proj;
  BConvParams rgb_fuse;
  BConvParams theta;
};

/// Single-sample values exposed for inspection.
struct MeaIntermediates {
  Tensor affinity;   ///< A, (wh) x (wh), batch item 0
  Tensor fused;      ///< B, N x c/2 x w x h
  Tensor rgb_fused;  ///< C, N x c_fuse x w x h
};

MeaParams build_mea(ParamStore &store, const std::string &prefix,
                    std::size_t level, std::size_t channels, std::size_t c_fuse,
                    const NormSpec &norm, Rng &rng);

/// `theta_prev` must be present iff params.level >= 2 and have twice the
/// spatial size of the level inputs.
Var mea_forward(const MeaParams &params, const Var &f_rgb, const Var &f_flow,
                const Var &f_depth, const std::optional<Var> &theta_prev,
                const RunContext &ctx = {}, MeaIntermediates *inspect = nullptr);

/// Differentiable reshape(Ff' x row-softmax(Fd'^T Ff')) for N x k x h x w
/// inputs. Evaluated in row blocks so the (wh) x (wh) matrix is never stored.
Var affinity_transfer(const Var &depth_reduced, const Var &flow_reduced);

/// Explicit affinity matrix A of batch item `n` (tests and inspection).
Tensor affinity_matrix(const Tensor &depth_reduced, const Tensor &flow_reduced,
                       std::size_t n = 0);

/// Concatenation baseline used when MEA is disabled.
struct ConcatFuseParams {
  ConvParams proj;
};

ConcatFuseParams build_concat_fuse(ParamStore &store, const std::string &prefix,
                                   std::size_t in_channels, std::size_t out,
                                   Rng &rng);
Var concat_fuse(const ConcatFuseParams &params, std::span<const Var> parts);

} // namespace atf
