// SPDX-License-Identifier: Apache-2.0
/**
 * @file   decoder.hpp
 * @brief  Per-branch U-Net decoder and saliency head.
 *
 *   D_5 = BConv(F_5)
 *   D_i = BConv(Concat(Up2x(D_{i+1}), Proj1x1(F_i)))   i = 4..1
 *
 * All D_i are c_dec wide; Up2x is bilinear.
 */
#pragma once

#include <array>

#include "atf/backbone.hpp"
#include "atf/layers.hpp"

namespace atf {

struct DecoderFeatures {
  std::array<Var, 5> levels; ///< levels[i-1] holds D_i

  const Var &level(std::size_t i) const { return levels.at(i - 1); }
};

struct DecoderParams {
  std::array<ConvParams, 4> skip; ///< skip[i-1] projects F_i, i = 1..4
  std::array<BConvParams, 5> fuse; ///< fuse[i-1] produces D_i
};

struct HeadParams {
  ConvParams proj; ///< 1x1, one output channel
};

DecoderParams build_decoder(ParamStore &store, const std::string &prefix,
                            const ModelConfig &config, Rng &rng);
HeadParams build_head(ParamStore &store, const std::string &prefix,
                      std::size_t in_channels, Rng &rng);

DecoderFeatures decode_branch(const DecoderParams &params,
                              const FeaturePyramid &pyramid,
                              const RunContext &ctx = {});

/// 1x1 conv, sigmoid, bilinear upsample to out_h x out_w.
Var predict_saliency(const HeadParams &head, const Var &d1, std::size_t out_h,
                     std::size_t out_w);

} // namespace atf
