// SPDX-License-Identifier: Apache-2.0
/**
 * @file   backbone.hpp
 * @brief  Modality-specific five-stage residual encoders.
 *
 * Stage i maps level i-1 to level i (level 0 is the input image):
 *   h   = ReLU(Norm(Conv3x3/2(x)))
 *   out = ReLU(h + Norm(Conv3x3(h)))
 * so level i has spatial size input / 2^i and encoder_channels[i-1] channels.
 */
#pragma once

#include <array>
#include <string_view>

#include "atf/layers.hpp"
#include "atf/model_config.hpp"

namespace atf {

enum class Modality { kRgb, kFlow, kDepth };

std::string_view to_string(Modality m);

/// Input channel count of a modality's encoder under `config`.
std::size_t input_channels(const ModelConfig &config, Modality m);

struct FeaturePyramid {
  Modality modality = Modality::kRgb;
  std::array<Var, 5> levels; ///< levels[i-1] holds F_i

  const Var &level(std::size_t i) const { return levels.at(i - 1); }
};

struct EncoderStage {
  ConvParams down;
  NormParams down_norm;
  ConvParams residual;
  NormParams residual_norm;
};

struct EncoderParams {
  Modality modality = Modality::kRgb;
  std::size_t in_channels = 0;
  std::array<EncoderStage, 5> stages;
};

EncoderParams build_encoder(ParamStore &store, const std::string &prefix,
                            const ModelConfig &config, Modality modality,
                            Rng &rng);

/// Image must be N x in_channels x H x W with H and W divisible by 32.
FeaturePyramid encode(const EncoderParams &params, const Var &image,
                      const RunContext &ctx = {});

} // namespace atf
