// SPDX-License-Identifier: Apache-2.0
/**
 * @file   atfnet.hpp
 * @brief  Full network: three modality branches plus the fusion branch.
 *
 *   F^m = encode_m(x_m), D^m = decode_m(F^m), S_m = head_m(D^m_1)
 *   Theta_1..5 over encoder levels (MEA or concatenation)
 *   Phi_0 = BConv(Theta_5)
 *   Phi_j = MDA_j(D^r_{5-j}, D^f_{5-j}, D^d_{5-j}, Phi_{j-1}), j = 1..4
 *   S_f   = head_f(Phi_4)
 */
#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "atf/backbone.hpp"
#include "atf/decoder.hpp"
#include "atf/layers.hpp"
#include "atf/mda.hpp"
#include "atf/mea.hpp"
#include "atf/model_config.hpp"

namespace atf {

/// Each map is N x 1 x H x W. Branch maps are undefined for disabled branches.
struct SaliencyOutputs {
  Var s_rgb, s_flow, s_depth, s_f;
};

class AtfNet {
 public:
  /// Deterministic in (config, seed). Throws ConfigError for invalid configs.
  AtfNet(ModelConfig config, std::uint64_t seed);

  AtfNet(AtfNet &&) = default;
  AtfNet &operator=(AtfNet &&) = default;
  AtfNet(const AtfNet &) = delete;
  AtfNet &operator=(const AtfNet &) = delete;

  /// rgb N x 3 x H x W, depth N x 1 x H x W, flow N x flow_channels x H x W,
  /// H and W multiples of 32. Inputs of disabled branches are ignored and may
  /// be undefined.
  SaliencyOutputs forward(const Var &rgb, const Var &depth, const Var &flow,
                          const RunContext &ctx = {}) const;

  const ModelConfig &config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  ParamStore &params() { return store_; }
  const ParamStore &params() const { return store_; }
  std::size_t parameter_count() const { return store_.parameter_count(); }

 private:
  struct Branch {
    EncoderParams encoder;
    DecoderParams decoder;
    HeadParams head;
  };

  ModelConfig config_;
  std::uint64_t seed_ = 0;
  ParamStore store_;
  Branch rgb_;
  std::optional<Branch> flow_, depth_;
  std::array<MeaParams, 5> mea_;
  std::array<ConcatFuseParams, 5> encoder_concat_;
  BConvParams phi0_;
  std::array<MdaParams, 4> mda_;
  std::array<ConcatFuseParams, 4> decoder_concat_;
  HeadParams fused_head_;
};

} // namespace atf
