// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model_config.hpp
 * @brief  Architecture hyperparameters and ablation toggles.
 *
 * Fusion semantics of the toggles:
 *  - use_mea = false, or a disabled modality branch: each encoder level is
 *    fused by concatenation followed by a 1x1 projection.
 *  - use_mda = false, or a disabled modality branch: each decoder level is
 *    fused the same way.
 *  - use_attention_blocks = false: inside the MDA modules the attention
 *    blocks collapse to BConv(Concat(R, P, Q)).
 */
#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "atf/config.hpp"
#include "atf/layers.hpp"

namespace atf {

enum class FlowInput { kRendered3, kRaw2 };

struct ModelConfig {
  std::array<std::size_t, 5> encoder_channels{16, 32, 64, 128, 256};
  std::size_t c_dec = 64;
  std::size_t c_fuse = 64;
  std::size_t input_size = 352;
  FlowInput flow_input = FlowInput::kRendered3;
  bool use_depth_branch = true;
  bool use_flow_branch = true;
  bool use_mea = true;
  bool use_mda = true;
  bool use_attention_blocks = true;
  std::string backbone = "residual5";
  NormSpec norm{};

  /// Desk-scale preset used by tests and the fixture workflows.
  static ModelConfig tiny();

  std::size_t flow_channels() const {
    return flow_input == FlowInput::kRendered3 ? 3 : 2;
  }
  /// MEA runs only when enabled and both auxiliary branches exist.
  bool mea_active() const { return use_mea && use_depth_branch && use_flow_branch; }
  bool mda_active() const { return use_mda && use_depth_branch && use_flow_branch; }

  /// Throws ErrorKind::kConfig (or kChannel for odd widths) when invalid.
  void validate() const;

  /// Canonical `key = value` text; stable across runs.
  std::string to_text() const;
  std::uint64_t digest() const { return fnv1a64(to_text()); }

  friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

const Schema<ModelConfig> &model_config_schema();

/// Applies `preset` first (if present), then every other key.
ModelConfig model_config_from(const KeyValues &kv);

} // namespace atf
