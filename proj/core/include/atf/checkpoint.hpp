// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Versioned binary model/optimizer snapshots.
 *
 * Little-endian layout:
 *   char[8]  "ATFCKPT\0"
 *   u16 x 4  major, minor, patch, reserved (0)
 *   u64      FNV-1a digest of the config text
 *   u32 + n  config text (canonical `key = value` lines)
 *   u64 x 3  seed, epoch, step
 *   u32      tensor count, then per tensor:
 *              u16 + n  name
 *              u8       kind (0 parameter, 1 buffer, 2 adam m, 3 adam v)
 *              u8       rank, u64 x rank dims
 *              f64 x numel data
 *   u64      FNV-1a of every preceding byte
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "atf/model_config.hpp"
#include "atf/tensor.hpp"

namespace atf {

class AtfNet;

enum class TensorKind : std::uint8_t { kParam = 0, kBuffer = 1, kAdamM = 2, kAdamV = 3 };

struct CheckpointTensor {
  std::string name;
  TensorKind kind = TensorKind::kParam;
  Tensor value;
};

struct Checkpoint {
  static constexpr std::uint16_t kMajor = 1, kMinor = 0, kPatch = 0;

  ModelConfig config;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
  std::uint64_t step = 0;
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor *find(const std::string &name, TensorKind kind) const;
};

/// Written to a sibling temporary and renamed into place.
void save_checkpoint(const Checkpoint &ckpt, const std::filesystem::path &path);
/// Throws VersionMismatch for another major version, Corrupt for damaged or
/// truncated files, MissingFile when absent.
Checkpoint load_checkpoint(const std::filesystem::path &path);

/// Parameters and buffers of `model`, with its config and seed.
Checkpoint capture_model(const AtfNet &model);
/// Copies parameters and buffers into `model`. ConfigError when the
/// checkpoint was made for a different config or tensor set.
void restore_model(AtfNet &model, const Checkpoint &ckpt);

} // namespace atf
