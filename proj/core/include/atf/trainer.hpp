// SPDX-License-Identifier: Apache-2.0
/**
 * @file   trainer.hpp
 * @brief  Adam training loop, step learning-rate schedule, inference.
 *
 * Data order: every epoch shuffles all training frames with a generator
 * seeded from (seed, epoch); the augmentation of batch slot b at global step
 * s draws from (seed, s, b). A run is therefore reproduced from the step
 * counter, the parameters and the optimizer moments alone.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "atf/atfnet.hpp"
#include "atf/augment.hpp"
#include "atf/checkpoint.hpp"
#include "atf/config.hpp"
#include "atf/dataset.hpp"
#include "atf/loss.hpp"

namespace atf {

struct TrainConfig {
  real learning_rate = 1e-4;
  std::size_t decay_every = 20; ///< epochs
  real decay_factor = 0.1;
  std::size_t epochs = 50;
  std::size_t batch_size = 4;
  std::size_t max_steps = 0; ///< 0: no limit
  std::uint64_t seed = 0;
  AugmentPolicy augment{};
  std::size_t checkpoint_every = 10; ///< epochs; 0 writes only the final one
  real adam_beta1 = 0.9, adam_beta2 = 0.999, adam_eps = 1e-8;
  LossConfig loss{};
  std::size_t cache_mb = 1024; ///< in-memory sample cache budget

  void validate() const;
  std::string to_text() const;
  std::uint64_t digest() const { return fnv1a64(to_text()); }
  friend bool operator==(const TrainConfig &, const TrainConfig &) = default;
};

const Schema<TrainConfig> &train_config_schema();
TrainConfig train_config_from(const KeyValues &kv);

/// Learning rate during 0-based epoch `epoch`.
real lr_at_epoch(const TrainConfig &cfg, std::size_t epoch);

class Adam {
 public:
  Adam(std::vector<Var> params, real beta1, real beta2, real eps);

  /// Applies one update from the accumulated gradients. Parameters without a
  /// gradient are left untouched but still count the step.
  void step(real lr);
  std::uint64_t steps() const { return steps_; }

  const std::vector<Tensor> &first_moments() const { return m_; }
  const std::vector<Tensor> &second_moments() const { return v_; }
  void set_state(std::uint64_t steps, std::vector<Tensor> m, std::vector<Tensor> v);

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  real beta1_, beta2_, eps_;
  std::uint64_t steps_ = 0;
};

/// Network inputs for a batch, resized to `size` x `size`.
struct ModelBatch {
  Var rgb, depth, flow;
  Tensor gt; ///< N x 1 x size x size in {0, 1}
};

/// Resizes every raster to size x size. Flow vectors are rescaled with the
/// image; the mask is re-binarized at 0.5.
FrameSample resize_sample(const FrameSample &s, std::size_t size);
/// Flow tensor fed to the network under `config` (rendered or raw).
Tensor flow_input(const Tensor &flow, const ModelConfig &config);
ModelBatch make_batch(std::span<const FrameSample> samples, const ModelConfig &config);

struct LogRecord {
  std::uint64_t step = 0; ///< 1-based global step
  std::size_t epoch = 0;
  real lr = 0;
  real total = 0, rgb = 0, depth = 0, flow = 0, fused = 0;
};

std::string format_log_record(const LogRecord &r);

class Trainer {
 public:
  Trainer(ModelConfig model_config, TrainConfig train_config, DatasetLayout layout);
  ~Trainer();
  Trainer(Trainer &&) noexcept;
  Trainer &operator=(Trainer &&) noexcept;

  /// Restores parameters, optimizer moments and the step counter.
  /// ConfigError when the checkpoint belongs to another model config.
  void resume(const Checkpoint &ckpt);

  /// Runs one optimization step; false once the run is complete.
  bool step();
  bool done() const;

  std::uint64_t global_step() const;
  std::size_t epoch() const;
  std::size_t steps_per_epoch() const;
  const std::vector<LogRecord> &log() const;

  AtfNet &model();
  /// Parameters, buffers and optimizer state.
  Checkpoint checkpoint() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct TrainOutputs {
  Checkpoint final_checkpoint;
  std::vector<LogRecord> log;
};

/// Trains until done, writing `out_dir`/train.log, periodic
/// checkpoints/epoch_NNN.ckpt and final.ckpt. `on_record` sees each record.
TrainOutputs train(const ModelConfig &model_config, const TrainConfig &train_config,
                   const DatasetLayout &layout, const std::filesystem::path &out_dir,
                   const std::optional<Checkpoint> &resume_from = std::nullopt,
                   const std::function<void(const LogRecord &)> &on_record = {});

/// All four maps for one frame, each 1 x H x W at the frame's resolution.
/// `size` 0 uses the model's input_size.
struct FramePrediction {
  Tensor s_f, s_rgb, s_flow, s_depth;
};
FramePrediction predict_frame(const AtfNet &model, const FrameSample &sample,
                              std::size_t size = 0);

struct InferOptions {
  std::size_t size = 0;
  bool branch_maps = false;
};

/// Writes out_dir/<split>/<video>/NNNNN.png (fused map, 8-bit) and, with
/// branch_maps, out_dir/branches/<branch>/<split>/<video>/NNNNN.png.
void infer(const AtfNet &model, const DatasetLayout &layout,
           const std::filesystem::path &out_dir, const InferOptions &options = {});

} // namespace atf
