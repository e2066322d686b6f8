// SPDX-License-Identifier: Apache-2.0
#include "atf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "atf/error.hpp"
#include "atf/flow.hpp"
#include "atf/image_io.hpp"
#include "atf/ops.hpp"

namespace fs = std::filesystem;

namespace atf {

namespace {

std::size_t count_value(const std::string &v, bool allow_zero) {
  const auto i = parse_int(v);
  if (i < 0 || (!allow_zero && i == 0))
    throw std::invalid_argument("'" + v + "' must be " +
                                (allow_zero ? "non-negative" : "positive"));
  return static_cast<std::size_t>(i);
}

std::string b2s(bool b) { return b ? "true" : "false"; }

template <typename Get>
SchemaKey<TrainConfig> real_key(std::string key, std::string help, Get get) {
  return {std::move(key), std::move(help),
          [get](TrainConfig &c, const std::string &v) { get(c) = parse_real(v); },
          [get](const TrainConfig &c) {
            return format_real(get(c));
          }};
}

template <typename Get>
SchemaKey<TrainConfig> count_key(std::string key, std::string help, bool allow_zero,
                                 Get get) {
  return {std::move(key), std::move(help),
          [get, allow_zero](TrainConfig &c, const std::string &v) {
            get(c) = count_value(v, allow_zero);
          },
          [get](const TrainConfig &c) {
            return std::to_string(get(c));
          }};
}

template <typename Get>
SchemaKey<TrainConfig> bool_key(std::string key, std::string help, Get get) {
  return {std::move(key), std::move(help),
          [get](TrainConfig &c, const std::string &v) { get(c) = parse_bool(v); },
          [get](const TrainConfig &c) { return b2s(get(c)); }};
}

bool finite(real v) { return std::isfinite(v); }

} // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0) || !finite(learning_rate))
    fail(ErrorKind::kConfig, "learning_rate must be positive");
  if (epochs == 0)
    fail(ErrorKind::kConfig, "epochs must be at least 1");
  if (batch_size == 0)
    fail(ErrorKind::kConfig, "batch_size must be at least 1");
  if (decay_every == 0 || !(decay_factor > 0))
    fail(ErrorKind::kConfig, "decay_every and decay_factor must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1) ||
      !(adam_eps > 0))
    fail(ErrorKind::kConfig, "Adam betas must lie in [0, 1) and eps must be positive");
  if (augment.pepper_rate < 0 || augment.pepper_rate > 1)
    fail(ErrorKind::kConfig, "augment.pepper_rate must lie in [0, 1]");
  loss.validate();
}

const Schema<TrainConfig> &train_config_schema() {
  static const Schema<TrainConfig> schema = {
      real_key("learning_rate", "positive real", [](auto &c) -> auto & {
        return c.learning_rate;
      }),
      count_key("decay_every", "positive integer, epochs per decay", false,
                [](auto &c) -> auto & { return c.decay_every; }),
      real_key("decay_factor", "positive real multiplier",
               [](auto &c) -> auto & { return c.decay_factor; }),
      count_key("epochs", "positive integer", false,
                [](auto &c) -> auto & { return c.epochs; }),
      count_key("batch_size", "positive integer", false,
                [](auto &c) -> auto & { return c.batch_size; }),
      count_key("max_steps", "non-negative integer, 0 = no limit", true,
                [](auto &c) -> auto & { return c.max_steps; }),
      {"seed", "non-negative integer",
       [](TrainConfig &c, const std::string &v) {
         c.seed = static_cast<std::uint64_t>(count_value(v, true));
       },
       [](const TrainConfig &c) { return std::to_string(c.seed); }},
      bool_key("augment.rotate90", "boolean",
               [](auto &c) -> auto & { return c.augment.rotate90; }),
      bool_key("augment.hflip", "boolean",
               [](auto &c) -> auto & { return c.augment.hflip; }),
      bool_key("augment.pepper", "boolean",
               [](auto &c) -> auto & { return c.augment.pepper; }),
      real_key("augment.pepper_rate", "real in [0, 1]",
               [](auto &c) -> auto & { return c.augment.pepper_rate; }),
      count_key("checkpoint_every", "non-negative integer, epochs; 0 = final only", true,
                [](auto &c) -> auto & { return c.checkpoint_every; }),
      real_key("adam.beta1", "real in [0, 1)",
               [](auto &c) -> auto & { return c.adam_beta1; }),
      real_key("adam.beta2", "real in [0, 1)",
               [](auto &c) -> auto & { return c.adam_beta2; }),
      real_key("adam.eps", "positive real", [](auto &c) -> auto & { return c.adam_eps; }),
      real_key("loss.lambda1", "non-negative real, depth term",
               [](auto &c) -> auto & { return c.loss.lambda1; }),
      real_key("loss.lambda2", "non-negative real, flow term",
               [](auto &c) -> auto & { return c.loss.lambda2; }),
      real_key("loss.lambda3", "non-negative real, fused term",
               [](auto &c) -> auto & { return c.loss.lambda3; }),
      real_key("loss.weight_multiplier", "non-negative real",
               [](auto &c) -> auto & { return c.loss.weight_multiplier; }),
      count_key("loss.window", "odd positive integer", false,
                [](auto &c) -> auto & { return c.loss.window; }),
      real_key("loss.smooth", "positive real", [](auto &c) -> auto & {
        return c.loss.smooth;
      }),
      real_key("loss.clamp_eps", "real in (0, 0.5)",
               [](auto &c) -> auto & { return c.loss.clamp_eps; }),
      count_key("cache_mb", "non-negative integer, sample cache budget", true,
                [](auto &c) -> auto & { return c.cache_mb; }),
  };
  return schema;
}

std::string TrainConfig::to_text() const { return print_schema(train_config_schema(), *this); }

TrainConfig train_config_from(const KeyValues &kv) {
  TrainConfig c;
  apply_schema(train_config_schema(), kv, c);
  c.validate();
  return c;
}

real lr_at_epoch(const TrainConfig &cfg, std::size_t epoch) {
  return cfg.learning_rate *
         std::pow(cfg.decay_factor, static_cast<real>(epoch / cfg.decay_every));
}

Adam::Adam(std::vector<Var> params, real beta1, real beta2, real eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto &p : params_) {
    m_.push_back(Tensor::zeros_like(p.value()));
    v_.push_back(Tensor::zeros_like(p.value()));
  }
}

void Adam::step(real lr) {
  ++steps_;
  const real t = static_cast<real>(steps_);
  const real c1 = 1 - std::pow(beta1_, t), c2 = 1 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Var p = params_[i];
    const Tensor &g = p.grad();
    if (g.empty())
      continue;
    Tensor &value = p.mutable_value();
    Tensor &m = m_[i], &v = v_[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = beta1_ * m[k] + (1 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1 - beta2_) * g[k] * g[k];
      value[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

void Adam::set_state(std::uint64_t steps, std::vector<Tensor> m, std::vector<Tensor> v) {
  if (m.size() != params_.size() || v.size() != params_.size())
    fail(ErrorKind::kConfig, "optimizer state does not match the parameter list");
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (m[i].shape() != params_[i].shape() || v[i].shape() != params_[i].shape())
      fail(ErrorKind::kConfig, "optimizer state shape mismatch");
  steps_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

FrameSample resize_sample(const FrameSample &s, std::size_t size) {
  const std::size_t h = s.rgb.dim(1), w = s.rgb.dim(2);
  if (h == size && w == size)
    return s;
  FrameSample out = s;
  out.rgb = resize_chw(s.rgb, size, size);
  out.depth = resize_chw(s.depth, size, size);
  out.flow = resize_chw(s.flow, size, size);
  const std::size_t plane = size * size;
  const real sx = static_cast<real>(size) / static_cast<real>(w);
  const real sy = static_cast<real>(size) / static_cast<real>(h);
  for (std::size_t i = 0; i < plane; ++i) {
    out.flow[i] *= sx;
    out.flow[plane + i] *= sy;
  }
  out.gt = resize_chw(s.gt, size, size);
  for (auto &v : out.gt.data())
    v = v >= 0.5 ? 1 : 0;
  return out;
}

Tensor flow_input(const Tensor &flow, const ModelConfig &config) {
  return config.flow_input == FlowInput::kRendered3 ? flow_to_color(flow) : flow;
}

ModelBatch make_batch(std::span<const FrameSample> samples, const ModelConfig &config) {
  if (samples.empty())
    fail(ErrorKind::kShape, "empty batch");
  std::vector<Tensor> rgb, depth, flow, gt;
  for (const auto &s : samples) {
    rgb.push_back(s.rgb);
    depth.push_back(s.depth);
    flow.push_back(flow_input(s.flow, config));
    gt.push_back(s.gt);
  }
  return {Var(stack_batch(rgb)), Var(stack_batch(depth)), Var(stack_batch(flow)),
          stack_batch(gt)};
}

std::string format_log_record(const LogRecord &r) {
  char line[256];
  std::snprintf(line, sizeof line,
                "step=%llu epoch=%zu lr=%.6g loss=%.8g rgb=%.8g depth=%.8g flow=%.8g "
                "fused=%.8g",
                static_cast<unsigned long long>(r.step), r.epoch, r.lr, r.total, r.rgb,
                r.depth, r.flow, r.fused);
  return line;
}

struct Trainer::State {
  ModelConfig model_config;
  TrainConfig config;
  DatasetLayout layout;
  AtfNet model;
  Adam adam;
  std::vector<std::pair<std::string, std::size_t>> frames;
  std::uint64_t step = 0;
  std::vector<LogRecord> log;
  std::map<std::size_t, FrameSample> cache;
  std::size_t cache_capacity = 0;
  std::size_t order_epoch = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order;

  State(ModelConfig mc, TrainConfig tc, DatasetLayout dl)
      : model_config(std::move(mc)), config(std::move(tc)), layout(std::move(dl)),
        model(model_config, config.seed),
        adam(model.params().trainable(), config.adam_beta1, config.adam_beta2,
             config.adam_eps) {
    config.validate();
    for (const auto &v : layout.videos)
      for (std::size_t i = 0; i < v.frames; ++i)
        frames.emplace_back(v.id, i);
    if (frames.empty())
      fail(ErrorKind::kConfig, "training split has no frames");
    const std::size_t n = model_config.input_size;
    const std::size_t per_sample = 7 * n * n * sizeof(real);
    cache_capacity = config.cache_mb * (std::size_t{1} << 20) / per_sample;
  }

  std::size_t steps_per_epoch() const {
    return (frames.size() + config.batch_size - 1) / config.batch_size;
  }

  std::uint64_t total_steps() const {
    std::uint64_t total = config.epochs * steps_per_epoch();
    if (config.max_steps)
      total = std::min<std::uint64_t>(total, config.max_steps);
    return total;
  }

  const std::vector<std::size_t> &epoch_order(std::size_t epoch) {
    if (order_epoch != epoch) {
      order.resize(frames.size());
      for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
      Rng rng(Rng::derive(config.seed, epoch));
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
      order_epoch = epoch;
    }
    return order;
  }

  FrameSample sample(std::size_t frame) {
    if (auto it = cache.find(frame); it != cache.end())
      return it->second;
    const auto &[video, index] = frames[frame];
    FrameSample s = resize_sample(load_frame(layout, video, index), model_config.input_size);
    if (cache.size() < cache_capacity)
      cache.emplace(frame, s);
    return s;
  }

  bool run_step() {
    if (step >= total_steps())
      return false;
    const std::size_t spe = steps_per_epoch();
    const std::size_t epoch = step / spe, pos = step % spe;
    const auto &ord = epoch_order(epoch);
    const std::size_t begin = pos * config.batch_size;
    const std::size_t end = std::min(begin + config.batch_size, frames.size());
    std::vector<FrameSample> batch;
    const std::uint64_t step_seed = Rng::derive(config.seed, step);
    for (std::size_t b = begin; b < end; ++b) {
      Rng rng(Rng::derive(step_seed, b - begin));
      batch.push_back(augment_sample(sample(ord[b]), rng, config.augment));
    }
    const ModelBatch mb = make_batch(batch, model_config);
    const real lr = lr_at_epoch(config, epoch);

    model.params().zero_grad();
    const SaliencyOutputs out = model.forward(mb.rgb, mb.depth, mb.flow, {true});
    const LossBreakdown loss = total_loss(out, mb.gt, config.loss);
    LogRecord rec{step + 1, epoch, lr, loss.total.value()[0], loss.rgb, loss.depth,
                  loss.flow, loss.fused};
    auto diagnose = [&](const std::string &what) {
      std::string frames_used;
      for (const auto &s : batch)
        frames_used += " " + s.video_id + "/" + std::to_string(s.frame_index);
      fail(ErrorKind::kNumeric, what + " at " + format_log_record(rec) +
                                    "; frames:" + frames_used);
    };
    if (!finite(rec.total))
      diagnose("non-finite loss");
    backward(loss.total);
    for (const auto &p : model.params().trainable())
      if (!p.grad().empty() && !p.grad().all_finite())
        diagnose("non-finite gradient");
    adam.step(lr);
    ++step;
    log.push_back(rec);
    return true;
  }
};

Trainer::Trainer(ModelConfig model_config, TrainConfig train_config, DatasetLayout layout)
    : state_(std::make_unique<State>(std::move(model_config), std::move(train_config),
                                     std::move(layout))) {}
Trainer::~Trainer() = default;
Trainer::Trainer(Trainer &&) noexcept = default;
Trainer &Trainer::operator=(Trainer &&) noexcept = default;

void Trainer::resume(const Checkpoint &ckpt) {
  State &s = *state_;
  restore_model(s.model, ckpt);
  std::vector<Tensor> m, v;
  for (const auto &e : s.model.params().entries()) {
    if (!e.trainable)
      continue;
    const CheckpointTensor *tm = ckpt.find(e.name, TensorKind::kAdamM);
    const CheckpointTensor *tv = ckpt.find(e.name, TensorKind::kAdamV);
    if (!tm || !tv)
      fail(ErrorKind::kConfig, "checkpoint has no optimizer state for " + e.name);
    m.push_back(tm->value);
    v.push_back(tv->value);
  }
  s.adam.set_state(ckpt.step, std::move(m), std::move(v));
  s.step = ckpt.step;
}

bool Trainer::step() { return state_->run_step(); }
bool Trainer::done() const { return state_->step >= state_->total_steps(); }
std::uint64_t Trainer::global_step() const { return state_->step; }
std::size_t Trainer::epoch() const { return state_->step / state_->steps_per_epoch(); }
std::size_t Trainer::steps_per_epoch() const { return state_->steps_per_epoch(); }
const std::vector<LogRecord> &Trainer::log() const { return state_->log; }
AtfNet &Trainer::model() { return state_->model; }

Checkpoint Trainer::checkpoint() const {
  const State &s = *state_;
  Checkpoint ck = capture_model(s.model);
  ck.step = s.step;
  ck.epoch = s.step / s.steps_per_epoch();
  std::size_t i = 0;
  for (const auto &e : s.model.params().entries()) {
    if (!e.trainable)
      continue;
    ck.tensors.push_back({e.name, TensorKind::kAdamM, s.adam.first_moments()[i]});
    ck.tensors.push_back({e.name, TensorKind::kAdamV, s.adam.second_moments()[i]});
    ++i;
  }
  return ck;
}

TrainOutputs train(const ModelConfig &model_config, const TrainConfig &train_config,
                   const DatasetLayout &layout, const fs::path &out_dir,
                   const std::optional<Checkpoint> &resume_from,
                   const std::function<void(const LogRecord &)> &on_record) {
  Trainer trainer(model_config, train_config, layout);
  if (resume_from)
    trainer.resume(*resume_from);
  fs::create_directories(out_dir);
  {
    std::ofstream(out_dir / "model.cfg") << model_config.to_text();
    std::ofstream(out_dir / "train.cfg") << train_config.to_text();
  }
  std::ofstream log(out_dir / "train.log", resume_from ? std::ios::app : std::ios::trunc);
  if (!log)
    fail(ErrorKind::kIo, "cannot write " + (out_dir / "train.log").string());
  const std::size_t spe = trainer.steps_per_epoch();
  while (trainer.step()) {
    const LogRecord &rec = trainer.log().back();
    log << format_log_record(rec) << '\n' << std::flush;
    if (on_record)
      on_record(rec);
    const std::uint64_t step = trainer.global_step();
    if (train_config.checkpoint_every && step % spe == 0 && !trainer.done()) {
      const std::size_t finished = step / spe;
      if (finished % train_config.checkpoint_every == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "epoch_%03zu.ckpt", finished);
        fs::create_directories(out_dir / "checkpoints");
        save_checkpoint(trainer.checkpoint(), out_dir / "checkpoints" / name);
      }
    }
  }
  TrainOutputs out{trainer.checkpoint(), trainer.log()};
  save_checkpoint(out.final_checkpoint, out_dir / "final.ckpt");
  return out;
}

FramePrediction predict_frame(const AtfNet &model, const FrameSample &sample,
                              std::size_t size) {
  NoGradGuard guard;
  if (size == 0)
    size = model.config().input_size;
  const std::size_t h = sample.rgb.dim(1), w = sample.rgb.dim(2);
  const FrameSample s = resize_sample(sample, size);
  const ModelBatch mb = make_batch(std::span<const FrameSample>(&s, 1), model.config());
  const SaliencyOutputs out = model.forward(mb.rgb, mb.depth, mb.flow, {false});
  auto back = [&](const Var &map) {
    return map.defined() ? resize_chw(batch_item(map.value(), 0), h, w) : Tensor();
  };
  return {back(out.s_f), back(out.s_rgb), back(out.s_flow), back(out.s_depth)};
}

void infer(const AtfNet &model, const DatasetLayout &layout, const fs::path &out_dir,
           const InferOptions &options) {
  const std::string split(to_string(layout.split));
  for (const auto &v : layout.videos)
    for (std::size_t i = 0; i < v.frames; ++i) {
      const FramePrediction p = predict_frame(model, load_frame(layout, v.id, i), options.size);
      char name[32];
      std::snprintf(name, sizeof name, "%05zu.png", i);
      write_gray8_png(out_dir / split / v.id / name, p.s_f);
      if (!options.branch_maps)
        continue;
      const std::pair<const char *, const Tensor *> branches[] = {
          {"rgb", &p.s_rgb}, {"flow", &p.s_flow}, {"depth", &p.s_depth}};
      for (const auto &[branch, map] : branches)
        if (!map->empty())
          write_gray8_png(out_dir / "branches" / branch / split / v.id / name, *map);
    }
}

} // namespace atf
