// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "atf/error.hpp"
#include "atf/evaluate.hpp"
#include "atf/fixture.hpp"
#include "atf/image_io.hpp"
#include "atf/trainer.hpp"
#include "helpers.hpp"

using namespace atf;
using test::TempDir;
namespace fs = std::filesystem;

namespace {

ModelConfig small_model() {
  ModelConfig m = ModelConfig::tiny();
  m.input_size = 32;
  return m;
}

TrainConfig small_train() {
  TrainConfig t;
  t.batch_size = 2;
  t.epochs = 2;
  t.seed = 4;
  return t;
}

DatasetLayout small_fixture(const TempDir &dir, std::size_t frames = 4) {
  FixtureSpec spec;
  spec.frames = frames;
  spec.size = 32;
  spec.radius = 6;
  return generate_fixture(spec, dir.path());
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST(Schedule, StepDecay) {
  const TrainConfig cfg;
  EXPECT_DOUBLE_EQ(lr_at_epoch(cfg, 0), 1e-4);
  EXPECT_DOUBLE_EQ(lr_at_epoch(cfg, 19), 1e-4);
  EXPECT_NEAR(lr_at_epoch(cfg, 20), 1e-5, 1e-20);
  EXPECT_NEAR(lr_at_epoch(cfg, 40), 1e-6, 1e-21);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Var p(Tensor({3}, std::vector<real>{1, 2, 3}), true);
  Adam opt({p}, 0.9, 0.999, 1e-8);
  p.grad_buffer() = Tensor({3}, std::vector<real>{0.5, -2, 0});
  opt.step(0.01);
  EXPECT_NEAR(p.value()[0], 1 - 0.01, 1e-9);
  EXPECT_NEAR(p.value()[1], 2 + 0.01, 1e-9);
  EXPECT_EQ(p.value()[2], 3.0);
  EXPECT_EQ(opt.steps(), 1u);
  // moments follow the exponential averages
  EXPECT_NEAR(opt.first_moments()[0][0], 0.05, 1e-15);
  EXPECT_NEAR(opt.second_moments()[0][1], 0.001 * 4, 1e-15);
}

TEST(TrainConfigSchema, RoundTripAndErrors) {
  TrainConfig cfg;
  cfg.learning_rate = 3e-4;
  cfg.augment.hflip = false;
  cfg.loss.window = 15;
  const TrainConfig back = train_config_from(KeyValues::parse(cfg.to_text(), "test"));
  EXPECT_EQ(back, cfg);
  try {
    train_config_from(KeyValues::parse("learning_rat = 1\n", "test"));
    FAIL() << "no error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("learning_rat"), std::string::npos);
  }
  EXPECT_THROW(train_config_from(KeyValues::parse("batch_size = 0\n", "test")), Error);
  EXPECT_THROW(train_config_from(KeyValues::parse("epochs = two\n", "test")), Error);
}

TEST(ModelConfigSchema, PresetThenOverrides) {
  const ModelConfig m = model_config_from(KeyValues::parse("preset = tiny\nuse_mea = false\n", "t"));
  ModelConfig want = ModelConfig::tiny();
  want.use_mea = false;
  EXPECT_EQ(m, want);
  EXPECT_EQ(model_config_from(KeyValues::parse(m.to_text(), "t")), m);
  EXPECT_THROW(model_config_from(KeyValues::parse("input_size = 50\n", "t")), Error);
  EXPECT_THROW(KeyValues::parse("a = 1\na = 2\n", "t"), Error);
}

TEST(Batch, ResizeRescalesFlowAndRebinarizes) {
  FrameSample s;
  s.rgb = Tensor({3, 16, 8}, 0.5);
  s.depth = Tensor({1, 16, 8}, 0.5);
  s.gt = Tensor({1, 16, 8}, 0.0);
  for (std::size_t i = 0; i < 64; ++i)
    s.gt[i] = 1;
  s.flow = Tensor({2, 16, 8}, 0.0);
  for (std::size_t i = 0; i < 128; ++i) {
    s.flow[i] = 1;
    s.flow[128 + i] = 2;
  }
  const FrameSample r = resize_sample(s, 32);
  ASSERT_EQ(r.flow.shape(), (Shape{2, 32, 32}));
  EXPECT_DOUBLE_EQ(r.flow[0], 4.0);       // width 8 -> 32
  EXPECT_DOUBLE_EQ(r.flow[1024], 4.0);    // height 16 -> 32
  for (real v : r.gt.data())
    EXPECT_TRUE(v == 0 || v == 1);

  const ModelBatch b = make_batch(std::span<const FrameSample>(&r, 1), ModelConfig::tiny());
  EXPECT_EQ(b.flow.shape(), (Shape{1, 3, 32, 32}));
  EXPECT_EQ(b.gt.shape(), (Shape{1, 1, 32, 32}));
}

TEST(Trainer, BitIdenticalLossTrace) {
  TempDir dir("tr");
  const DatasetLayout layout = small_fixture(dir);
  Trainer a(small_model(), small_train(), layout), b(small_model(), small_train(), layout);
  for (int i = 0; i < 3; ++i) {
    ASSERT_TRUE(a.step());
    ASSERT_TRUE(b.step());
  }
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.log()[i].total, b.log()[i].total);
    EXPECT_EQ(a.log()[i].fused, b.log()[i].fused);
  }
  EXPECT_EQ(a.steps_per_epoch(), 2u);
  EXPECT_EQ(a.epoch(), 1u);
}

TEST(Trainer, ResumeEqualsUninterrupted) {
  TempDir dir("tr");
  const DatasetLayout layout = small_fixture(dir);
  Trainer straight(small_model(), small_train(), layout);
  while (straight.step()) {
  }
  EXPECT_EQ(straight.global_step(), 4u);

  Trainer first(small_model(), small_train(), layout);
  first.step();
  first.step();
  first.step();
  save_checkpoint(first.checkpoint(), dir / "mid.ckpt");
  Trainer second(small_model(), small_train(), layout);
  second.resume(load_checkpoint(dir / "mid.ckpt"));
  EXPECT_EQ(second.global_step(), 3u);
  ASSERT_TRUE(second.step());
  EXPECT_FALSE(second.step());
  EXPECT_EQ(second.log().back().total, straight.log().back().total);
  EXPECT_EQ(second.log().back().step, 4u);

  const Checkpoint x = straight.checkpoint(), y = second.checkpoint();
  ASSERT_EQ(x.tensors.size(), y.tensors.size());
  for (std::size_t i = 0; i < x.tensors.size(); ++i)
    EXPECT_EQ(x.tensors[i].value, y.tensors[i].value) << x.tensors[i].name;
}

TEST(Trainer, ResumeRejectsOtherConfig) {
  TempDir dir("tr");
  const DatasetLayout layout = small_fixture(dir);
  Trainer t(small_model(), small_train(), layout);
  t.step();
  ModelConfig other = small_model();
  other.use_mda = false;
  Trainer u(other, small_train(), layout);
  EXPECT_THROW(u.resume(t.checkpoint()), Error);
  Trainer v(small_model(), small_train(), layout);
  EXPECT_THROW(v.resume(capture_model(t.model())), Error); // no optimizer state
}

TEST(Trainer, MaxStepsAndOutputs) {
  TempDir dir("tr");
  const DatasetLayout layout = small_fixture(dir);
  TrainConfig cfg = small_train();
  cfg.max_steps = 3;
  cfg.checkpoint_every = 1;
  const TrainOutputs out = train(small_model(), cfg, layout, dir / "run");
  EXPECT_EQ(out.log.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "run/final.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "run/checkpoints/epoch_001.ckpt"));
  EXPECT_TRUE(fs::exists(dir / "run/train.log"));
  const std::string log = slurp(dir / "run/train.log");
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 3);
  EXPECT_EQ(load_checkpoint(dir / "run/final.ckpt").step, 3u);
}

TEST(Trainer, DivergenceRaisesNumericError) {
  TempDir dir("tr");
  const DatasetLayout layout = small_fixture(dir);
  TrainConfig cfg = small_train();
  cfg.learning_rate = 1e200;
  Trainer t(small_model(), cfg, layout);
  try {
    while (t.step()) {
    }
    FAIL() << "diverged run finished";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNumeric);
    EXPECT_NE(std::string(e.what()).find("video000/"), std::string::npos) << e.what();
  }
}

TEST(Inference, SizesAndDeterminism) {
  TempDir dir("inf");
  const DatasetLayout layout = small_fixture(dir, 2);
  const AtfNet net(small_model(), 1);
  const FrameSample s = load_frame(layout, "video000", 1);
  const FramePrediction p = predict_frame(net, s);
  EXPECT_EQ(p.s_f.shape(), (Shape{1, 32, 32}));
  EXPECT_EQ(p.s_depth.shape(), (Shape{1, 32, 32}));
  // a model built for 32 runs at any multiple of 32
  EXPECT_EQ(predict_frame(net, s, 64).s_f.shape(), (Shape{1, 32, 32}));

  infer(net, layout, dir / "a", {0, true});
  infer(net, layout, dir / "b", {0, true});
  for (const char *rel : {"train/video000/00000.png", "train/video000/00001.png",
                          "branches/flow/train/video000/00001.png"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / rel)) << rel;
    EXPECT_EQ(slurp(dir / "a" / rel), slurp(dir / "b" / rel));
  }
  const Tensor png = read_gray_png(dir / "a/train/video000/00001.png");
  EXPECT_EQ(png.shape(), (Shape{1, 32, 32}));

  const MetricsReport r = evaluate_predictions(dir / "a", layout);
  EXPECT_EQ(r.overall.frames, 2u);
  fs::remove(dir / "a/train/video000/00001.png");
  try {
    evaluate_predictions(dir / "a", layout);
    FAIL() << "no error";
  } catch (const Error &e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingPrediction);
    EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos);
  }
}
