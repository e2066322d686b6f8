// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one [PASS]/[FAIL]/[SKIP] line per criterion.
//
//   atf_acceptance [--work-dir DIR] [--only N[,N...]]
//
// Exit status is 1 when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "atf/backbone.hpp"
#include "atf/checkpoint.hpp"
#include "atf/evaluate.hpp"
#include "atf/fixture.hpp"
#include "atf/flow.hpp"
#include "atf/layers.hpp"
#include "atf/loss.hpp"
#include "atf/mda.hpp"
#include "atf/mea.hpp"
#include "atf/metrics.hpp"
#include "atf/ops.hpp"
#include "atf/trainer.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace atf;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kShapeBudgetSeconds = 30;
constexpr double kGradBudgetSeconds = 300;
constexpr double kGradTolerance = 1e-3;
constexpr double kStochasticTolerance = 1e-6;
constexpr double kSelfMatchTolerance = 1e-6;
constexpr double kLossHandValue = 1.3598, kLossHandTolerance = 1e-4;
constexpr double kPerfectLossBound = 1e-5;
constexpr double kLinearityTolerance = 1e-10;
constexpr double kMetricOracleTolerance = 1e-6;
// One of the 256 thresholds empties the binarized map; it scores 1/4, the rest 1.
constexpr double kIdentityEphi = (255 + 0.25) / 256;
constexpr double kHandMae = 0.225;
constexpr std::size_t kOverfitMaxSteps = 500;
constexpr double kOverfitLearningRate = 1e-4;
constexpr double kOverfitMae = 0.05, kOverfitMaxF = 0.9;
constexpr double kOverfitBudgetSeconds = 15 * 60;
constexpr std::size_t kOverfitEvalEvery = 25;
constexpr std::size_t kFlowFields = 1000;
constexpr double kVidsodMeanRatio = 0.11063, kVidsodMeanTolerance = 0.001;
constexpr double kVidsodMinRatio = 0.00243, kVidsodMinTolerance = 0.00001;
constexpr std::size_t kVidsodFrames = 9362, kVidsodVideos = 100;
constexpr std::size_t kVidsodTrainVideos = 60, kVidsodTestVideos = 40;

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status = Status::kPass;
  std::string detail;
};

// Collects sub-checks; the criterion fails if any of them does.
class Checks {
 public:
  void expect(bool ok, const std::string &what) {
    if (!ok) {
      failed_ = true;
      failures_ += (failures_.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string &s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
  Outcome outcome() const {
    return {failed_ ? Status::kFail : Status::kPass, failed_ ? failures_ + " | " + notes_ : notes_};
  }

 private:
  bool failed_ = false;
  std::string failures_, notes_;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Var probe(const Var &y, std::uint64_t seed) {
  Rng rng(seed);
  return nn::sum(nn::mul(y, Var(test::random_tensor(y.shape(), rng))));
}

void add_store(const ParamStore &store, std::vector<Var> &wrt, std::vector<std::string> &labels) {
  for (const auto &e : store.entries())
    if (e.trainable) {
      wrt.push_back(e.var);
      labels.push_back(e.name);
    }
}

ModelConfig no_augment_size(ModelConfig m, std::size_t size) {
  m.input_size = size;
  return m;
}

TrainConfig plain_training(std::size_t batch, std::uint64_t seed) {
  TrainConfig t;
  t.batch_size = batch;
  t.seed = seed;
  t.augment.hflip = t.augment.rotate90 = t.augment.pepper = false;
  return t;
}

// --- 1 ---------------------------------------------------------------------

Outcome shape_suite(const fs::path &) {
  Timer timer;
  Checks c;
  const ModelConfig cfg = ModelConfig::tiny();
  const AtfNet net(cfg, 1);
  Rng rng(2);
  for (std::size_t n : {352u, 64u}) {
    Timer t;
    NoGradGuard guard;
    const Var rgb(test::random_tensor({1, 3, n, n}, rng, 0, 1));
    const Var depth(test::random_tensor({1, 1, n, n}, rng, 0, 1));
    const Var flow(test::random_tensor({1, 3, n, n}, rng, 0, 1));
    const SaliencyOutputs out = net.forward(rgb, depth, flow);
    const std::pair<const char *, const Var *> maps[] = {
        {"S_rgb", &out.s_rgb}, {"S_flow", &out.s_flow}, {"S_depth", &out.s_depth}, {"S_f", &out.s_f}};
    for (const auto &[name, m] : maps) {
      const std::string tag = std::string(name) + "@" + std::to_string(n);
      if (!m->defined()) {
        c.expect(false, tag + " undefined");
        continue;
      }
      c.expect(m->shape() == Shape{1, 1, n, n}, tag + " shape " + shape_str(m->shape()));
      const auto [lo, hi] = std::minmax_element(m->value().data().begin(), m->value().data().end());
      c.expect(*lo > 0 && *hi < 1, tag + " outside (0,1)");
    }
    c.note("forward " + std::to_string(n) + "^2 " + fmt(t.seconds(), 3) + " s");

    ParamStore store;
    Rng er(3);
    for (Modality mod : {Modality::kRgb, Modality::kFlow, Modality::kDepth}) {
      const auto enc = build_encoder(store, std::string(to_string(mod)), cfg, mod, er);
      const std::size_t ch = input_channels(cfg, mod);
      const FeaturePyramid p = encode(enc, Var(Tensor({1, ch, n, n})));
      for (std::size_t i = 0; i < 5; ++i)
        c.expect(p.levels[i].dim(2) == n >> (i + 1) && p.levels[i].dim(3) == n >> (i + 1),
                 "pyramid level " + std::to_string(i + 1) + " at " + std::to_string(n));
    }
  }
  c.expect(timer.seconds() < kShapeBudgetSeconds, "runtime " + fmt(timer.seconds()) + " s");
  c.note("total " + fmt(timer.seconds(), 3) + " s");
  return c.outcome();
}

// --- 2 ---------------------------------------------------------------------

Outcome gradient_suite(const fs::path &) {
  Timer timer;
  Checks c;
  auto report = [&](const std::string &name, const test::GradCheck &g) {
    c.expect(g.max_rel_error < kGradTolerance,
             name + " rel err " + fmt(g.max_rel_error) + " at " + g.worst);
    c.note(name + " " + fmt(g.max_rel_error, 2));
  };
  const NormSpec norm{NormKind::kGroup, 2};

  {
    Rng rng(1);
    ParamStore store;
    const auto p = make_bconv(store, "bconv", 3, 4, norm, rng);
    Var x(test::random_tensor({2, 3, 4, 4}, rng), true);
    std::vector<Var> wrt = {x};
    std::vector<std::string> labels = {"x"};
    add_store(store, wrt, labels);
    report("bconv", test::gradcheck([&] { return probe(bconv(p, x), 1); }, wrt, labels));
  }
  {
    Rng rng(2);
    ParamStore store;
    const auto p = build_mea(store, "mea", 2, 4, 4, norm, rng);
    Var fr(test::random_tensor({1, 4, 2, 2}, rng), true), ff(test::random_tensor({1, 4, 2, 2}, rng), true),
        fd(test::random_tensor({1, 4, 2, 2}, rng), true), tp(test::random_tensor({1, 4, 4, 4}, rng), true);
    std::vector<Var> wrt = {fr, ff, fd, tp};
    std::vector<std::string> labels = {"f_rgb", "f_flow", "f_depth", "theta_prev"};
    add_store(store, wrt, labels);
    report("mea_forward",
           test::gradcheck([&] { return probe(mea_forward(p, fr, ff, fd, tp), 2); }, wrt, labels));
  }
  {
    Rng rng(3);
    ParamStore store;
    const auto p = build_attention_block(store, "blk", 4, true, norm, rng);
    Var r(test::random_tensor({1, 4, 2, 2}, rng), true), pp(test::random_tensor({1, 4, 2, 2}, rng), true),
        q(test::random_tensor({1, 4, 2, 2}, rng), true);
    std::vector<Var> wrt = {r, pp, q};
    std::vector<std::string> labels = {"r", "p", "q"};
    add_store(store, wrt, labels);
    report("attention_block",
           test::gradcheck([&] { return probe(attention_block(p, r, pp, q), 3); }, wrt, labels));
  }
  {
    Rng rng(4);
    ParamStore store;
    const auto p = build_mda(store, "mda", 1, 4, 4, true, norm, rng);
    Var k1(test::random_tensor({1, 4, 2, 2}, rng), true), k2(test::random_tensor({1, 4, 2, 2}, rng), true),
        k3(test::random_tensor({1, 4, 2, 2}, rng), true), phi(test::random_tensor({1, 4, 1, 1}, rng), true);
    std::vector<Var> wrt = {k1, k2, k3, phi};
    std::vector<std::string> labels = {"k_rgb", "k_flow", "k_depth", "phi_prev"};
    add_store(store, wrt, labels);
    report("mda_forward",
           test::gradcheck([&] { return probe(mda_forward(p, k1, k2, k3, phi), 4); }, wrt, labels));
  }
  {
    Rng rng(5);
    const Tensor gt = test::random_mask({2, 1, 8, 8}, rng);
    Var s(test::random_tensor({2, 1, 8, 8}, rng, 0.05, 0.95), true);
    LossConfig cfg;
    cfg.window = 5;
    report("ppa_loss", test::gradcheck([&] { return ppa_loss(s, gt, cfg); }, {s}, {"S"}));
  }
  {
    const ModelConfig cfg = no_augment_size(ModelConfig::tiny(), 32);
    const AtfNet net(cfg, 6);
    Rng rng(6);
    Var rgb(test::random_tensor({1, 3, 32, 32}, rng, 0, 1), true);
    Var depth(test::random_tensor({1, 1, 32, 32}, rng, 0, 1), true);
    Var flow(test::random_tensor({1, 3, 32, 32}, rng, 0, 1), true);
    const Tensor gt = test::random_mask({1, 1, 32, 32}, rng, 0.3);
    std::vector<Var> wrt = {rgb, depth, flow};
    std::vector<std::string> labels = {"rgb", "depth", "flow"};
    add_store(net.params(), wrt, labels);
    test::GradCheckOptions opt;
    opt.entries_per_tensor = 3;
    const auto g = test::gradcheck(
        [&] { return total_loss(net.forward(rgb, depth, flow, {true}), gt).total; }, wrt, labels,
        opt);
    report("model@32", g);
    c.note(std::to_string(g.checked) + " model entries");
  }
  c.expect(timer.seconds() < kGradBudgetSeconds, "runtime " + fmt(timer.seconds()) + " s");
  c.note("total " + fmt(timer.seconds(), 3) + " s");
  return c.outcome();
}

// --- 3 ---------------------------------------------------------------------

Outcome attention_invariants(const fs::path &) {
  Checks c;
  Rng rng(7);
  double worst_row = 0;
  for (std::size_t side : {2u, 5u, 9u}) {
    const Tensor a = affinity_matrix(test::random_tensor({1, 6, side, side}, rng, -4, 4),
                                     test::random_tensor({1, 6, side, side}, rng, -4, 4));
    const std::size_t n = side * side;
    for (std::size_t r = 0; r < n; ++r) {
      double acc = 0;
      for (std::size_t k = 0; k < n; ++k) {
        c.expect(a[r * n + k] >= 0, "negative affinity");
        acc += a[r * n + k];
      }
      worst_row = std::max(worst_row, std::abs(acc - 1));
    }
  }
  c.expect(worst_row <= kStochasticTolerance, "row sum off by " + fmt(worst_row));
  c.note("max |row sum - 1| " + fmt(worst_row, 2));

  const Var r(test::random_tensor({2, 5, 3, 4}, rng));
  const MatchResult self = relevance_match(r, r);
  bool identity = true;
  double worst_v = 0;
  for (std::size_t i = 0; i < self.index.size(); ++i) {
    identity = identity && self.index[i] == i % 12;
    worst_v = std::max(worst_v, std::abs(self.value.value()[i] - 1));
  }
  c.expect(identity, "U is not the identity for P = R");
  c.expect(worst_v <= kSelfMatchTolerance, "V deviates from 1 by " + fmt(worst_v));
  c.note("max |V - 1| " + fmt(worst_v, 2));

  const Tensor rb = test::random_tensor({1, 3, 2, 2}, rng, 0.1, 1);
  std::vector<std::size_t> pi(4);
  std::iota(pi.begin(), pi.end(), 0);
  std::size_t perms = 0, recovered = 0;
  do {
    Tensor q(rb.shape());
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t k = 0; k < 4; ++k)
        q[ch * 4 + k] = rb[ch * 4 + pi[k]];
    const MatchResult m = relevance_match(Var(rb), Var(q));
    recovered += gather_positions(Var(q), m.index).value() == rb;
    ++perms;
  } while (std::next_permutation(pi.begin(), pi.end()));
  c.expect(recovered == perms, std::to_string(perms - recovered) + " permutations not inverted");
  c.note(std::to_string(recovered) + "/" + std::to_string(perms) + " permutations");
  return c.outcome();
}

// --- 4 ---------------------------------------------------------------------

Outcome loss_oracle(const fs::path &) {
  Checks c;
  const double hand = ppa_loss(Var(Tensor({1, 1, 2, 2}, 0.5)), Tensor({1, 1, 2, 2}, 0.0)).value()[0];
  c.expect(std::abs(hand - kLossHandValue) <= kLossHandTolerance, "hand case " + fmt(hand, 8));
  c.note("hand " + fmt(hand, 6));

  Rng rng(8);
  const Tensor gt = test::random_mask({2, 1, 24, 24}, rng, 0.3);
  const double perfect = ppa_loss(Var(gt), gt).value()[0];
  c.expect(perfect < kPerfectLossBound, "Omega(S=GT) " + fmt(perfect));
  c.note("Omega(GT,GT) " + fmt(perfect, 2));

  SaliencyOutputs out;
  out.s_rgb = Var(test::random_tensor({2, 1, 24, 24}, rng, 0, 1));
  out.s_depth = Var(test::random_tensor({2, 1, 24, 24}, rng, 0, 1));
  out.s_flow = Var(test::random_tensor({2, 1, 24, 24}, rng, 0, 1));
  out.s_f = Var(test::random_tensor({2, 1, 24, 24}, rng, 0, 1));
  auto at = [&](double l1, double l2, double l3) {
    LossConfig cfg;
    cfg.lambda1 = l1;
    cfg.lambda2 = l2;
    cfg.lambda3 = l3;
    return total_loss(out, gt, cfg).total.value()[0];
  };
  const double base = at(0, 0, 0), d = at(1, 0, 0) - base, f = at(0, 1, 0) - base,
               s = at(0, 0, 1) - base;
  double worst = 0;
  for (int i = 0; i < 20; ++i) {
    const double l1 = rng.uniform(0, 3), l2 = rng.uniform(0, 3), l3 = rng.uniform(0, 3);
    worst = std::max(worst, std::abs(at(l1, l2, l3) - (base + l1 * d + l2 * f + l3 * s)));
  }
  c.expect(worst <= kLinearityTolerance, "linearity residual " + fmt(worst));
  c.note("linearity residual " + fmt(worst, 2));
  return c.outcome();
}

// --- 5 ---------------------------------------------------------------------

Outcome metric_oracle(const fs::path &) {
  Checks c;
  Rng rng(9);
  auto to_map = [](const Tensor &t) {
    return oracle::Map{t.dim(1), t.dim(2), std::vector<double>(t.data().begin(), t.data().end())};
  };
  double worst[4] = {0, 0, 0, 0};
  for (int trial = 0; trial < 200; ++trial) {
    const Tensor g = test::random_mask({1, 8, 8}, rng, rng.uniform(0.05, 0.95));
    const Tensor s = test::random_tensor({1, 8, 8}, rng, 0, 1);
    const auto ms = to_map(s), mg = to_map(g);
    worst[0] = std::max(worst[0], std::abs(mae(s, g) - oracle::mae(ms, mg)));
    if (std::accumulate(g.data().begin(), g.data().end(), 0.0) > 0)
      worst[1] = std::max(worst[1], std::abs(f_measure(s, g).max - oracle::max_f(ms, mg)));
    worst[2] = std::max(worst[2], std::abs(s_measure(s, g) - oracle::s_measure(ms, mg)));
    worst[3] = std::max(worst[3], std::abs(e_measure(s, g).mean - oracle::mean_e(ms, mg)));
  }
  const char *names[4] = {"MAE", "maxF", "S", "E"};
  for (int i = 0; i < 4; ++i) {
    c.expect(worst[i] <= kMetricOracleTolerance, std::string(names[i]) + " differs by " + fmt(worst[i]));
    c.note(std::string(names[i]) + " " + fmt(worst[i], 2));
  }

  const Tensor g = test::random_mask({1, 16, 16}, rng, 0.4);
  const FrameScores id = score_frame(g, g);
  c.expect(id.mae == 0, "identity MAE " + fmt(id.mae));
  c.expect(std::abs(id.max_f - 1) < 1e-12, "identity maxF " + fmt(id.max_f));
  c.expect(std::abs(id.s_alpha - 1) < 1e-9, "identity S " + fmt(id.s_alpha));
  c.expect(std::abs(id.e_phi - kIdentityEphi) < 1e-12, "identity E " + fmt(id.e_phi, 8));
  c.note("identity (" + fmt(id.mae) + ", " + fmt(id.max_f) + ", " + fmt(id.s_alpha) + ", " +
         fmt(id.e_phi, 6) + ")");

  const double hand = mae(Tensor({1, 2, 2}, std::vector<real>{0.2, 0.8, 0.5, 0.0}),
                          Tensor({1, 2, 2}, std::vector<real>{0, 1, 1, 0}));
  c.expect(std::abs(hand - kHandMae) < 1e-12, "hand MAE " + fmt(hand));
  return c.outcome();
}

// --- 6 ---------------------------------------------------------------------

Outcome overfit_run(const fs::path &work) {
  Timer timer;
  Checks c;
  FixtureSpec spec; // 1 video x 20 frames x 64^2
  const DatasetLayout layout = generate_fixture(spec, work / "overfit");
  const ModelConfig model = ModelConfig::tiny();
  TrainConfig train = plain_training(4, 0);
  train.learning_rate = kOverfitLearningRate;
  train.decay_every = 1000000; // constant rate over the whole run
  train.epochs = 1000000;
  train.max_steps = kOverfitMaxSteps;
  Trainer trainer(model, train, layout);

  MetricsReport report;
  bool reached = false;
  while (!reached && trainer.step()) {
    if (trainer.global_step() % kOverfitEvalEvery && !trainer.done())
      continue;
    report = evaluate_model(trainer.model(), layout);
    reached = report.overall.mae < kOverfitMae && report.overall.max_f > kOverfitMaxF;
  }
  c.expect(lr_at_epoch(train, trainer.epoch()) == kOverfitLearningRate, "learning rate changed");
  c.expect(report.overall.mae < kOverfitMae, "MAE " + fmt(report.overall.mae));
  c.expect(report.overall.max_f > kOverfitMaxF, "maxF " + fmt(report.overall.max_f));
  c.expect(timer.seconds() < kOverfitBudgetSeconds, "runtime " + fmt(timer.seconds()) + " s");
  c.note(std::to_string(trainer.global_step()) + " steps, MAE " + fmt(report.overall.mae) +
         ", maxF " + fmt(report.overall.max_f) + ", loss " + fmt(trainer.log().back().total) +
         ", " + fmt(timer.seconds(), 4) + " s");
  return c.outcome();
}

// --- 7 ---------------------------------------------------------------------

Outcome ablation_contract(const fs::path &work) {
  Checks c;
  Rng rng(10);
  for (bool flow_off : {true, false}) {
    ModelConfig cfg = no_augment_size(ModelConfig::tiny(), 32);
    (flow_off ? cfg.use_flow_branch : cfg.use_depth_branch) = false;
    const AtfNet net(cfg, 3);
    const Var rgb(test::random_tensor({1, 3, 32, 32}, rng, 0, 1));
    const Var depth(test::random_tensor({1, 1, 32, 32}, rng, 0, 1));
    const Var flow(test::random_tensor({1, 3, 32, 32}, rng, 0, 1));
    const Tensor ref = net.forward(rgb, depth, flow).s_f.value();
    bool invariant = true;
    for (int trial = 0; trial < 3; ++trial) {
      const Var other(test::random_tensor(flow_off ? flow.shape() : depth.shape(), rng, -5, 5));
      const Tensor got = (flow_off ? net.forward(rgb, depth, other) : net.forward(rgb, other, flow)).s_f.value();
      invariant = invariant && got == ref;
    }
    c.expect(invariant, std::string(flow_off ? "flow" : "depth") + "-off output depends on that input");
  }

  FixtureSpec spec;
  spec.frames = 2;
  spec.size = 32;
  spec.radius = 6;
  const DatasetLayout layout = generate_fixture(spec, work / "ablation");
  ModelConfig basic = no_augment_size(ModelConfig::tiny(), 32);
  basic.use_mea = basic.use_mda = false;
  ModelConfig with_mea = basic, with_mda = basic, full = no_augment_size(ModelConfig::tiny(), 32);
  with_mea.use_mea = true;
  with_mda.use_mda = true;
  const std::pair<const char *, ModelConfig> rows[] = {
      {"basic", basic}, {"+MEA", with_mea}, {"+MDA", with_mda}, {"full", full}};
  std::vector<std::size_t> counts;
  for (const auto &[name, cfg] : rows) {
    try {
      Trainer t(cfg, plain_training(2, 1), layout);
      c.expect(t.step() && std::isfinite(t.log().back().total), std::string(name) + " step failed");
      counts.push_back(t.model().parameter_count());
      c.note(std::string(name) + " " + std::to_string(counts.back()));
    } catch (const std::exception &e) {
      c.expect(false, std::string(name) + ": " + e.what());
    }
  }
  std::vector<std::size_t> sorted = counts;
  std::sort(sorted.begin(), sorted.end());
  c.expect(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
           "parameter counts not distinct");
  return c.outcome();
}

// --- 8 ---------------------------------------------------------------------

Outcome plumbing(const fs::path &work) {
  Checks c;
  Rng rng(11);
  fs::create_directories(work / "flow");
  std::size_t exact = 0;
  for (std::size_t i = 0; i < kFlowFields; ++i) {
    const std::size_t h = 1 + rng.below(12), w = 1 + rng.below(12);
    Tensor f({2, h, w});
    for (auto &v : f.data())
      v = static_cast<float>(rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-6, 4)));
    const fs::path p = work / "flow" / "f.flo";
    write_flow_file(f, p);
    exact += read_flow_file(p) == f;
  }
  c.expect(exact == kFlowFields, std::to_string(kFlowFields - exact) + " flow fields changed");
  c.note(std::to_string(exact) + " flow round trips");

  FixtureSpec spec;
  spec.frames = 4;
  spec.size = 32;
  spec.radius = 6;
  const DatasetLayout layout = generate_fixture(spec, work / "plumbing");
  const ValidationReport v = validate_layout(work / "plumbing");
  c.expect(v.ok(), "fixture does not validate");

  const ModelConfig model = no_augment_size(ModelConfig::tiny(), 32);
  TrainConfig train;
  train.batch_size = 2;
  train.epochs = 2;
  train.seed = 5;
  Trainer straight(model, train, layout);
  while (straight.step()) {
  }
  Trainer first(model, train, layout);
  first.step();
  first.step();
  save_checkpoint(first.checkpoint(), work / "plumbing.ckpt");
  const Checkpoint loaded = load_checkpoint(work / "plumbing.ckpt");
  Trainer second(model, train, layout);
  second.resume(loaded);
  while (second.step()) {
  }
  bool same = straight.log().back().total == second.log().back().total;
  const Checkpoint a = straight.checkpoint(), b = second.checkpoint();
  same = same && a.tensors.size() == b.tensors.size();
  for (std::size_t i = 0; same && i < a.tensors.size(); ++i)
    same = a.tensors[i].value == b.tensors[i].value;
  c.expect(same, "resumed run diverges from the uninterrupted one");
  c.note("resume equivalent: " + std::string(same ? "yes" : "no"));

  const TrainConfig defaults;
  const double want[] = {1e-4, 1e-5, 1e-6};
  const std::size_t epochs[] = {19, 20, 40};
  for (int i = 0; i < 3; ++i) {
    const double lr = lr_at_epoch(defaults, epochs[i]);
    c.expect(std::abs(lr - want[i]) <= 1e-12 * want[i],
             "lr at epoch " + std::to_string(epochs[i]) + " = " + fmt(lr));
  }
  return c.outcome();
}

// --- 9 ---------------------------------------------------------------------

Outcome vidsod_stats(const fs::path &) {
  const char *root = std::getenv("ATF_VIDSOD_ROOT");
  if (!root || !*root || !fs::exists(root))
    return {Status::kSkip, "ATF_VIDSOD_ROOT not set or missing"};
  Checks c;
  const DatasetLayout train = open_layout(root, Split::kTrain);
  const DatasetLayout test = open_layout(root, Split::kTest);
  const DatasetStats s = dataset_stats({train, test});
  c.expect(std::abs(s.size_ratio_mean - kVidsodMeanRatio) <= kVidsodMeanTolerance,
           "mean ratio " + fmt(s.size_ratio_mean, 6));
  c.expect(std::abs(s.size_ratio_min - kVidsodMinRatio) <= kVidsodMinTolerance,
           "min ratio " + fmt(s.size_ratio_min, 6));
  c.expect(s.size_ratio_max == 1.0, "max ratio " + fmt(s.size_ratio_max, 6));
  c.expect(s.frames == kVidsodFrames, "frames " + std::to_string(s.frames));
  c.expect(s.videos == kVidsodVideos, "videos " + std::to_string(s.videos));
  c.expect(s.train_videos == kVidsodTrainVideos && s.test_videos == kVidsodTestVideos,
           "split " + std::to_string(s.train_videos) + "/" + std::to_string(s.test_videos));
  c.note("mean " + fmt(s.size_ratio_mean * 100, 5) + "%, range [" + fmt(s.size_ratio_min * 100, 4) +
         "%, " + fmt(s.size_ratio_max * 100, 4) + "%]");
  return c.outcome();
}

} // namespace

int main(int argc, char **argv) {
  fs::path work = fs::temp_directory_path() / "atf_acceptance";
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work-dir" && i + 1 < argc) {
      work = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');)
        only.push_back(std::stoi(tok));
    } else {
      std::cerr << "usage: atf_acceptance [--work-dir DIR] [--only N[,N...]]\n";
      return 2;
    }
  }
  fs::remove_all(work);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<Outcome(const fs::path &)>>> criteria = {
      {"shape contract", shape_suite},        {"gradient checks", gradient_suite},
      {"attention invariants", attention_invariants}, {"loss oracle", loss_oracle},
      {"metric oracle", metric_oracle},       {"overfit run", overfit_run},
      {"ablation contract", ablation_contract}, {"plumbing", plumbing},
      {"real-data statistics", vidsod_stats}};

  bool failed = false;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
      continue;
    Outcome o;
    try {
      o = criteria[i].second(work);
    } catch (const std::exception &e) {
      o = {Status::kFail, std::string("exception: ") + e.what()};
    }
    const char *tag = o.status == Status::kPass ? "[PASS]" : o.status == Status::kFail ? "[FAIL]" : "[SKIP]";
    failed = failed || o.status == Status::kFail;
    std::cout << tag << " " << id << " " << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failed ? 1 : 0;
}
