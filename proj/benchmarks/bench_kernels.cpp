// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "atf/atfnet.hpp"
#include "atf/mda.hpp"
#include "atf/mea.hpp"
#include "atf/ops.hpp"
#include "atf/rng.hpp"

namespace {

atf::Tensor noise(const atf::Shape &shape, atf::Rng &rng) {
  atf::Tensor t(shape);
  for (auto &v : t.data())
    v = rng.uniform(-1, 1);
  return t;
}

// Args: spatial side, channels.
void BM_Conv3x3(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  atf::Rng rng(1);
  const atf::Var x(noise({1, c, n, n}, rng));
  const atf::Var w(noise({c, c, 3, 3}, rng));
  atf::NoGradGuard guard;
  for (auto _ : state)
    benchmark::DoNotOptimize(atf::nn::conv2d(x, w, atf::Var(), 1, 1).value().ptr());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * c * c * 9));
}
BENCHMARK(BM_Conv3x3)->Args({88, 16})->Args({44, 64})->Args({22, 128});

void BM_AffinityTransfer(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  atf::Rng rng(2);
  const atf::Var d(noise({1, 8, n, n}, rng)), f(noise({1, 8, n, n}, rng));
  atf::NoGradGuard guard;
  for (auto _ : state)
    benchmark::DoNotOptimize(atf::affinity_transfer(d, f).value().ptr());
}
BENCHMARK(BM_AffinityTransfer)->Arg(22)->Arg(44)->Arg(88);

// wh <= 4096 runs the exact search, above it the single-precision one.
void BM_RelevanceMatch(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  atf::Rng rng(3);
  const atf::Var r(noise({1, 16, n, n}, rng)), p(noise({1, 16, n, n}, rng));
  atf::NoGradGuard guard;
  for (auto _ : state)
    benchmark::DoNotOptimize(atf::relevance_match(r, p).index.data());
}
BENCHMARK(BM_RelevanceMatch)->Arg(11)->Arg(44)->Arg(88);

void forward(benchmark::State &state, atf::ModelConfig cfg) {
  const auto n = static_cast<std::size_t>(state.range(0));
  cfg.input_size = n;
  const atf::AtfNet net(cfg, 4);
  atf::Rng rng(4);
  const atf::Var rgb(noise({1, 3, n, n}, rng)), depth(noise({1, 1, n, n}, rng)),
      flow(noise({1, 3, n, n}, rng));
  atf::NoGradGuard guard;
  for (auto _ : state)
    benchmark::DoNotOptimize(net.forward(rgb, depth, flow).s_f.value().ptr());
}

void BM_ForwardTiny(benchmark::State &state) { forward(state, atf::ModelConfig::tiny()); }
BENCHMARK(BM_ForwardTiny)->Arg(64)->Arg(352)->Unit(benchmark::kMillisecond);

void BM_ForwardDefault(benchmark::State &state) { forward(state, atf::ModelConfig{}); }
BENCHMARK(BM_ForwardDefault)->Arg(64)->Arg(352)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
