#include <benchmark/benchmark.h>

#include <random>

#include "diststn/model.hpp"
#include "diststn/ops.hpp"
#include "diststn/optim.hpp"
#include "diststn/stn.hpp"
#include "diststn/tape.hpp"

namespace {

using namespace diststn;

Tensor noise(Shape shape, std::uint64_t seed, bool grad = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t(shape);
  for (double& v : t.data()) v = u(rng);
  t.set_requires_grad(grad);
  return t;
}

// args: channels in, channels out, extent
void BM_Conv2dForward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto cout = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  Tensor x = noise({cin, n, n}, 1);
  Tensor k = noise({cout, cin, 4, 4}, 2);
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(conv2d(tape, x, k, {2, 1}).data().data());
  }
}
BENCHMARK(BM_Conv2dForward)->Args({1, 16, 64})->Args({16, 32, 32})->Args({32, 48, 16});

void BM_Conv2dBackward(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto cout = static_cast<std::size_t>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(2));
  Tensor x = noise({cin, n, n}, 1, true);
  Tensor k = noise({cout, cin, 4, 4}, 2, true);
  for (auto _ : state) {
    Tape tape;
    Tensor loss = reduce_mean(tape, conv2d(tape, x, k, {2, 1}));
    backward(loss, tape);
  }
}
BENCHMARK(BM_Conv2dBackward)->Args({1, 16, 64})->Args({16, 32, 32})->Args({32, 48, 16});

void BM_GridSample(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  Tensor x = noise({c, n, n}, 3);
  const AffineParams theta{{0.9, -0.3, 0.05, 0.3, 0.9, -0.1}};
  for (auto _ : state) benchmark::DoNotOptimize(warp(x, theta).data().data());
}
BENCHMARK(BM_GridSample)->Args({1, 64})->Args({24, 8});

// One pair through the full objective, backward included, plus an optimizer step.
void BM_PairStep(benchmark::State& state) {
  const auto n = static_cast<std::uint32_t>(state.range(0));
  ModelConfig cfg;
  cfg.image_size = n;
  cfg.num_classes = 10;
  DistStnModel model(cfg, 0);
  Tensor xi = noise({1, n, n}, 4), xj = noise({1, n, n}, 5);
  const SgdOptions sgd{0.001, 0.9, 0.004, WeightDecayMode::kCoupled};
  for (auto _ : state) {
    Tape tape;
    PairLoss pl = pair_loss(tape, model, xi, 1, xj, 2);
    backward(pl.total, tape);
    sgd_momentum_step(model.groups(), sgd);
  }
}
BENCHMARK(BM_PairStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
