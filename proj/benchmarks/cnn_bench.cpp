#include <benchmark/benchmark.h>

#include "cnn/trainer.hpp"
#include "oracles.hpp"

using namespace cnn;

namespace {

struct ConvCase {
  Volume input;
  ConvParams params;
};

ConvCase conv_case(const benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const int depth = static_cast<int>(state.range(1));
  SplitMix64 rng(1);
  ConvParams p(depth, ConvLayer{3, 16, 1, 1});
  for (auto block : p.blocks()) testkit::randomize(rng, block);
  return {testkit::random_volume(rng, side, side, depth), std::move(p)};
}

void BM_ConvForward(benchmark::State& state) {
  const auto c = conv_case(state);
  for (auto _ : state) benchmark::DoNotOptimize(conv_forward(c.input, c.params));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ConvForward)->Args({28, 1})->Args({28, 8})->Args({56, 16});

void BM_ConvForwardNaive(benchmark::State& state) {
  const auto c = conv_case(state);
  for (auto _ : state) {
    benchmark::DoNotOptimize(testkit::naive_conv(c.input, c.params.kernels, c.params.biases, 3, 1, 1));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ConvForwardNaive)->Args({28, 1})->Args({28, 8})->Args({56, 16});

void BM_ConvBackward(benchmark::State& state) {
  const auto c = conv_case(state);
  SplitMix64 rng(2);
  const auto up = testkit::random_volume(rng, c.input.height(), c.input.width(), 16);
  for (auto _ : state) benchmark::DoNotOptimize(conv_backward(c.input, c.params, up));
}
BENCHMARK(BM_ConvBackward)->Args({28, 1})->Args({28, 8})->Args({56, 16});

void BM_MaxPool(benchmark::State& state) {
  SplitMix64 rng(3);
  const auto in = testkit::random_volume(rng, 28, 28, 16);
  for (auto _ : state) benchmark::DoNotOptimize(pool_forward(in, PoolSpec{PoolKind::Max, 2, 2}));
}
BENCHMARK(BM_MaxPool);

// One training sample through a bundled template: forward, loss, backward.
void BM_TemplateStep(benchmark::State& state, const char* file) {
  const auto net = init_network(load_arch_file(std::string(CNN_ARCH_DIR) + "/" + file), 0, 1.0);
  SplitMix64 rng(4);
  const auto input = testkit::random_volume(rng, 28, 28, 1, 0.0, 1.0);
  for (auto _ : state) {
    ForwardTrace trace;
    const auto loss = softmax_cross_entropy(forward(net, input, &trace), 3);
    benchmark::DoNotOptimize(backward(net, trace, loss.grad));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK_CAPTURE(BM_TemplateStep, figure2, "figure2.arch");
BENCHMARK_CAPTURE(BM_TemplateStep, figure4, "figure4.arch");

void BM_Evaluate(benchmark::State& state) {
  const auto net = init_network(load_arch_file(std::string(CNN_ARCH_DIR) + "/figure2.arch"), 0, 1.0);
  SplitMix64 rng(5);
  Dataset data;
  for (int i = 0; i < 256; ++i) {
    data.images.push_back(testkit::random_volume(rng, 28, 28, 1, 0.0, 1.0));
    data.labels.push_back(i % 10);
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(net, data));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_Evaluate);

}  // namespace

BENCHMARK_MAIN();
