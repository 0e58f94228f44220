#include <benchmark/benchmark.h>

#include "twmlp/tensor.hpp"

using namespace twmlp;

namespace {

void BM_Matmul(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<float> data(static_cast<std::size_t>(n) * n, 0.5f);
  for (auto _ : state) {
    GraphF g;
    TensorId a = g.constant(n, n, data);
    TensorId b = g.constant(n, n, data);
    benchmark::DoNotOptimize(g.value(g.matmul(a, b)).data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}

void BM_LayerNorm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<float> data(static_cast<std::size_t>(n) * n, 0.5f);
  std::vector<float> ones(static_cast<std::size_t>(n), 1.0f);
  std::vector<float> zeros(static_cast<std::size_t>(n), 0.0f);
  for (auto _ : state) {
    GraphF g;
    TensorId x = g.constant(n, n, data);
    TensorId gain = g.constant(1, n, ones);
    TensorId bias = g.constant(1, n, zeros);
    benchmark::DoNotOptimize(g.value(g.layer_norm(x, gain, bias)).data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(n) * n);
}

void BM_Silu(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<float> data(static_cast<std::size_t>(n) * n, 0.5f);
  for (auto _ : state) {
    GraphF g;
    TensorId x = g.constant(n, n, data);
    benchmark::DoNotOptimize(g.value(g.silu(x)).data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(n) * n);
}

BENCHMARK(BM_Matmul)->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_LayerNorm)->Arg(64)->Arg(512);
BENCHMARK(BM_Silu)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
