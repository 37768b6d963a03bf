// Serial reference kernels vs the OpenMP versions on shapes that show up in
// the default network. Run with OMP_NUM_THREADS set to compare scaling.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "drn/numerics/kernels.hpp"
#include "drn/numerics/reference_kernels.hpp"

namespace {

std::vector<float> random_buffer(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// A batch of 16x16 ReNet steps: 64 rows, 256 hidden.
template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0)), n = 512, k = 320;
  const auto a = random_buffer(m * k, 1), b = random_buffer(k * n, 2);
  std::vector<float> c(m * n);
  const drn::GemmShape s{m, n, k};
  for (auto _ : state) {
    if constexpr (Parallel) drn::kernels::gemm(s, a.data(), b.data(), c.data(), false);
    else drn::reference::gemm(s, a.data(), b.data(), c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(2 * m * n * k));
}

// The stem: 3 -> 64 channels, 3x3, on a 32x32 image.
template <bool Parallel>
void BM_Conv(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  const drn::ConvGeometry g{3, 32, 32, 3, 1, 1};
  const auto x = random_buffer(batch * 3 * 32 * 32, 3), w = random_buffer(64 * 27, 4), bias = random_buffer(64, 5);
  std::vector<float> y(batch * 64 * 32 * 32);
  for (auto _ : state) {
    if constexpr (Parallel) drn::kernels::conv2d_forward(g, batch, 64, x.data(), w.data(), bias.data(), y.data());
    else drn::reference::conv2d_forward(g, batch, 64, x.data(), w.data(), bias.data(), y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_Gated(benchmark::State& state) {
  const std::size_t rows = static_cast<std::size_t>(state.range(0)), hidden = 256;
  const auto pre = random_buffer(rows * 2 * hidden, 6), prev = random_buffer(rows * hidden, 7);
  std::vector<float> c(rows * hidden), ht(rows * hidden), h(rows * hidden);
  for (auto _ : state) {
    if constexpr (Parallel)
      drn::kernels::gated_update_forward(drn::Activation::Tanh, pre.data(), prev.data(), c.data(), ht.data(), h.data(),
                                         rows, hidden);
    else
      drn::reference::gated_update_forward(drn::Activation::Tanh, pre.data(), prev.data(), c.data(), ht.data(),
                                           h.data(), rows, hidden);
    benchmark::DoNotOptimize(h.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm/reference")->Arg(64)->Arg(512);
BENCHMARK(BM_Gemm<true>)->Name("gemm/parallel")->Arg(64)->Arg(512);
BENCHMARK(BM_Conv<false>)->Name("conv_stem/reference")->Arg(8);
BENCHMARK(BM_Conv<true>)->Name("conv_stem/parallel")->Arg(8);
BENCHMARK(BM_Gated<false>)->Name("gated_update/reference")->Arg(1024);
BENCHMARK(BM_Gated<true>)->Name("gated_update/parallel")->Arg(1024);

BENCHMARK_MAIN();
