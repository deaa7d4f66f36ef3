// Serial vs OpenMP variants of the hot kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "pairforge/kernels.hpp"
#include "pairforge/simulation.hpp"

using namespace pairforge;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

constexpr std::size_t kDim = 256;

template <auto Scan>
void BM_CosineScan(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  auto bank = random_values(rows * kDim, 1, -1, 1);
  auto query = random_values(kDim, 2, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Scan(query, bank, kDim));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_CosineScan<kernels::cosine_scan_serial>)->Name("cosine_scan/serial")->Arg(1000)->Arg(10000);
BENCHMARK(BM_CosineScan<kernels::cosine_scan_parallel>)->Name("cosine_scan/parallel")->Arg(1000)->Arg(10000);

template <auto Batch>
void BM_IfdBatch(benchmark::State& state) {
  const auto items = static_cast<std::size_t>(state.range(0));
  const std::size_t tokens = 512;
  auto cond = random_values(items * tokens, 3, -6, 0);
  auto uncond = random_values(items * tokens, 4, -8, 0);
  std::vector<kernels::LogprobPair> batch;
  for (std::size_t i = 0; i < items; ++i) {
    batch.push_back({std::span<const double>(cond).subspan(i * tokens, tokens),
                     std::span<const double>(uncond).subspan(i * tokens, tokens)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(Batch(batch));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(items));
}
BENCHMARK(BM_IfdBatch<kernels::ifd_batch_serial>)->Name("ifd_batch/serial")->Arg(64)->Arg(1024);
BENCHMARK(BM_IfdBatch<kernels::ifd_batch_parallel>)->Name("ifd_batch/parallel")->Arg(64)->Arg(1024);

template <bool Parallel>
void BM_Sweep(benchmark::State& state) {
  std::vector<SweepCell> cells{{0.05, "default", parse_profiles("0.6:0.8,0.1:0.3x9")}};
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 8; ++s) seeds.push_back(s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Parallel ? sweep_parallel(cells, 10000, seeds) : sweep_serial(cells, 10000, seeds));
  }
}
BENCHMARK(BM_Sweep<false>)->Name("sweep_8x10k/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep<true>)->Name("sweep_8x10k/parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
