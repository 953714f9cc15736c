#include <vector>

#include <benchmark/benchmark.h>

#include "shadowlab/distributions.hpp"
#include "shadowlab/engine_full.hpp"
#include "shadowlab/engine_sampler.hpp"
#include "shadowlab/linalg.hpp"

namespace sl = shadowlab;

static void BM_SpectralDecompose(benchmark::State& state) {
  const auto d = static_cast<sl::Index>(state.range(0));
  const sl::PovmElement m = sl::random_povm_element(d, std::uint64_t{1});
  for (auto _ : state) benchmark::DoNotOptimize(sl::spectral_decompose(m.matrix()));
}
BENCHMARK(BM_SpectralDecompose)->Arg(4)->Arg(16)->Arg(64);

static void BM_KickbackTrajectory(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  sl::Rng rng(2);
  const sl::DensityMatrix rho = sl::random_density(4, 4, rng);
  std::vector<sl::PovmElement> ms;
  for (std::size_t i = 0; i < m; ++i) ms.push_back(sl::random_projector(4, 2, rng));
  sl::RoundParams params;
  params.n = 2000;
  params.k = 150;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sl::trajectory_run(rho, ms, params, seed++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m));
}
BENCHMARK(BM_KickbackTrajectory)->Arg(16)->Arg(64);

static void BM_FullSimRound(benchmark::State& state) {
  const sl::DensityMatrix rho = sl::random_density(2, 2, std::uint64_t{3});
  const std::vector<sl::PovmElement> ms{sl::random_projector(2, 1, std::uint64_t{4})};
  sl::RoundParams params;
  params.n = static_cast<std::uint64_t>(state.range(0));
  params.k = 2;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sl::run_protocol(rho, ms, params, seed++));
}
BENCHMARK(BM_FullSimRound)->Arg(3)->Arg(5)->Arg(7);

static void BM_FourierPmf(benchmark::State& state) {
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sl::FourierLDist(20, n));
}
BENCHMARK(BM_FourierPmf)->Arg(8)->Arg(64);
BENCHMARK_MAIN();
