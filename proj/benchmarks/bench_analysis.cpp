#include <benchmark/benchmark.h>

#include "igshm/attribution.hpp"
#include "igshm/models.hpp"
#include "igshm/spectra.hpp"
#include "igshm/surrogate.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace igshm;

// One attribution map for a 37x150 sample; range(0) = path steps, range(1) = width divisor.
static void BM_IntegratedGradients(benchmark::State& state)
{
    net::Model model = models::buildCnn(37, 150, models::CnnArch{}.narrowed(static_cast<std::size_t>(state.range(1))));
    model.initialize(1);
    net::Tensor x({37, 150});
    std::mt19937_64 rng(4);
    std::normal_distribution<double> dist;
    for (double& v : x.storage()) v = dist(rng);
    attribution::IgOptions o;
    o.steps = static_cast<int>(state.range(0));
    o.targetClass = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(attribution::integratedGradients(model, x, baselines::BaselineKind::TVB, o));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IntegratedGradients)->Args({20, 8})->Args({200, 8})->Args({200, 1})->Unit(benchmark::kMillisecond);

// STFT of one 150 s channel at 100 Hz.
static void BM_Stft(benchmark::State& state)
{
    std::vector<double> signal(15000);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 0.02);
    for (std::size_t n = 0; n < signal.size(); ++n) {
        signal[n] = 0.1 * std::sin(2.0 * std::numbers::pi * 1.9 * static_cast<double>(n) / 100.0) + dist(rng);
    }
    const auto spec = state.range(0) == 0 ? spectra::StftSpec::coarseTime() : spectra::StftSpec::fineTime();
    for (auto _ : state) {
        benchmark::DoNotOptimize(spectra::stft(signal, spec));
    }
}
BENCHMARK(BM_Stft)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

// Simulating one 150 s run.
static void BM_SimulateRun(benchmark::State& state)
{
    const auto config = surrogate::staticDominantConfig();
    const auto series = config.testSeries.front();
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(surrogate::simulateRun(config, series, 3, 1, ++seed));
    }
}
BENCHMARK(BM_SimulateRun)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
