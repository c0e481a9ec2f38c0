#include <benchmark/benchmark.h>

#include "igshm/models.hpp"
#include "igshm/netcore/training.hpp"

#include <random>

using namespace igshm;

namespace {

net::Tensor randomBatch(std::size_t n, std::size_t c, std::size_t t, std::uint64_t seed)
{
    net::Tensor x({n, c, t});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    for (double& v : x.storage()) v = dist(rng);
    return x;
}

models::CnnArch archFor(std::int64_t divisor)
{
    return models::CnnArch{}.narrowed(static_cast<std::size_t>(divisor));
}

}  // namespace

static void BM_CnnForward(benchmark::State& state)
{
    net::Model model = models::buildCnn(37, 150, archFor(state.range(0)));
    model.initialize(1);
    const auto batch = randomBatch(32, 37, 150, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.forward(batch));
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_CnnForward)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_CnnTrainStep(benchmark::State& state)
{
    net::Model model = models::buildCnn(37, 150, archFor(state.range(0)));
    model.initialize(1);
    const auto batch = randomBatch(32, 37, 150, 2);
    std::vector<std::size_t> labels(32);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 6;
    net::AdamW opt;
    net::Rng rng(3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(net::trainStep(model, batch, labels, opt, rng, 0.05));
    }
    state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_CnnTrainStep)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_CnnInputGradients(benchmark::State& state)
{
    net::Model model = models::buildCnn(37, 150, archFor(state.range(0)));
    model.initialize(1);
    const auto batch = randomBatch(50, 37, 150, 2);
    std::vector<std::size_t> targets(50, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.inputGradients(batch, targets, net::OutputKind::Logit));
    }
    state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_CnnInputGradients)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

