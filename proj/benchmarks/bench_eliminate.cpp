#include <benchmark/benchmark.h>

#include <random>

#include "chainfg/blockla.hpp"
#include "chainfg/eliminate.hpp"
#include "chainfg/io.hpp"
#include "chainfg/synth.hpp"

using namespace chainfg;

namespace {

SynthDataset make_data(int n) {
    return generate_dataset(n, StateLayout::full_mode(), NoiseSpec{0.1, 0.05, 0.02}, 1234);
}

}  // namespace

static void BM_PartialQr(benchmark::State& state) {
    const int m = static_cast<int>(state.range(0));
    const int n = m / 2;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Mat a(m, n + 1);
    for (auto& v : a.data) v = dist(rng);
    for (auto _ : state) benchmark::DoNotOptimize(partial_qr(a, n / 2));
}
BENCHMARK(BM_PartialQr)->Arg(16)->Arg(64)->Arg(128);

static void BM_EliminateSerial(benchmark::State& state) {
    const auto data = make_data(static_cast<int>(state.range(0)));
    const auto lin = trajectory_to_states(data.truth);
    for (auto _ : state) benchmark::DoNotOptimize(eliminate_serial(data.graph, lin));
}
BENCHMARK(BM_EliminateSerial)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_EliminateParallel1T(benchmark::State& state) {
    const auto data = make_data(static_cast<int>(state.range(0)));
    const auto lin = trajectory_to_states(data.truth);
    for (auto _ : state)
        benchmark::DoNotOptimize(eliminate_parallel(data.graph, lin, ExecPolicy::SingleThread));
}
BENCHMARK(BM_EliminateParallel1T)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_EliminateParallel2T(benchmark::State& state) {
    const auto data = make_data(static_cast<int>(state.range(0)));
    const auto lin = trajectory_to_states(data.truth);
    for (auto _ : state)
        benchmark::DoNotOptimize(eliminate_parallel(data.graph, lin, ExecPolicy::DualThread));
}
BENCHMARK(BM_EliminateParallel2T)->Arg(64)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

static void BM_BackSubstituteParallel(benchmark::State& state) {
    const auto data = make_data(static_cast<int>(state.range(0)));
    const auto lin = trajectory_to_states(data.truth);
    const auto net = eliminate_parallel(data.graph, lin).net;
    for (auto _ : state) benchmark::DoNotOptimize(back_substitute_parallel(net, ExecPolicy::DualThread));
}
BENCHMARK(BM_BackSubstituteParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
