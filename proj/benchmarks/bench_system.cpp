#include <benchmark/benchmark.h>

#include "mlti/experiments.hpp"
#include "mlti/random.hpp"
#include "mlti/system.hpp"

using namespace mlti;

namespace {

MltiSystem stable_system(const Shape& state, std::uint64_t seed) {
    Rng rng(seed);
    RandomSystemOptions opts;
    opts.target_rho = 0.7;
    return random_system(state, state, state, rng, opts);
}

void BM_Simulate(benchmark::State& state) {
    const MltiSystem s = stable_system(Shape{3, 3}, 23);
    Rng rng(29);
    const DenseTensor x0 = random_tensor(s.state_shape(), rng);
    std::vector<DenseTensor> inputs;
    for (int k = 0; k < 32; ++k) inputs.push_back(random_tensor(s.input_shape(), rng));
    for (auto _ : state) benchmark::DoNotOptimize(simulate(s, x0, inputs, 32));
}
BENCHMARK(BM_Simulate);

void BM_LyapunovSolve(benchmark::State& state) {
    const MltiSystem s = stable_system(Shape{3, 3}, 31);
    for (auto _ : state) benchmark::DoNotOptimize(lyapunov_solve(s, GramianKind::Reach));
}
BENCHMARK(BM_LyapunovSolve);

void BM_ReachabilityTensor(benchmark::State& state) {
    const MltiSystem s = stable_system(Shape{3, 2}, 37);
    for (auto _ : state) benchmark::DoNotOptimize(reachability_tensor(s));
}
BENCHMARK(BM_ReachabilityTensor);

void BM_HinfEstimate(benchmark::State& state) {
    const MltiSystem s = stable_system(Shape{3, 2}, 41);
    CompressOptions opts;
    opts.format = FactorFormat::Ttd;
    const CompressResult r = compress(s, opts);
    for (auto _ : state)
        benchmark::DoNotOptimize(hinf_relative_error(s, r.system, state.range(0)));
}
BENCHMARK(BM_HinfEstimate)->Arg(128)->Arg(512);

void BM_BalancedTruncation(benchmark::State& state) {
    const MltiSystem s = stable_system(Shape{3, 3}, 43);
    for (auto _ : state)
        benchmark::DoNotOptimize(balanced_truncation_baseline(s, state.range(0), 64));
}
BENCHMARK(BM_BalancedTruncation)->Arg(3)->Arg(6);

} // namespace
