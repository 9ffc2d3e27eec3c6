#include <benchmark/benchmark.h>

#include "mlti/decomp.hpp"
#include "mlti/random.hpp"
#include "mlti/system.hpp"

using namespace mlti;

namespace {

GenTtCores planted_operator(Index n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Index> dims(static_cast<std::size_t>(n), 2);
    std::vector<Index> ranks(static_cast<std::size_t>(n + 1), 3);
    ranks.front() = ranks.back() = 1;
    return random_gen_tt(PairedShape::square(Shape{dims}), ranks, rng, 0.5);
}

void BM_TtSvdExact(benchmark::State& state) {
    Rng rng(11);
    std::vector<Index> dims(static_cast<std::size_t>(state.range(0)), 2);
    const DenseTensor x = random_tensor(Shape{dims}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(tt_svd_exact(x));
}
BENCHMARK(BM_TtSvdExact)->Arg(8)->Arg(12)->Arg(16);

void BM_GeneralizedTtdExact(benchmark::State& state) {
    const GenTtCores cores = planted_operator(state.range(0), 13);
    const EvenPairedTensor a = gen_ttd_to_full(cores);
    for (auto _ : state) benchmark::DoNotOptimize(generalized_ttd_exact(a));
}
BENCHMARK(BM_GeneralizedTtdExact)->Arg(4)->Arg(6);

// The two sigma_max routes compared in the timing experiment.
void BM_SigmaViaTtPipeline(benchmark::State& state) {
    const GenTtCores cores = planted_operator(state.range(0), 17);
    for (auto _ : state) benchmark::DoNotOptimize(ttd_sigma_max(cores));
}
BENCHMARK(BM_SigmaViaTtPipeline)->Arg(6)->Arg(8);

void BM_SigmaViaDenseSvd(benchmark::State& state) {
    const GenTtCores cores = planted_operator(state.range(0), 17);
    const Eigen::MatrixXd m = factored_unfold(FactoredTensor{cores});
    for (auto _ : state) benchmark::DoNotOptimize(linalg::singular_values(m));
}
BENCHMARK(BM_SigmaViaDenseSvd)->Arg(6)->Arg(8);

void BM_CpAls(benchmark::State& state) {
    Rng rng(19);
    const DenseTensor x = random_tensor(Shape{9, 9, 9}, rng, 0.3);
    CpOptions opts;
    opts.max_iter = 50;
    opts.restarts = 1;
    for (auto _ : state) benchmark::DoNotOptimize(cp_als(x, state.range(0), opts));
}
BENCHMARK(BM_CpAls)->Arg(5)->Arg(20);

} // namespace
