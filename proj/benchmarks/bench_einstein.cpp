#include <benchmark/benchmark.h>

#include "mlti/einstein.hpp"
#include "mlti/random.hpp"

using namespace mlti;

namespace {

EvenPairedTensor square_operand(Index extent, Index order, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Index> dims(static_cast<std::size_t>(order), extent);
    return random_paired(PairedShape::square(Shape{dims}), rng);
}

void BM_EinsteinApply(benchmark::State& state) {
    const Index extent = state.range(0);
    const Index order = state.range(1);
    const EvenPairedTensor a = square_operand(extent, order, 1);
    Rng rng(2);
    const DenseTensor x = random_tensor(a.pshape().col_shape(), rng);
    for (auto _ : state) benchmark::DoNotOptimize(einstein_apply(a, x));
}
BENCHMARK(BM_EinsteinApply)->Args({3, 2})->Args({3, 3})->Args({4, 3});

void BM_EinsteinCompose(benchmark::State& state) {
    const Index extent = state.range(0);
    const Index order = state.range(1);
    const EvenPairedTensor a = square_operand(extent, order, 1);
    const EvenPairedTensor b = square_operand(extent, order, 2);
    for (auto _ : state) benchmark::DoNotOptimize(einstein_compose(a, b));
}
BENCHMARK(BM_EinsteinCompose)->Args({3, 2})->Args({3, 3});

// Matrix route for the same contraction, for comparison with the direct form.
void BM_EinsteinComposeViaPhi(benchmark::State& state) {
    const Index extent = state.range(0);
    const Index order = state.range(1);
    const EvenPairedTensor a = square_operand(extent, order, 1);
    const EvenPairedTensor b = square_operand(extent, order, 2);
    for (auto _ : state) {
        const Eigen::MatrixXd m = phi(a) * phi(b);
        benchmark::DoNotOptimize(phi_inverse(m, a.pshape()));
    }
}
BENCHMARK(BM_EinsteinComposeViaPhi)->Args({3, 2})->Args({3, 3});

void BM_Phi(benchmark::State& state) {
    const EvenPairedTensor a = square_operand(2, state.range(0), 3);
    for (auto _ : state) benchmark::DoNotOptimize(phi(a));
}
BENCHMARK(BM_Phi)->Arg(4)->Arg(6)->Arg(8);

} // namespace
