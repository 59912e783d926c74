// OpenMP kernels against their serial references, at the shapes the model
// actually runs (batch 32, 64×64 scenes, 16×16 heatmaps).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gazefield/kernels.hpp"

namespace k = gazefield::kernels;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

// Heatmap stem, encoder stage and decoder stage.
k::Conv2dGeometry geometry(int which) {
    switch (which) {
        case 0: return {.batch = 32, .in_channels = 6, .in_h = 64, .in_w = 64, .out_channels = 8, .kernel = 4, .stride = 4};
        case 1: return {.batch = 32, .in_channels = 8, .in_h = 16, .in_w = 16, .out_channels = 16, .kernel = 3, .stride = 2, .pad = 1};
        default: return {.batch = 32, .in_channels = 24, .in_h = 16, .in_w = 16, .out_channels = 8, .kernel = 3, .stride = 1, .pad = 1};
    }
}

template <bool Parallel>
void conv_forward(benchmark::State& state) {
    const auto g = geometry(static_cast<int>(state.range(0)));
    const auto x = random_vector(g.batch * g.in_channels * g.in_h * g.in_w, 1);
    const auto w = random_vector(g.out_channels * g.patch(), 2);
    const auto b = random_vector(g.out_channels, 3);
    std::vector<double> y(g.batch * g.out_channels * g.out_h() * g.out_w());
    for (auto _ : state) {
        if constexpr (Parallel) k::conv2d_forward(g, x, w, b, y);
        else k::reference::conv2d_forward(g, x, w, b, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.counters["threads"] = Parallel ? k::max_threads() : 1;
}

template <bool Parallel>
void conv_backward(benchmark::State& state) {
    const auto g = geometry(static_cast<int>(state.range(0)));
    const auto x = random_vector(g.batch * g.in_channels * g.in_h * g.in_w, 1);
    const auto w = random_vector(g.out_channels * g.patch(), 2);
    const auto dy = random_vector(g.batch * g.out_channels * g.out_h() * g.out_w(), 3);
    std::vector<double> dx(x.size()), dw(w.size()), db(g.out_channels);
    for (auto _ : state) {
        if constexpr (Parallel) k::conv2d_backward(g, x, w, dy, dx, dw, db);
        else k::reference::conv2d_backward(g, x, w, dy, dx, dw, db);
        benchmark::DoNotOptimize(dw.data());
    }
    state.counters["threads"] = Parallel ? k::max_threads() : 1;
}

template <bool Parallel>
void gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_vector(n * n, 1), b = random_vector(n * n, 2);
    std::vector<double> c(n * n);
    for (auto _ : state) {
        if constexpr (Parallel) k::gemm(n, n, n, a, b, c);
        else k::reference::gemm(n, n, n, a, b, c);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

}  // namespace

BENCHMARK(conv_forward<true>)->Name("conv_forward/parallel")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(conv_forward<false>)->Name("conv_forward/reference")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(conv_backward<true>)->Name("conv_backward/parallel")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(conv_backward<false>)->Name("conv_backward/reference")->DenseRange(0, 2)->Unit(benchmark::kMillisecond);
BENCHMARK(gemm<true>)->Name("gemm/parallel")->RangeMultiplier(2)->Range(64, 256)->Unit(benchmark::kMillisecond);
BENCHMARK(gemm<false>)->Name("gemm/reference")->RangeMultiplier(2)->Range(64, 256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
