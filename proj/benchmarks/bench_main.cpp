// Microbenchmarks for the hot paths: per-window statistics, the HRV
// block, forest fitting/prediction and the MERF E-step.

#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "fatigue/forest.hpp"
#include "fatigue/hrv.hpp"
#include "fatigue/merf.hpp"
#include "fatigue/rng.hpp"
#include "fatigue/stats.hpp"

namespace {

using fatigue::Matrix;
using fatigue::Rng;

std::vector<double> random_series(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> xs(n);
    for (auto& v : xs) v = 800.0 + rng.normal(0.0, 40.0);
    return xs;
}

void BM_stat13(benchmark::State& state) {
    auto xs = random_series(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(fatigue::stats::stat13(xs));
}
BENCHMARK(BM_stat13)->Arg(72)->Arg(360);

void BM_hrv30(benchmark::State& state) {
    // Roughly one five-minute window of beats.
    auto rr = random_series(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(fatigue::hrv::hrv30(rr));
}
BENCHMARK(BM_hrv30)->Arg(128)->Arg(384)->Unit(benchmark::kMicrosecond);

struct ForestData {
    Matrix X{0, 0};
    std::vector<double> y;
};

ForestData make_forest_data(std::size_t n, std::size_t p) {
    Rng rng(3);
    ForestData data;
    data.X = Matrix(n, p);
    data.y.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < p; ++c) data.X.at(r, c) = rng.uniform();
        data.y[r] = 10.0 * data.X.at(r, 0) + 5.0 * data.X.at(r, 1) + rng.normal();
    }
    return data;
}

void BM_forest_fit(benchmark::State& state) {
    auto data = make_forest_data(static_cast<std::size_t>(state.range(0)), 30);
    fatigue::forest::ForestParams params;
    params.n_trees = 20;
    params.seed = 4;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            fatigue::forest::fit_forest(data.X, data.y, params));
}
BENCHMARK(BM_forest_fit)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_forest_predict(benchmark::State& state) {
    auto data = make_forest_data(800, 30);
    fatigue::forest::ForestParams params;
    params.n_trees = 50;
    params.seed = 5;
    auto model = fatigue::forest::fit_forest(data.X, data.y, params);
    std::size_t row = 0;
    for (auto _ : state) {
        std::span<const double> x{data.X.row(row), data.X.cols()};
        benchmark::DoNotOptimize(model.predict(x));
        row = (row + 1) % data.X.rows();
    }
}
BENCHMARK(BM_forest_predict);

void BM_merf_estep(benchmark::State& state) {
    Rng rng(6);
    const int q = 20;
    const std::size_t n = 800;
    std::vector<int> clusters(n);
    std::vector<double> residuals(n);
    for (std::size_t i = 0; i < n; ++i) {
        clusters[i] = static_cast<int>(i % q);
        residuals[i] = rng.normal(0.0, 2.0);
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(
            fatigue::merf::estep(residuals, clusters, 1.0, 4.0));
}
BENCHMARK(BM_merf_estep);

}  // namespace

BENCHMARK_MAIN();
