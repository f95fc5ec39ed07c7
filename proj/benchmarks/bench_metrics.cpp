#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "mgtd/calibrate.hpp"
#include "mgtd/metrics.hpp"

using namespace mgtd;

namespace {

std::vector<ScoredSample> synthetic_scores(std::size_t n, unsigned seed) {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<ScoredSample> scored;
    scored.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ScoredSample s;
        s.id = std::to_string(i);
        s.label = i % 2 ? Label::machine : Label::human;
        // Overlapping distributions, quantized to plant ties.
        double base = s.label == Label::machine ? 0.6 : 0.4;
        s.score = std::round((base * unit(gen) + (1 - base) * unit(gen)) * 1000.0) / 1000.0;
        s.dataset = "bench";
        scored.push_back(std::move(s));
    }
    return scored;
}

}  // namespace

static void BM_RocCurve(benchmark::State& state) {
    auto scored = synthetic_scores(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::roc_curve(scored));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RocCurve)->Arg(10'000)->Arg(100'000)->Arg(1'000'000);

static void BM_AucFromCurve(benchmark::State& state) {
    auto scored = synthetic_scores(static_cast<std::size_t>(state.range(0)), 2);
    auto curve = metrics::roc_curve(scored);
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::auc(curve));
    }
}
BENCHMARK(BM_AucFromCurve)->Arg(100'000);

static void BM_Confusion(benchmark::State& state) {
    auto scored = synthetic_scores(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::confusion(scored, 0.5));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Confusion)->Arg(100'000);

static void BM_CalibrateDefaultGrid(benchmark::State& state) {
    std::map<std::string, std::vector<ScoredSample>> by_dataset;
    for (int d = 0; d < 4; ++d) {
        by_dataset["ds" + std::to_string(d)] =
            synthetic_scores(static_cast<std::size_t>(state.range(0)), 10 + d);
    }
    auto grid = calibrate::default_grid();
    for (auto _ : state) {
        benchmark::DoNotOptimize(calibrate::calibrate(by_dataset, grid));
    }
}
BENCHMARK(BM_CalibrateDefaultGrid)->Arg(10'000);
