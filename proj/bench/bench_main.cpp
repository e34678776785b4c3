// Serial reference loops against their OpenMP counterparts, plus the two
// smoother evaluation strategies and the two neighbor backends.
#include "muygps/mean_models.hpp"
#include "muygps/neighbors.hpp"
#include "muygps/predictor.hpp"
#include "muygps/trainer.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

namespace {

using namespace muygps;

Locations uniform_points(Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Locations x(n, 2);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = u(rng);
        x(i, 1) = u(rng);
    }
    return x;
}

TrainingSet wavy_problem(Index n) {
    TrainingSet t{uniform_points(n, 7), Vector(n)};
    for (Index i = 0; i < n; ++i) t.responses[i] = std::sin(6.0 * t.locations(i, 0)) * std::cos(4.0 * t.locations(i, 1));
    return t;
}

const HyperParams params = HyperParams::make(1.0, 0.2, 0.8, 0.001);

struct LossFixture {
    TrainingSet train = wavy_problem(10000);
    NeighborIndex index = NeighborIndex::build(train.locations, Backend::exact);
    LooBatch batch = make_loo_batch(index, sample_batch(train.size(), {500, 1}), 50);
};

LossFixture& loss_fixture() {
    static LossFixture f;
    return f;
}

void BM_BatchedLossSerial(benchmark::State& state) {
    auto& f = loss_fixture();
    for (auto _ : state) benchmark::DoNotOptimize(batched_loss_serial(f.train, f.batch, params));
}
BENCHMARK(BM_BatchedLossSerial)->Unit(benchmark::kMillisecond);

void BM_BatchedLossParallel(benchmark::State& state) {
    auto& f = loss_fixture();
    for (auto _ : state) benchmark::DoNotOptimize(batched_loss(f.train, f.batch, params));
}
BENCHMARK(BM_BatchedLossParallel)->Unit(benchmark::kMillisecond);

void BM_PredictSerial(benchmark::State& state) {
    auto& f = loss_fixture();
    const Locations test = uniform_points(2000, 11);
    const NnPredictor p(f.train, f.index, 50, params);
    for (auto _ : state) benchmark::DoNotOptimize(p.predict_serial(test).points.data());
}
BENCHMARK(BM_PredictSerial)->Unit(benchmark::kMillisecond);

void BM_PredictParallel(benchmark::State& state) {
    auto& f = loss_fixture();
    const Locations test = uniform_points(2000, 11);
    const NnPredictor p(f.train, f.index, 50, params);
    for (auto _ : state) benchmark::DoNotOptimize(p.predict(test).points.data());
}
BENCHMARK(BM_PredictParallel)->Unit(benchmark::kMillisecond);

struct Field {
    Index rows, cols;
    std::vector<double> values;
    std::vector<std::uint8_t> observed;
};

Field field(Index side) {
    Field f{side, side, {}, {}};
    std::mt19937_64 rng(3);
    std::bernoulli_distribution keep(0.7);
    for (Index i = 0; i < side * side; ++i) {
        f.observed.push_back(keep(rng) ? 1 : 0);
        f.values.push_back(f.observed.back() ? std::sin(0.05 * static_cast<double>(i)) : 0.0);
    }
    return f;
}

void BM_SmootherDirectSerial(benchmark::State& state) {
    const Field f = field(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(smooth_direct_serial(f.rows, f.cols, f.values, f.observed, 25.0, SmootherKernel::exponential));
}
BENCHMARK(BM_SmootherDirectSerial)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_SmootherDirect(benchmark::State& state) {
    const Field f = field(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(smooth_direct(f.rows, f.cols, f.values, f.observed, 25.0, SmootherKernel::exponential));
}
BENCHMARK(BM_SmootherDirect)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_SmootherFft(benchmark::State& state) {
    const Field f = field(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(smooth_fft(f.rows, f.cols, f.values, f.observed, 25.0, SmootherKernel::exponential));
}
BENCHMARK(BM_SmootherFft)->Arg(40)->Arg(80)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_NeighborQuery(benchmark::State& state) {
    const Locations ref = uniform_points(20000, 5);
    const Locations queries = uniform_points(1000, 6);
    const NeighborIndex index = NeighborIndex::build(ref, state.range(0) ? Backend::approximate : Backend::exact);
    for (auto _ : state) {
        for (Index i = 0; i < queries.rows(); ++i) benchmark::DoNotOptimize(index.query(point(queries, i), 50).ids.data());
    }
    state.SetLabel(state.range(0) ? "hnsw" : "exact");
}
BENCHMARK(BM_NeighborQuery)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
