#include <benchmark/benchmark.h>

#include <vector>

#include "volfit/analytics.hpp"
#include "volfit/arbitrage.hpp"
#include "volfit/atm_curve.hpp"
#include "volfit/model.hpp"
#include "volfit/net.hpp"
#include "volfit/pricing.hpp"
#include "volfit/synthetic.hpp"
#include "volfit/trainer.hpp"

using namespace volfit;

namespace {

SurfaceModel default_model(const std::vector<int>& widths) {
    SurfaceModel model;
    model.mlp = init_params(widths, 1);
    model.prior = PriorKind::Ssvi;
    model.ssvi = SsviParams::defaults();
    std::vector<AtmKnot> knots;
    for (const double tau : {0.1, 0.5, 1.0, 3.0}) knots.push_back({tau, 0.04 * tau});
    model.atm = AtmTermStructure::from_knots(knots);
    model.ranges = {-1.5, 1.2, 2.0};
    return model;
}

const std::vector<Quote>& synthetic_quotes() {
    static const std::vector<Quote> quotes = generate_dataset().quotes;
    return quotes;
}

void BM_BsCallPrice(benchmark::State& state) {
    double strike = 0.8;
    for (auto _ : state) {
        benchmark::DoNotOptimize(bs_call_price(1.0, 0.2, 0.01, 0.0, strike, 0.5));
        strike = strike < 1.2 ? strike + 1e-9 : 0.8;
    }
}
BENCHMARK(BM_BsCallPrice);

void BM_ImpliedVol(benchmark::State& state) {
    const double price = bs_call_price(1.0, 0.2, 0.0, 0.0, 1.05, 0.5);
    for (auto _ : state)
        benchmark::DoNotOptimize(implied_vol(price, 1.0, 0.0, 0.0, 1.05, 0.5, true));
}
BENCHMARK(BM_ImpliedVol);

void BM_SurfaceJet(benchmark::State& state) {
    const SurfaceModel model = default_model({40, 40, 40, 40});
    double k = -0.5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(surface_jet(model, k, 0.7));
        k = k < 0.5 ? k + 1e-9 : -0.5;
    }
}
BENCHMARK(BM_SurfaceJet);

void BM_FftSlice(benchmark::State& state) {
    const std::vector<double> strikes{0.8, 0.9, 1.0, 1.1, 1.2};
    for (auto _ : state)
        benchmark::DoNotOptimize(fft_call_prices(BatesParams::defaults(), 0.5, 1.0, strikes));
}
BENCHMARK(BM_FftSlice);

/// One full training epoch: forward jets and parameter gradient over the
/// quotes plus every penalty grid point.
void BM_EpochGradient(benchmark::State& state) {
    const int width = static_cast<int>(state.range(0));
    const SurfaceModel model = default_model(std::vector<int>(4, width));
    const std::vector<Quote>& quotes = synthetic_quotes();
    const ConstraintGrids grids =
        build_grids(model.ranges.k_min, model.ranges.k_max, model.ranges.tau_max);
    LossEvaluator evaluator(model, quotes, grids);
    TrainConfig config;
    ParamGrad grad;
    for (auto _ : state) benchmark::DoNotOptimize(evaluator.evaluate(model, config, &grad));
}
BENCHMARK(BM_EpochGradient)->Arg(5)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_DensityLocalVol(benchmark::State& state) {
    const SurfaceModel model = default_model({8, 8});
    double k = -0.4;
    for (auto _ : state) {
        benchmark::DoNotOptimize(density(model, k, 1.0, StrikeInput::LogMoneyness));
        benchmark::DoNotOptimize(local_vol(model, k, 1.0));
        k = k < 0.4 ? k + 1e-9 : -0.4;
    }
}
BENCHMARK(BM_DensityLocalVol);

} // namespace

BENCHMARK_MAIN();
