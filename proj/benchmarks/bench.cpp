#include <benchmark/benchmark.h>

#include "fcdcast/featurize.hpp"
#include "fcdcast/layers.hpp"
#include "fcdcast/lstm.hpp"
#include "fcdcast/models.hpp"
#include "fcdcast/panel.hpp"
#include "fcdcast/training.hpp"

namespace {

using namespace fcd;

nn::Tensor noise(nn::Shape shape, std::uint64_t seed) {
    Rng rng = substream(seed, "bench");
    nn::Tensor t(std::move(shape));
    for (double& v : t.values()) v = standard_normal(rng);
    return t;
}

const data::SpeedPanel& bench_panel() {
    static const data::SpeedPanel panel = [] {
        data::SyntheticConfig cfg;
        cfg.n_edges = 32;
        cfg.n_days = 10;
        return data::generate_synthetic(cfg);
    }();
    return panel;
}

void BM_FeaturizeReduced(benchmark::State& state) {
    const auto& panel = bench_panel();
    const features::FeatureSpec spec;
    std::size_t slot = 8 * panel.slots_per_day();
    for (auto _ : state) {
        benchmark::DoNotOptimize(features::build_sample(panel, spec, {3, slot}));
        slot = slot + 1 < 9 * panel.slots_per_day() ? slot + 1 : 8 * panel.slots_per_day();
    }
}
BENCHMARK(BM_FeaturizeReduced);

void BM_FeaturizeFull(benchmark::State& state) {
    const auto& panel = bench_panel();
    features::FeatureSpec spec;
    spec.mode = features::InputMode::full;
    const std::size_t slot = 8 * panel.slots_per_day() + 200;
    for (auto _ : state) benchmark::DoNotOptimize(features::build_sample(panel, spec, {3, slot}));
}
BENCHMARK(BM_FeaturizeFull);

void BM_DenseStep(benchmark::State& state) {
    const auto in = static_cast<std::size_t>(state.range(0));
    nn::Dense dense(in, 32);
    const nn::Tensor x = noise({50, in}, 1);
    const nn::Tensor g = noise({50, 32}, 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dense.forward(x, nn::Mode::train));
        benchmark::DoNotOptimize(dense.backward(g));
    }
    state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_DenseStep)->Arg(32)->Arg(8192);

void BM_ConvStep(benchmark::State& state) {
    const auto channels = static_cast<std::size_t>(state.range(0));
    nn::Conv2d conv(channels, channels, 3, 1, 1);
    const nn::Tensor x = noise({8, channels, 32, 32}, 3);
    const nn::Tensor g = noise({8, channels, 32, 32}, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv.forward(x, nn::Mode::train));
        benchmark::DoNotOptimize(conv.backward(g));
    }
    state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ConvStep)->Arg(8)->Arg(16);

void BM_LstmStep(benchmark::State& state) {
    nn::Lstm cell(32, 32);
    const nn::Tensor x = noise({50, 20, 32}, 5);
    const nn::Tensor g = noise({50, 20, 32}, 6);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cell.forward(x, nn::Mode::train));
        benchmark::DoNotOptimize(cell.backward(g));
    }
    state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_LstmStep);

void BM_TrainFnn1(benchmark::State& state) {
    const auto& panel = bench_panel();
    const features::FeatureSpec spec;
    const training::Dataset data(panel, spec, models::Layout::flat, features::enumerate_samples(panel, spec, 7));
    training::TrainConfig cfg;
    cfg.max_epochs = 100;
    cfg.bn_refresh_batches = 0;
    for (auto _ : state) {
        Rng init = substream(1, "init");
        auto model = models::build_model(
            models::default_model_spec(models::ModelKind::fnn1, features::InputMode::reduced), init);
        benchmark::DoNotOptimize(training::train(std::move(model), data, training::Dataset(panel, spec, models::Layout::flat, {}), cfg));
    }
    state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_TrainFnn1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
