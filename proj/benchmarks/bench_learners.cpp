#include <pepf/dataset.hpp>
#include <pepf/learners.hpp>

#include <benchmark/benchmark.h>

namespace {

pepf::dataset::DesignMatrix synth_design(std::size_t n) {
    pepf::dataset::SynthParams p;
    p.n = n + 168;
    p.ar = {0.6, 0.2};
    p.daily_amplitude = 10;
    p.noise_scale = 4;
    pepf::dataset::LagSpec lags;
    lags.target_lags = {24, 25, 48, 168};
    lags.horizon = 24;
    return pepf::dataset::build_features(pepf::dataset::synth_series(p, 3), lags);
}

void BM_FitPoint(benchmark::State& state) {
    const auto data = synth_design(672);
    const auto kind = static_cast<pepf::learners::Kind>(state.range(0));
    pepf::learners::LearnerParams params;
    params.forest.trees = 50;
    params.boost.trees = 100;
    state.SetLabel(std::string(pepf::learners::to_string(kind)));
    for (auto _ : state) benchmark::DoNotOptimize(pepf::learners::fit_point(kind, data, params, 7));
}
BENCHMARK(BM_FitPoint)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

void BM_QrfFit(benchmark::State& state) {
    const auto data = synth_design(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(pepf::learners::fit_qrf(data, {}, 11));
}
BENCHMARK(BM_QrfFit)->Arg(200)->Arg(672)->Unit(benchmark::kMillisecond);

} // namespace
