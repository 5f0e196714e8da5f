#include <pepf/conformal.hpp>
#include <pepf/dataset.hpp>
#include <pepf/parallel.hpp>

#include <benchmark/benchmark.h>

namespace {

struct Split {
    pepf::dataset::DesignMatrix train, test;
};

Split one_day() {
    pepf::dataset::SynthParams p;
    p.n = 672 + 24 + 168;
    p.ar = {0.6, 0.2};
    p.daily_amplitude = 10;
    p.noise_scale = 4;
    pepf::dataset::LagSpec lags;
    lags.target_lags = {24, 25, 48, 168};
    lags.horizon = 24;
    const auto d = pepf::dataset::build_features(pepf::dataset::synth_series(p, 5), lags);
    return {d.slice(0, d.rows() - 24), d.slice(d.rows() - 24, d.rows())};
}

void BM_Enbpi(benchmark::State& state) {
    pepf::set_max_threads(1);
    const auto s = one_day();
    pepf::conformal::EnbpiOptions options;
    options.bootstrap_count = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(pepf::conformal::enbpi_run(pepf::learners::Kind::lear, s.train, s.test, 0.1, {}, options, 1));
}
BENCHMARK(BM_Enbpi)->Arg(10)->Arg(25)->Unit(benchmark::kMillisecond);

void BM_Spci(benchmark::State& state) {
    pepf::set_max_threads(1);
    const auto s = one_day();
    pepf::conformal::SpciOptions options;
    options.refit_every = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(pepf::conformal::spci_run(pepf::learners::Kind::lear, s.train, s.test, 0.1, {}, options, 1));
}
BENCHMARK(BM_Spci)->Arg(1)->Arg(6)->Unit(benchmark::kMillisecond);

} // namespace
