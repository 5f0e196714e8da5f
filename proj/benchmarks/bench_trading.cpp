#include <pepf/random.hpp>
#include <pepf/trading.hpp>

#include <benchmark/benchmark.h>

namespace {

std::vector<double> prices(std::size_t n) {
    pepf::Rng rng(9);
    std::vector<double> out(n);
    for (auto& p : out) p = 50 + 20 * pepf::standard_normal(rng);
    return out;
}

void BM_Ts2Plan(benchmark::State& state) {
    const auto p = prices(static_cast<std::size_t>(state.range(0)));
    const auto steps = static_cast<std::size_t>(state.range(1));
    const pepf::trading::BatteryConfig battery;
    for (auto _ : state) benchmark::DoNotOptimize(pepf::trading::ts2_plan(p, p, battery, steps));
}
BENCHMARK(BM_Ts2Plan)->Args({16, 11})->Args({24, 11})->Args({24, 101});

void BM_BruteForce(benchmark::State& state) {
    const auto p = prices(static_cast<std::size_t>(state.range(0)));
    const pepf::trading::BatteryConfig battery;
    for (auto _ : state) benchmark::DoNotOptimize(pepf::trading::brute_force_plan(p, battery, 5));
}
BENCHMARK(BM_BruteForce)->Arg(4)->Arg(6);

} // namespace
