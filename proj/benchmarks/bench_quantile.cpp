#include <pepf/dataset.hpp>
#include <pepf/quantile.hpp>
#include <pepf/random.hpp>

#include <benchmark/benchmark.h>

namespace {

pepf::dataset::DesignMatrix random_design(std::size_t n, std::size_t p) {
    pepf::Rng rng(1);
    std::vector<double> x(n * p), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0;
        for (std::size_t j = 0; j < p; ++j) mean += (x[i * p + j] = pepf::standard_normal(rng));
        y[i] = mean + pepf::standard_normal(rng);
    }
    return pepf::dataset::DesignMatrix(std::move(x), p, std::move(y));
}

void BM_LinearQr(benchmark::State& state) {
    const auto data = random_design(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(pepf::quantile::fit_linear_qr(data, 0.1));
}
BENCHMARK(BM_LinearQr)->Args({672, 4})->Args({672, 16})->Args({2000, 16})->Unit(benchmark::kMillisecond);

void BM_EmpiricalQuantile(benchmark::State& state) {
    pepf::Rng rng(2);
    std::vector<double> v(static_cast<std::size_t>(state.range(0)));
    for (auto& x : v) x = pepf::standard_normal(rng);
    for (auto _ : state) benchmark::DoNotOptimize(pepf::quantile::empirical_quantile(v, 0.8));
}
BENCHMARK(BM_EmpiricalQuantile)->Arg(200)->Arg(5000);

} // namespace
