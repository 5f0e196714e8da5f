#include "pepf/combine.hpp"

#include "pepf/error.hpp"
#include "pepf/parallel.hpp"

#include <algorithm>

namespace pepf::combine {

void ForecastPool::validate() const {
    const std::size_t m = members();
    if (m == 0) throw ShapeError("forecast pool has no members");
    if (calib.size() != calib_truth.size() * m)
        throw ShapeError("calibration block holds " + std::to_string(calib.size()) +
                         " values, expected " + std::to_string(calib_truth.size() * m));
    if (eval.size() % m != 0)
        throw ShapeError("evaluation block size is not a multiple of the member count");
}

QraResult qra_run(const ForecastPool& pool, const quantile::QuantileGrid& grid,
                  std::size_t calib_len, const quantile::LinearQrOptions& options) {
    pool.validate();
    const std::size_t m = pool.members();
    if (calib_len < m + 2)
        throw ConfigError("QRA calibration length " + std::to_string(calib_len) +
                          " must be at least members + 2 = " + std::to_string(m + 2));
    if (pool.calib_steps() < calib_len)
        throw InsufficientHistoryError("QRA needs " + std::to_string(calib_len) +
                                       " calibration steps, pool has " +
                                       std::to_string(pool.calib_steps()));

    const std::size_t begin = pool.calib_steps() - calib_len;
    dataset::DesignMatrix design(
        std::vector<double>(pool.calib.begin() + static_cast<std::ptrdiff_t>(begin * m), pool.calib.end()),
        m, std::vector<double>(pool.calib_truth.begin() + static_cast<std::ptrdiff_t>(begin),
                               pool.calib_truth.end()),
        pool.labels);

    QraResult result;
    result.models.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t j) {
        result.models[j] = quantile::fit_linear_qr(design, grid[j], options);
    });

    const std::size_t steps = pool.eval_steps();
    const dataset::FeatureRows rows(pool.eval, m);
    quantile::QuantileForecast forecast(grid, steps);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        for (const auto& w : result.models[j].warnings)
            result.warnings.push_back("level " + std::to_string(grid[j]) + ": " + w);
        const auto predicted = result.models[j].predict(rows);
        for (std::size_t t = 0; t < steps; ++t) forecast.at(t, j) = predicted[t];
    }
    result.forecast = quantile::rearrange(std::move(forecast));
    return result;
}

quantile::QuantileForecast average_forecasts(std::span<const quantile::QuantileForecast> inputs) {
    if (inputs.empty()) throw ShapeError("nothing to average");
    const auto& first = inputs.front();
    for (const auto& f : inputs) {
        if (!(f.grid() == first.grid())) throw ShapeError("forecasts use different quantile grids");
        if (f.steps() != first.steps())
            throw ShapeError("forecasts cover " + std::to_string(f.steps()) + " and " +
                             std::to_string(first.steps()) + " steps");
    }
    // Summing in ascending order makes the mean independent of input order.
    std::vector<double> values(first.values().size(), 0.0);
    std::vector<double> column(inputs.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t k = 0; k < inputs.size(); ++k) column[k] = inputs[k].values()[i];
        std::sort(column.begin(), column.end());
        double sum = 0.0;
        for (const double v : column) sum += v;
        values[i] = sum / static_cast<double>(inputs.size());
    }
    return quantile::QuantileForecast(first.grid(), std::move(values));
}

quantile::QuantileForecast q_ens(const quantile::QuantileForecast& qr,
                                 const quantile::QuantileForecast& enbpi,
                                 const quantile::QuantileForecast& spci) {
    const quantile::QuantileForecast inputs[] = {qr, enbpi, spci};
    return quantile::rearrange(average_forecasts(inputs));
}

} // namespace pepf::combine
