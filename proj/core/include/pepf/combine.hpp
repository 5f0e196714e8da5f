#pragma once

#include "pepf/quantile.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pepf::combine {

/// Point forecasts from M members, split into a calibration region with known
/// truths and a later evaluation region. Matrices are row-major (steps × M).
struct ForecastPool {
    std::vector<std::string> labels;
    std::vector<double> calib;
    std::vector<double> calib_truth;
    std::vector<double> eval;

    std::size_t members() const noexcept { return labels.size(); }
    std::size_t calib_steps() const noexcept { return calib_truth.size(); }
    std::size_t eval_steps() const noexcept { return members() == 0 ? 0 : eval.size() / members(); }

    /// Throws ShapeError when the matrices disagree with the member count.
    void validate() const;
};

struct QraResult {
    quantile::QuantileForecast forecast;
    std::vector<quantile::LinearQuantileModel> models;  ///< one per grid level
    std::vector<std::string> warnings;
};

/// Quantile regression of the truth on the member forecasts, per grid level,
/// over the trailing `calib_len` calibration steps. Requires calib_len >= M + 2.
QraResult qra_run(const ForecastPool& pool, const quantile::QuantileGrid& grid,
                  std::size_t calib_len, const quantile::LinearQrOptions& options = {});

/// Component-wise mean of forecasts on one grid, without crossing repair.
quantile::QuantileForecast average_forecasts(std::span<const quantile::QuantileForecast> inputs);

/// Equal-weight average of the three forecasts followed by rearrangement.
quantile::QuantileForecast q_ens(const quantile::QuantileForecast& qr,
                                 const quantile::QuantileForecast& enbpi,
                                 const quantile::QuantileForecast& spci);

} // namespace pepf::combine
