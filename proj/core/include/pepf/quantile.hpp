#pragma once

#include "pepf/dataset.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pepf::quantile {

/// Pinball (check) loss of predicting `qhat` for outcome `y` at level `alpha`:
/// (1-α)(q̂-y) when y <= q̂, α(y-q̂) otherwise.
double pinball(double qhat, double y, double alpha);

/// Empirical quantile rules.
///   higher:    k-th smallest, k = ceil(p·n)
///   conformal: k-th smallest, k = ceil((n+1)·p) clamped to n
///   linear:    interpolation between order statistics at position (n-1)·p
enum class Convention { higher, linear, conformal };

Convention parse_convention(std::string_view name);
std::string_view to_string(Convention convention);

/// Throws DataError on empty input, ConfigError unless 0 < p <= 1.
double empirical_quantile(std::span<const double> values, double p,
                          Convention convention = Convention::conformal);

/// Weighted generalization used for pooled forest leaves. Weights must be
/// non-negative with a positive sum; entries with zero weight are ignored.
/// With equal weights the result equals `empirical_quantile` on the
/// positive-weight values.
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p, Convention convention = Convention::conformal);

/// Strictly increasing levels in (0, 1).
class QuantileGrid {
public:
    QuantileGrid();  ///< deciles 0.1 ... 0.9
    explicit QuantileGrid(std::vector<double> levels);

    const std::vector<double>& levels() const noexcept { return levels_; }
    std::size_t size() const noexcept { return levels_.size(); }
    double operator[](std::size_t i) const { return levels_[i]; }

    /// Index of `level` (matched within 1e-9); throws ShapeError when absent.
    std::size_t index_of(double level) const;
    bool contains(double level) const;

    /// Levels below 0.5 whose mirror 1-α is also on the grid.
    std::vector<double> interval_alphas() const;

    bool operator==(const QuantileGrid& other) const;

private:
    std::vector<double> levels_;
};

/// Per time step, one value per grid level (row-major, steps × levels).
class QuantileForecast {
public:
    QuantileForecast() = default;
    QuantileForecast(QuantileGrid grid, std::size_t steps);
    QuantileForecast(QuantileGrid grid, std::vector<double> values);

    const QuantileGrid& grid() const noexcept { return grid_; }
    std::size_t steps() const noexcept { return grid_.size() == 0 ? 0 : values_.size() / grid_.size(); }

    double& at(std::size_t step, std::size_t level_index) {
        return values_[step * grid_.size() + level_index];
    }
    double at(std::size_t step, std::size_t level_index) const {
        return values_[step * grid_.size() + level_index];
    }
    double value(std::size_t step, double level) const { return at(step, grid_.index_of(level)); }

    std::span<const double> step_values(std::size_t step) const {
        return std::span<const double>(values_).subspan(step * grid_.size(), grid_.size());
    }
    const std::vector<double>& values() const noexcept { return values_; }

    bool is_monotone() const;

    /// Appends the steps of `other` (same grid).
    void append(const QuantileForecast& other);

private:
    QuantileGrid grid_;
    std::vector<double> values_;
};

/// Sorts each step's values ascending and reassigns them to the sorted levels.
QuantileForecast rearrange(QuantileForecast forecast);

/// Fitted linear conditional-quantile model y ≈ intercept + xᵀβ.
struct LinearQuantileModel {
    double alpha = 0.5;
    double intercept = 0.0;
    std::vector<double> coefficients;
    double objective = 0.0;        ///< Σ ρ_α(y - ŷ) on the training rows
    std::size_t iterations = 0;
    std::vector<std::string> warnings;

    double predict(std::span<const double> row) const;
    std::vector<double> predict(const dataset::FeatureRows& rows) const;
};

struct LinearQrOptions {
    /// Stop when the duality gap falls below tolerance · (1 + |objective|).
    double tolerance = 1e-11;
    std::size_t max_iterations = 200;
    /// Columns whose pivoted-QR diagonal falls below rank_tolerance · max are
    /// treated as linearly dependent and pinned to 0.
    double rank_tolerance = 1e-10;
};

/// Minimizes Σ ρ_α(y_t - b - x_tᵀβ) with a primal-dual interior-point method
/// (Frisch-Newton with Mehrotra correction) on the bounded dual LP.
/// Linearly dependent or constant columns are pinned to zero with a warning,
/// which yields an intercept-only model for an all-zero design.
LinearQuantileModel fit_linear_qr(const dataset::DesignMatrix& data, double alpha,
                                  const LinearQrOptions& options = {});

/// Σ ρ_α(y - ŷ) for a model on arbitrary rows.
double qr_objective(const LinearQuantileModel& model, const dataset::DesignMatrix& data);

} // namespace pepf::quantile
