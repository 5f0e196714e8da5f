#pragma once

#include "pepf/dataset.hpp"
#include "pepf/interval.hpp"
#include "pepf/learners.hpp"
#include "pepf/quantile.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace pepf::conformal {

/// Fixed-capacity FIFO of signed residuals y - f(x), oldest evicted first.
class ResidualBuffer {
public:
    explicit ResidualBuffer(std::size_t window);

    void push(double residual);
    std::size_t size() const noexcept { return values_.size(); }
    std::size_t window() const noexcept { return window_; }
    bool full() const noexcept { return values_.size() == window_; }

    std::vector<double> signed_values() const;
    std::vector<double> absolute_values() const;

private:
    std::size_t window_;
    std::deque<double> values_;
};

/// A fitted regressor viewed as a batch prediction function.
using Predictor = std::function<std::vector<double>(const dataset::FeatureRows&)>;
/// Trains a regressor on a design with the given seed.
using Fitter = std::function<Predictor(const dataset::DesignMatrix&, std::uint64_t)>;

Fitter make_fitter(learners::Kind kind, const learners::LearnerParams& params);

/// Intervals for one or more α levels over the same test rows.
struct IntervalRun {
    std::vector<double> centers;
    std::vector<double> alphas;
    /// intervals[a][t] for alphas[a] and test row t.
    std::vector<std::vector<PredictionInterval>> intervals;
    /// margins[a][t]: the λ that produced the interval (signed SPCI stores q̂^{1-α} - q̂^α).
    std::vector<std::vector<double>> margins;
    /// SPCI only: residual buffer length when each test row was predicted.
    std::vector<std::size_t> buffer_lengths;
    std::vector<std::string> warnings;

    const std::vector<PredictionInterval>& at(double alpha) const;

    /// Level α < 0.5 → lower bound at α, level 1-α → upper bound, 0.5 → center.
    /// Crossing repair is applied to the result.
    quantile::QuantileForecast to_forecast(const quantile::QuantileGrid& grid) const;
};

struct ScpOptions {
    quantile::Convention convention = quantile::Convention::conformal;
};

/// Split conformal: λ = Quantile_{1-2α}(|y - f(x)| on calib); interval f(x) ± λ.
IntervalRun scp_run(const Fitter& fit, const dataset::DesignMatrix& train,
                    const dataset::DesignMatrix& calib, const dataset::DesignMatrix& test,
                    std::span<const double> alphas, std::uint64_t seed,
                    const ScpOptions& options = {});

IntervalRun scp_run(learners::Kind kind, const dataset::DesignMatrix& train,
                    const dataset::DesignMatrix& calib, const dataset::DesignMatrix& test,
                    double alpha, const learners::LearnerParams& params, std::uint64_t seed,
                    const ScpOptions& options = {});

enum class EnbpiAggregation {
    member_mean,  ///< λ = mean over members of each member's in-sample residual quantile
    oob     ///< λ from residuals of the average over members that left the row out
};

struct EnbpiOptions {
    std::size_t bootstrap_count = 25;
    EnbpiAggregation aggregation = EnbpiAggregation::member_mean;
    quantile::Convention convention = quantile::Convention::conformal;
    /// Test hook: every member trains on the full training set.
    bool identity_bootstrap = false;
};

/// Bootstrap ensemble intervals: center = mean member prediction, ± λ.
/// Member b resamples uniformly with replacement using seed + b.
IntervalRun enbpi_run(const Fitter& fit, const dataset::DesignMatrix& train,
                      const dataset::DesignMatrix& test, std::span<const double> alphas,
                      const EnbpiOptions& options, std::uint64_t seed);

IntervalRun enbpi_run(learners::Kind kind, const dataset::DesignMatrix& train,
                      const dataset::DesignMatrix& test, double alpha,
                      const learners::LearnerParams& params, const EnbpiOptions& options,
                      std::uint64_t seed);

enum class SpciMode {
    signed_residuals,  ///< [f + q̂^α, f + q̂^{1-α}] of the signed residual
    symmetric          ///< f ± q̂^{1-2α} of the absolute residual
};

struct SpciOptions {
    std::size_t window = 200;
    std::size_t residual_lags = 8;
    SpciMode mode = SpciMode::signed_residuals;
    std::size_t refit_every = 1;
    learners::QrfParams qrf;
    quantile::Convention convention = quantile::Convention::conformal;
    /// Append each test residual once its truth is known.
    bool update_online = true;
};

/// Sequential conformal intervals from a quantile forest over lagged
/// residuals. The buffer is seeded with the trailing training residuals of the
/// base model; test rows must be in chronological order.
IntervalRun spci_run(const Fitter& fit, const dataset::DesignMatrix& train,
                     const dataset::DesignMatrix& test, std::span<const double> alphas,
                     const SpciOptions& options, std::uint64_t seed);

IntervalRun spci_run(learners::Kind kind, const dataset::DesignMatrix& train,
                     const dataset::DesignMatrix& test, double alpha,
                     const learners::LearnerParams& params, const SpciOptions& options,
                     std::uint64_t seed);

} // namespace pepf::conformal
