#include "pepf/conformal.hpp"

#include "pepf/error.hpp"
#include "pepf/parallel.hpp"
#include "pepf/random.hpp"
#include "pepf/text.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace pepf::conformal {

ResidualBuffer::ResidualBuffer(std::size_t window) : window_(window) {
    if (window_ == 0) throw ConfigError("residual window must be >= 1");
}

void ResidualBuffer::push(double residual) {
    values_.push_back(residual);
    if (values_.size() > window_) values_.pop_front();
}

std::vector<double> ResidualBuffer::signed_values() const {
    return {values_.begin(), values_.end()};
}

std::vector<double> ResidualBuffer::absolute_values() const {
    std::vector<double> out;
    out.reserve(values_.size());
    for (const double v : values_) out.push_back(std::abs(v));
    return out;
}

Fitter make_fitter(learners::Kind kind, const learners::LearnerParams& params) {
    return [kind, params](const dataset::DesignMatrix& data, std::uint64_t seed) -> Predictor {
        auto model = std::make_shared<const learners::PointModel>(
            learners::fit_point(kind, data, params, seed));
        return [model](const dataset::FeatureRows& rows) { return model->predict(rows); };
    };
}

const std::vector<PredictionInterval>& IntervalRun::at(double alpha) const {
    for (std::size_t a = 0; a < alphas.size(); ++a)
        if (std::abs(alphas[a] - alpha) < 1e-9) return intervals[a];
    throw ShapeError("no intervals at alpha " + format_double(alpha));
}

quantile::QuantileForecast IntervalRun::to_forecast(const quantile::QuantileGrid& grid) const {
    quantile::QuantileForecast forecast(grid, centers.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double level = grid[j];
        for (std::size_t t = 0; t < centers.size(); ++t) {
            if (std::abs(level - 0.5) < 1e-9) {
                forecast.at(t, j) = centers[t];
            } else if (level < 0.5) {
                forecast.at(t, j) = at(level)[t].lower;
            } else {
                forecast.at(t, j) = at(1.0 - level)[t].upper;
            }
        }
    }
    return quantile::rearrange(std::move(forecast));
}

namespace {

void check_alphas(std::span<const double> alphas) {
    if (alphas.empty()) throw ConfigError("at least one alpha is required");
    for (const double alpha : alphas)
        if (!(alpha > 0.0 && alpha < 0.5))
            throw ConfigError("alpha must lie in (0, 0.5), got " + format_double(alpha));
}

void check_width(const dataset::DesignMatrix& a, const dataset::DesignMatrix& b) {
    if (a.cols() != b.cols())
        throw ShapeError("feature width " + std::to_string(b.cols()) + " differs from training width " +
                         std::to_string(a.cols()));
}

IntervalRun symmetric_run(std::vector<double> centers, std::span<const double> alphas,
                          const std::vector<double>& lambdas) {
    IntervalRun run;
    run.alphas.assign(alphas.begin(), alphas.end());
    for (std::size_t a = 0; a < alphas.size(); ++a) {
        std::vector<PredictionInterval> intervals;
        intervals.reserve(centers.size());
        for (const double c : centers)
            intervals.push_back({c - lambdas[a], c + lambdas[a], alphas[a]});
        run.intervals.push_back(std::move(intervals));
        run.margins.emplace_back(centers.size(), lambdas[a]);
    }
    run.centers = std::move(centers);
    return run;
}

} // namespace

// ---------------------------------------------------------------------------
// Split conformal

IntervalRun scp_run(const Fitter& fit, const dataset::DesignMatrix& train,
                    const dataset::DesignMatrix& calib, const dataset::DesignMatrix& test,
                    std::span<const double> alphas, std::uint64_t seed,
                    const ScpOptions& options) {
    check_alphas(alphas);
    if (calib.empty()) throw DataError("split conformal needs a non-empty calibration set");
    check_width(train, calib);
    check_width(train, test);

    const Predictor model = fit(train, seed);
    const auto calib_pred = model(calib.features());
    std::vector<double> scores(calib.rows());
    for (std::size_t i = 0; i < calib.rows(); ++i)
        scores[i] = std::abs(calib.targets()[i] - calib_pred[i]);

    std::vector<double> lambdas;
    std::vector<std::string> warnings;
    for (const double alpha : alphas) {
        lambdas.push_back(quantile::empirical_quantile(scores, 1.0 - 2.0 * alpha, options.convention));
        const auto needed = static_cast<std::size_t>(std::ceil(1.0 / (2.0 * alpha) - 1e-9));
        if (calib.rows() < needed)
            warnings.push_back("calibration set of " + std::to_string(calib.rows()) +
                               " rows is below " + std::to_string(needed) + " for alpha " +
                               format_double(alpha) + "; coverage guarantee is degenerate");
    }
    auto run = symmetric_run(model(test.features()), alphas, lambdas);
    run.warnings = std::move(warnings);
    return run;
}

IntervalRun scp_run(learners::Kind kind, const dataset::DesignMatrix& train,
                    const dataset::DesignMatrix& calib, const dataset::DesignMatrix& test,
                    double alpha, const learners::LearnerParams& params, std::uint64_t seed,
                    const ScpOptions& options) {
    const double alphas[] = {alpha};
    return scp_run(make_fitter(kind, params), train, calib, test, alphas, seed, options);
}

// ---------------------------------------------------------------------------
// EnbPI

IntervalRun enbpi_run(const Fitter& fit, const dataset::DesignMatrix& train,
                      const dataset::DesignMatrix& test, std::span<const double> alphas,
                      const EnbpiOptions& options, std::uint64_t seed) {
    check_alphas(alphas);
    if (options.bootstrap_count < 1) throw ConfigError("EnbPI needs at least one bootstrap member");
    if (train.empty()) throw DataError("EnbPI needs training rows");
    check_width(train, test);

    const std::size_t n = train.rows();
    const std::size_t members = options.bootstrap_count;
    std::vector<std::vector<double>> train_pred(members), test_pred(members);
    std::vector<std::vector<char>> in_sample(members, std::vector<char>(n, 0));

    parallel_for(members, [&](std::size_t b) {
        std::vector<std::size_t> sample(n);
        if (options.identity_bootstrap) {
            std::iota(sample.begin(), sample.end(), 0);
        } else {
            Rng rng(seed + b);
            for (auto& s : sample) s = uniform_index(rng, n);
        }
        for (const auto s : sample) in_sample[b][s] = 1;
        const Predictor model = fit(train.select(sample), seed + b);
        train_pred[b] = model(train.features());
        test_pred[b] = model(test.features());
    });

    std::vector<double> centers(test.rows(), 0.0);
    for (std::size_t t = 0; t < test.rows(); ++t) {
        double sum = 0.0;
        for (std::size_t b = 0; b < members; ++b) sum += test_pred[b][t];
        centers[t] = sum / static_cast<double>(members);
    }

    std::vector<std::string> warnings;
    auto aggregation = options.aggregation;
    std::vector<double> oob_scores;
    if (aggregation == EnbpiAggregation::oob) {
        for (std::size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t b = 0; b < members; ++b) {
                if (in_sample[b][i]) continue;
                sum += train_pred[b][i];
                ++count;
            }
            if (count > 0)
                oob_scores.push_back(std::abs(train.targets()[i] - sum / static_cast<double>(count)));
        }
        if (oob_scores.empty()) {
            warnings.push_back("no training row was left out by any bootstrap member; falling "
                               "back to member-mean aggregation");
            aggregation = EnbpiAggregation::member_mean;
        }
    }

    std::vector<double> lambdas;
    for (const double alpha : alphas) {
        const double level = 1.0 - 2.0 * alpha;
        if (aggregation == EnbpiAggregation::oob) {
            lambdas.push_back(quantile::empirical_quantile(oob_scores, level, options.convention));
            continue;
        }
        double sum = 0.0;
        for (std::size_t b = 0; b < members; ++b) {
            std::vector<double> scores(n);
            for (std::size_t i = 0; i < n; ++i)
                scores[i] = std::abs(train.targets()[i] - train_pred[b][i]);
            sum += quantile::empirical_quantile(scores, level, options.convention);
        }
        lambdas.push_back(sum / static_cast<double>(members));
    }

    auto run = symmetric_run(std::move(centers), alphas, lambdas);
    run.warnings = std::move(warnings);
    return run;
}

IntervalRun enbpi_run(learners::Kind kind, const dataset::DesignMatrix& train,
                      const dataset::DesignMatrix& test, double alpha,
                      const learners::LearnerParams& params, const EnbpiOptions& options,
                      std::uint64_t seed) {
    const double alphas[] = {alpha};
    return enbpi_run(make_fitter(kind, params), train, test, alphas, options, seed);
}

// ---------------------------------------------------------------------------
// SPCI

namespace {

// Supervised pairs (p lagged residuals → next residual) from a residual sequence.
dataset::DesignMatrix lagged_residuals(const std::vector<double>& series, std::size_t lags) {
    std::vector<double> values;
    std::vector<double> targets;
    for (std::size_t i = lags; i < series.size(); ++i) {
        values.insert(values.end(), series.begin() + static_cast<std::ptrdiff_t>(i - lags),
                      series.begin() + static_cast<std::ptrdiff_t>(i));
        targets.push_back(series[i]);
    }
    return dataset::DesignMatrix(std::move(values), lags, std::move(targets));
}

} // namespace

IntervalRun spci_run(const Fitter& fit, const dataset::DesignMatrix& train,
                     const dataset::DesignMatrix& test, std::span<const double> alphas,
                     const SpciOptions& options, std::uint64_t seed) {
    check_alphas(alphas);
    if (options.residual_lags < 1) throw ConfigError("SPCI needs at least one residual lag");
    if (options.window <= options.residual_lags)
        throw ConfigError("SPCI window must exceed the residual lag count");
    if (options.refit_every < 1) throw ConfigError("SPCI refit cadence must be >= 1");
    if (train.empty()) throw DataError("SPCI needs training rows");
    check_width(train, test);

    const Predictor model = fit(train, seed);
    const auto train_pred = model(train.features());
    ResidualBuffer buffer(options.window);
    const std::size_t n = train.rows();
    for (std::size_t i = n - std::min(n, options.window); i < n; ++i)
        buffer.push(train.targets()[i] - train_pred[i]);
    if (buffer.size() < options.residual_lags + 1)
        throw InsufficientHistoryError("SPCI residual buffer holds " + std::to_string(buffer.size()) +
                                       " values, needs at least " +
                                       std::to_string(options.residual_lags + 1));

    const bool symmetric = options.mode == SpciMode::symmetric;
    const auto centers = model(test.features());
    const std::size_t steps = test.rows();
    const std::size_t lags = options.residual_lags;

    IntervalRun run;
    run.alphas.assign(alphas.begin(), alphas.end());
    run.intervals.assign(alphas.size(), {});
    run.margins.assign(alphas.size(), {});
    run.centers = centers;

    std::unique_ptr<learners::QrfModel> forest;
    for (std::size_t t = 0; t < steps; ++t) {
        const auto series = symmetric ? buffer.absolute_values() : buffer.signed_values();
        if (t % options.refit_every == 0 || !forest) {
            const auto pairs = lagged_residuals(series, lags);
            auto params = options.qrf;
            params.min_leaf = std::min(params.min_leaf, pairs.rows());
            forest = std::make_unique<learners::QrfModel>(
                learners::fit_qrf(pairs, params, derive_seed(seed, 0x5C1ULL + t)));
        }
        const std::span<const double> query(series.data() + series.size() - lags, lags);
        run.buffer_lengths.push_back(buffer.size());

        for (std::size_t a = 0; a < alphas.size(); ++a) {
            const double alpha = alphas[a];
            PredictionInterval interval{0.0, 0.0, alpha};
            if (symmetric) {
                const double lambda =
                    learners::qrf_quantile(*forest, query, 1.0 - 2.0 * alpha, options.convention);
                interval.lower = centers[t] - lambda;
                interval.upper = centers[t] + lambda;
                run.margins[a].push_back(lambda);
            } else {
                double lo = learners::qrf_quantile(*forest, query, alpha, options.convention);
                double hi = learners::qrf_quantile(*forest, query, 1.0 - alpha, options.convention);
                if (hi < lo) std::swap(lo, hi);
                interval.lower = centers[t] + lo;
                interval.upper = centers[t] + hi;
                run.margins[a].push_back(hi - lo);
            }
            run.intervals[a].push_back(interval);
        }
        if (options.update_online) buffer.push(test.targets()[t] - centers[t]);
    }
    return run;
}

IntervalRun spci_run(learners::Kind kind, const dataset::DesignMatrix& train,
                     const dataset::DesignMatrix& test, double alpha,
                     const learners::LearnerParams& params, const SpciOptions& options,
                     std::uint64_t seed) {
    const double alphas[] = {alpha};
    return spci_run(make_fitter(kind, params), train, test, alphas, options, seed);
}

} // namespace pepf::conformal
