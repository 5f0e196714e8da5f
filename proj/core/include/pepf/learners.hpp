#pragma once

#include "pepf/dataset.hpp"
#include "pepf/quantile.hpp"
#include "pepf/tree.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pepf::learners {

enum class Kind { knn, lear, forest, boost };

Kind parse_kind(std::string_view name);
std::string_view to_string(Kind kind);

struct KnnParams {
    std::size_t k = 10;
};

/// LASSO autoregression. When `lambda` is unset it is chosen on a
/// chronological hold-out from `grid_factors × λ_max / 10`, where λ_max is the
/// smallest penalty that zeroes every coefficient.
struct LearParams {
    std::optional<double> lambda;
    std::vector<double> grid_factors{0.01, 0.1, 1.0, 10.0};
    double validation_fraction = 0.2;
    double tolerance = 1e-12;
    std::size_t max_sweeps = 100000;
};

struct ForestParams {
    std::size_t trees = 100;
    std::size_t max_depth = 12;
    std::size_t min_leaf = 5;
    std::size_t features_per_split = 0;  ///< 0 → ceil(sqrt(width))
    bool bootstrap = true;               ///< ignored for a single tree
};

struct BoostParams {
    std::size_t trees = 200;
    double learning_rate = 0.05;
    std::size_t max_depth = 4;
    std::size_t min_leaf = 5;
};

struct LearnerParams {
    KnnParams knn;
    LearParams lear;
    ForestParams forest;
    BoostParams boost;
};

/// Column standardization fitted on training rows; constant columns keep scale 1.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<bool> constant;

    static Standardizer fit(const dataset::DesignMatrix& data);
};

class KnnModel {
public:
    KnnModel(const dataset::DesignMatrix& data, const KnnParams& params);
    double predict(std::span<const double> row) const;

private:
    Standardizer standardizer_;
    std::vector<double> scaled_;
    std::vector<double> targets_;
    std::size_t width_ = 0;
    std::size_t k_ = 1;
};

class LearModel {
public:
    LearModel(const dataset::DesignMatrix& data, const LearParams& params);
    double predict(std::span<const double> row) const;

    double lambda() const noexcept { return lambda_; }
    double intercept() const noexcept { return intercept_; }
    const std::vector<double>& coefficients() const noexcept { return coefficients_; }
    /// Coefficients on the standardized scale the penalty applies to.
    const std::vector<double>& standardized_coefficients() const noexcept { return scaled_coefficients_; }

private:
    double lambda_ = 0.0;
    double intercept_ = 0.0;
    std::vector<double> coefficients_;
    std::vector<double> scaled_coefficients_;
};

class ForestModel {
public:
    ForestModel(const dataset::DesignMatrix& data, const ForestParams& params, std::uint64_t seed);
    double predict(std::span<const double> row) const;
    std::size_t trees() const noexcept { return trees_.size(); }

private:
    std::vector<RegressionTree> trees_;
};

class BoostModel {
public:
    BoostModel(const dataset::DesignMatrix& data, const BoostParams& params);
    double predict(std::span<const double> row) const;
    double base_value() const noexcept { return base_; }

private:
    double base_ = 0.0;
    double rate_ = 0.0;
    std::vector<RegressionTree> trees_;
};

/// Fitted point regressor f. Immutable; prediction is a pure function.
class PointModel {
public:
    using Impl = std::variant<KnnModel, LearModel, ForestModel, BoostModel>;

    PointModel(Impl impl, std::vector<std::string> feature_names);

    Kind kind() const noexcept;
    std::size_t width() const noexcept { return names_.size(); }
    const std::vector<std::string>& feature_names() const noexcept { return names_; }

    double predict(std::span<const double> row) const;
    std::vector<double> predict(const dataset::FeatureRows& rows) const;

    const Impl& impl() const noexcept { return impl_; }

private:
    Impl impl_;
    std::vector<std::string> names_;
};

/// Throws ConfigError for invalid hyperparameters, DataError on empty data.
PointModel fit_point(Kind kind, const dataset::DesignMatrix& data, const LearnerParams& params,
                     std::uint64_t seed);

std::vector<double> predict_point(const PointModel& model, const dataset::FeatureRows& rows);

struct QrfParams {
    std::size_t trees = 25;
    std::size_t max_depth = 6;
    std::size_t min_leaf = 5;
    double subsample = 0.8;               ///< fraction drawn without replacement per tree
    std::size_t features_per_split = 0;   ///< 0 → ceil(sqrt(width))
};

/// Quantile regression forest: each leaf keeps its training targets and a
/// query pools them with weight 1 / (trees · leaf size).
class QrfModel {
public:
    QrfModel(const dataset::DesignMatrix& data, const QrfParams& params, std::uint64_t seed);

    double quantile(std::span<const double> row, double p,
                    quantile::Convention convention = quantile::Convention::conformal) const;

    /// Pooled leaf weights for a query, indexed by training row.
    std::vector<double> weights(std::span<const double> row) const;

    std::size_t trees() const noexcept { return trees_.size(); }
    const std::vector<double>& targets() const noexcept { return targets_; }

private:
    std::vector<RegressionTree> trees_;
    std::vector<double> targets_;
};

QrfModel fit_qrf(const dataset::DesignMatrix& data, const QrfParams& params, std::uint64_t seed);

/// Requires 0 < p < 1.
double qrf_quantile(const QrfModel& model, std::span<const double> row, double p,
                    quantile::Convention convention = quantile::Convention::conformal);

} // namespace pepf::learners
