#include "pepf/learners.hpp"

#include "pepf/error.hpp"
#include "pepf/parallel.hpp"
#include "pepf/text.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pepf::learners {

Kind parse_kind(std::string_view name) {
    if (name == "knn") return Kind::knn;
    if (name == "lear") return Kind::lear;
    if (name == "forest" || name == "rf") return Kind::forest;
    if (name == "boost" || name == "lgbm") return Kind::boost;
    throw ConfigError("unknown learner '" + std::string(name) + "'");
}

std::string_view to_string(Kind kind) {
    switch (kind) {
    case Kind::knn: return "knn";
    case Kind::lear: return "lear";
    case Kind::forest: return "forest";
    case Kind::boost: return "boost";
    }
    return "?";
}

namespace {

void require_data(const dataset::DesignMatrix& data) {
    if (data.empty()) throw DataError("cannot fit a model on an empty design");
}

std::size_t default_mtry(std::size_t requested, std::size_t width) {
    if (requested > 0) return std::min(requested, width);
    return std::max<std::size_t>(1, static_cast<std::size_t>(
                                        std::ceil(std::sqrt(static_cast<double>(width)))));
}

} // namespace

Standardizer Standardizer::fit(const dataset::DesignMatrix& data) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();
    Standardizer s;
    s.mean.assign(d, 0.0);
    s.scale.assign(d, 1.0);
    s.constant.assign(d, false);
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += data(i, j);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) ss += (data(i, j) - mean) * (data(i, j) - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        s.mean[j] = mean;
        if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
            s.scale[j] = sd;
        } else {
            s.constant[j] = true;
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// k-NN

KnnModel::KnnModel(const dataset::DesignMatrix& data, const KnnParams& params)
    : standardizer_(Standardizer::fit(data)), targets_(data.targets()), width_(data.cols()),
      k_(params.k) {
    scaled_.reserve(data.rows() * width_);
    for (std::size_t i = 0; i < data.rows(); ++i)
        for (std::size_t j = 0; j < width_; ++j)
            scaled_.push_back((data(i, j) - standardizer_.mean[j]) / standardizer_.scale[j]);
}

double KnnModel::predict(std::span<const double> row) const {
    const std::size_t n = targets_.size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (std::size_t j = 0; j < width_; ++j) {
            const double diff =
                (row[j] - standardizer_.mean[j]) / standardizer_.scale[j] - scaled_[i * width_ + j];
            d2 += diff * diff;
        }
        dist[i] = {d2, i};
    }
    // Lexicographic pair order breaks distance ties toward the smaller index.
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < k_; ++i) sum += targets_[dist[i].second];
    return sum / static_cast<double>(k_);
}

// ---------------------------------------------------------------------------
// LEAR

namespace {

struct LassoFit {
    std::vector<double> beta;  // standardized scale
    double y_mean = 0.0;
};

// Coordinate descent on (1/2n)‖y - ȳ - Zβ‖² + λ‖β‖₁ with Z standardized
// (population sd), so every active column has (1/n)‖z_j‖² = 1.
LassoFit lasso_cd(const std::vector<double>& z, std::size_t n, std::size_t d,
                  const std::vector<bool>& active, std::span<const double> y, double lambda,
                  const LearParams& params, std::vector<double> warm = {}) {
    LassoFit fit;
    fit.y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    fit.beta = warm.empty() ? std::vector<double>(d, 0.0) : std::move(warm);

    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - fit.y_mean;
        for (std::size_t j = 0; j < d; ++j) r -= z[i * d + j] * fit.beta[j];
        resid[i] = r;
    }
    double y_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) y_scale += (y[i] - fit.y_mean) * (y[i] - fit.y_mean);
    y_scale = std::sqrt(y_scale / static_cast<double>(n));
    const double tol = params.tolerance * std::max(1.0, y_scale);

    for (std::size_t sweep = 0; sweep < params.max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            if (!active[j]) continue;
            double rho = 0.0;
            for (std::size_t i = 0; i < n; ++i) rho += z[i * d + j] * resid[i];
            rho = rho / static_cast<double>(n) + fit.beta[j];
            const double updated =
                rho > lambda ? rho - lambda : (rho < -lambda ? rho + lambda : 0.0);
            const double delta = updated - fit.beta[j];
            if (delta != 0.0) {
                for (std::size_t i = 0; i < n; ++i) resid[i] -= z[i * d + j] * delta;
                fit.beta[j] = updated;
                max_change = std::max(max_change, std::abs(delta));
            }
        }
        if (max_change <= tol) break;
    }
    return fit;
}

struct Standardized {
    Standardizer standardizer;
    std::vector<double> z;
    std::vector<bool> active;
};

Standardized standardize(const dataset::DesignMatrix& data) {
    Standardized s{Standardizer::fit(data), {}, {}};
    const std::size_t d = data.cols();
    s.z.resize(data.rows() * d);
    s.active.resize(d);
    for (std::size_t j = 0; j < d; ++j) s.active[j] = !s.standardizer.constant[j];
    for (std::size_t i = 0; i < data.rows(); ++i)
        for (std::size_t j = 0; j < d; ++j)
            s.z[i * d + j] = s.active[j]
                                 ? (data(i, j) - s.standardizer.mean[j]) / s.standardizer.scale[j]
                                 : 0.0;
    return s;
}

double lambda_max(const Standardized& s, std::size_t n, std::size_t d, std::span<const double> y) {
    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double best = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        if (!s.active[j]) continue;
        double g = 0.0;
        for (std::size_t i = 0; i < n; ++i) g += s.z[i * d + j] * (y[i] - y_mean);
        best = std::max(best, std::abs(g) / static_cast<double>(n));
    }
    return best;
}

} // namespace

LearModel::LearModel(const dataset::DesignMatrix& data, const LearParams& params) {
    const std::size_t n = data.rows();
    const std::size_t d = data.cols();

    double lambda = 0.0;
    if (params.lambda) {
        lambda = *params.lambda;
    } else {
        const auto full = standardize(data);
        const double scale = lambda_max(full, n, d, data.targets()) / 10.0;
        std::vector<double> grid;
        for (const double f : params.grid_factors) grid.push_back(f * scale);
        std::sort(grid.begin(), grid.end());

        const auto holdout = static_cast<std::size_t>(
            std::floor(params.validation_fraction * static_cast<double>(n)));
        if (grid.empty() || scale <= 0.0) {
            lambda = 0.0;
        } else if (holdout < 2 || n - holdout < 2) {
            lambda = grid.front();
        } else {
            // Chronological hold-out: fit on the head, score on the tail.
            const auto head = data.slice(0, n - holdout);
            const auto tail = data.slice(n - holdout, n);
            double best_mse = std::numeric_limits<double>::infinity();
            lambda = grid.front();
            for (const double candidate : grid) {
                LearParams fixed = params;
                fixed.lambda = candidate;
                const LearModel trial(head, fixed);
                double mse = 0.0;
                for (std::size_t i = 0; i < tail.rows(); ++i) {
                    const double e = tail.targets()[i] - trial.predict(tail.row(i));
                    mse += e * e;
                }
                mse /= static_cast<double>(tail.rows());
                // Ties resolve toward the larger penalty.
                if (mse <= best_mse) {
                    best_mse = mse;
                    lambda = candidate;
                }
            }
        }
    }

    const auto s = standardize(data);
    const auto fit = lasso_cd(s.z, n, d, s.active, data.targets(), lambda, params);
    lambda_ = lambda;
    scaled_coefficients_ = fit.beta;
    coefficients_.assign(d, 0.0);
    intercept_ = fit.y_mean;
    for (std::size_t j = 0; j < d; ++j) {
        if (!s.active[j]) continue;
        coefficients_[j] = fit.beta[j] / s.standardizer.scale[j];
        intercept_ -= coefficients_[j] * s.standardizer.mean[j];
    }
}

double LearModel::predict(std::span<const double> row) const {
    double value = intercept_;
    for (std::size_t j = 0; j < coefficients_.size(); ++j) value += coefficients_[j] * row[j];
    return value;
}

// ---------------------------------------------------------------------------
// Forest

ForestModel::ForestModel(const dataset::DesignMatrix& data, const ForestParams& params,
                         std::uint64_t seed) {
    const std::size_t n = data.rows();
    TreeParams tree_params{params.max_depth, params.min_leaf,
                           default_mtry(params.features_per_split, data.cols())};
    const bool resample = params.bootstrap && params.trees > 1;
    trees_.resize(params.trees);
    const auto features = data.features();
    parallel_for(params.trees, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        std::vector<std::size_t> sample(n);
        if (resample) {
            for (auto& s : sample) s = uniform_index(rng, n);
        } else {
            std::iota(sample.begin(), sample.end(), 0);
        }
        trees_[b] = RegressionTree::fit(features, data.targets(), sample, tree_params, rng);
    });
}

double ForestModel::predict(std::span<const double> row) const {
    double sum = 0.0;
    for (const auto& tree : trees_) sum += tree.predict(row);
    return sum / static_cast<double>(trees_.size());
}

// ---------------------------------------------------------------------------
// Gradient boosting (squared loss)

BoostModel::BoostModel(const dataset::DesignMatrix& data, const BoostParams& params)
    : rate_(params.learning_rate) {
    const std::size_t n = data.rows();
    const auto& y = data.targets();
    base_ = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    if (rate_ == 0.0) return;

    std::vector<double> fitted(n, base_);
    std::vector<double> resid(n);
    std::vector<std::size_t> sample(n);
    std::iota(sample.begin(), sample.end(), 0);
    const TreeParams tree_params{params.max_depth, params.min_leaf, 0};
    Rng unused(0);
    const auto features = data.features();
    for (std::size_t m = 0; m < params.trees; ++m) {
        for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - fitted[i];
        auto tree = RegressionTree::fit(features, resid, sample, tree_params, unused);
        for (std::size_t i = 0; i < n; ++i) fitted[i] += rate_ * tree.predict(data.row(i));
        trees_.push_back(std::move(tree));
    }
}

double BoostModel::predict(std::span<const double> row) const {
    double value = base_;
    for (const auto& tree : trees_) value += rate_ * tree.predict(row);
    return value;
}

// ---------------------------------------------------------------------------
// PointModel

PointModel::PointModel(Impl impl, std::vector<std::string> feature_names)
    : impl_(std::move(impl)), names_(std::move(feature_names)) {}

Kind PointModel::kind() const noexcept { return static_cast<Kind>(impl_.index()); }

double PointModel::predict(std::span<const double> row) const {
    if (row.size() != width())
        throw ShapeError("row width " + std::to_string(row.size()) + " differs from model width " +
                         std::to_string(width()));
    return std::visit([&](const auto& model) { return model.predict(row); }, impl_);
}

std::vector<double> PointModel::predict(const dataset::FeatureRows& rows) const {
    if (rows.rows() > 0 && rows.cols() != width())
        throw ShapeError("row width " + std::to_string(rows.cols()) + " differs from model width " +
                         std::to_string(width()));
    std::vector<double> out(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict(rows.row(i));
    return out;
}

PointModel fit_point(Kind kind, const dataset::DesignMatrix& data, const LearnerParams& params,
                     std::uint64_t seed) {
    require_data(data);
    switch (kind) {
    case Kind::knn:
        if (params.knn.k < 1) throw ConfigError("knn: k must be >= 1");
        if (params.knn.k > data.rows())
            throw ConfigError("knn: k = " + std::to_string(params.knn.k) + " exceeds " +
                              std::to_string(data.rows()) + " training rows");
        return PointModel(KnnModel(data, params.knn), data.feature_names());
    case Kind::lear:
        if (params.lear.lambda && !(*params.lear.lambda >= 0.0))
            throw ConfigError("lear: lambda must be >= 0");
        for (const double f : params.lear.grid_factors)
            if (!(f >= 0.0)) throw ConfigError("lear: grid factors must be >= 0");
        if (!(params.lear.validation_fraction >= 0.0 && params.lear.validation_fraction < 1.0))
            throw ConfigError("lear: validation fraction must lie in [0, 1)");
        return PointModel(LearModel(data, params.lear), data.feature_names());
    case Kind::forest:
        if (params.forest.trees < 1) throw ConfigError("forest: trees must be >= 1");
        if (params.forest.min_leaf < 1) throw ConfigError("forest: min_leaf must be >= 1");
        return PointModel(ForestModel(data, params.forest, seed), data.feature_names());
    case Kind::boost:
        if (params.boost.trees < 1) throw ConfigError("boost: trees must be >= 1");
        if (params.boost.min_leaf < 1) throw ConfigError("boost: min_leaf must be >= 1");
        if (!(params.boost.learning_rate >= 0.0 && params.boost.learning_rate <= 1.0))
            throw ConfigError("boost: learning rate must lie in [0, 1]");
        return PointModel(BoostModel(data, params.boost), data.feature_names());
    }
    throw ConfigError("unknown learner kind");
}

std::vector<double> predict_point(const PointModel& model, const dataset::FeatureRows& rows) {
    return model.predict(rows);
}

// ---------------------------------------------------------------------------
// Quantile regression forest

QrfModel::QrfModel(const dataset::DesignMatrix& data, const QrfParams& params, std::uint64_t seed)
    : targets_(data.targets()) {
    const std::size_t n = data.rows();
    const TreeParams tree_params{params.max_depth, params.min_leaf,
                                 default_mtry(params.features_per_split, data.cols())};
    const bool resample = params.trees > 1 && params.subsample < 1.0;
    const std::size_t draw =
        std::max<std::size_t>(1, static_cast<std::size_t>(params.subsample * static_cast<double>(n)));
    trees_.resize(params.trees);
    const auto features = data.features();
    parallel_for(params.trees, [&](std::size_t b) {
        Rng rng(derive_seed(seed, b));
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), 0);
        if (resample) {
            for (std::size_t i = 0; i < draw; ++i)
                std::swap(rows[i], rows[i + uniform_index(rng, n - i)]);
            rows.resize(draw);
            std::sort(rows.begin(), rows.end());
        }
        trees_[b] = RegressionTree::fit(features, targets_, rows, tree_params, rng);
    });
}

std::vector<double> QrfModel::weights(std::span<const double> row) const {
    std::vector<double> w(targets_.size(), 0.0);
    const double per_tree = 1.0 / static_cast<double>(trees_.size());
    for (const auto& tree : trees_) {
        const auto leaf = tree.leaf_rows(tree.leaf_of(row));
        const double share = per_tree / static_cast<double>(leaf.size());
        for (const auto r : leaf) w[r] += share;
    }
    return w;
}

double QrfModel::quantile(std::span<const double> row, double p,
                          quantile::Convention convention) const {
    return quantile::weighted_quantile(targets_, weights(row), p, convention);
}

QrfModel fit_qrf(const dataset::DesignMatrix& data, const QrfParams& params, std::uint64_t seed) {
    require_data(data);
    if (params.trees < 1) throw ConfigError("qrf: trees must be >= 1");
    if (params.min_leaf < 1) throw ConfigError("qrf: min_leaf must be >= 1");
    if (params.min_leaf > data.rows())
        throw ConfigError("qrf: min_leaf = " + std::to_string(params.min_leaf) + " exceeds " +
                          std::to_string(data.rows()) + " rows");
    if (!(params.subsample > 0.0 && params.subsample <= 1.0))
        throw ConfigError("qrf: subsample must lie in (0, 1]");
    return QrfModel(data, params, seed);
}

double qrf_quantile(const QrfModel& model, std::span<const double> row, double p,
                    quantile::Convention convention) {
    if (!(p > 0.0 && p < 1.0))
        throw ConfigError("qrf quantile level must lie in (0, 1), got " + format_double(p));
    return model.quantile(row, p, convention);
}

} // namespace pepf::learners
