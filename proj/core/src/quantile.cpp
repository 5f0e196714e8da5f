#include "pepf/quantile.hpp"

#include "pepf/error.hpp"
#include "pepf/text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pepf::quantile {

double pinball(double qhat, double y, double alpha) {
    return y <= qhat ? (1.0 - alpha) * (qhat - y) : alpha * (y - qhat);
}

Convention parse_convention(std::string_view name) {
    if (name == "higher") return Convention::higher;
    if (name == "linear") return Convention::linear;
    if (name == "conformal") return Convention::conformal;
    throw ConfigError("unknown quantile convention '" + std::string(name) + "'");
}

std::string_view to_string(Convention convention) {
    switch (convention) {
    case Convention::higher: return "higher";
    case Convention::linear: return "linear";
    case Convention::conformal: return "conformal";
    }
    return "?";
}

namespace {

constexpr double kRankSlack = 1e-9;

void check_level(double p) {
    if (!(p > 0.0 && p <= 1.0))
        throw ConfigError("quantile level must lie in (0, 1], got " + format_double(p));
}

// 1-based order-statistic rank for the discrete conventions.
std::size_t discrete_rank(std::size_t n, double p, Convention convention) {
    const double scaled = convention == Convention::conformal
                              ? static_cast<double>(n + 1) * p
                              : static_cast<double>(n) * p;
    const double k = std::ceil(scaled - kRankSlack * std::max(1.0, scaled));
    return static_cast<std::size_t>(std::clamp(k, 1.0, static_cast<double>(n)));
}

} // namespace

double empirical_quantile(std::span<const double> values, double p, Convention convention) {
    if (values.empty()) throw DataError("empirical quantile of an empty set");
    check_level(p);
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (convention == Convention::linear) {
        const double h = static_cast<double>(n - 1) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        if (lo + 1 >= n) return sorted[n - 1];
        return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
    }
    return sorted[discrete_rank(n, p, convention) - 1];
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p, Convention convention) {
    if (values.size() != weights.size()) throw ShapeError("values and weights differ in length");
    check_level(p);
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (weights[i] < 0.0) throw DataError("negative quantile weight");
        if (weights[i] > 0.0) pairs.emplace_back(values[i], weights[i]);
    }
    if (pairs.empty()) throw DataError("weighted quantile with no positive weight");
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t n = pairs.size();
    const double total = std::accumulate(pairs.begin(), pairs.end(), 0.0,
                                         [](double acc, const auto& pr) { return acc + pr.second; });

    if (convention == Convention::linear) {
        if (n == 1) return pairs[0].first;
        // Node i sits at (weight strictly before i) / (total - last weight);
        // with equal weights this is (i-1)/(n-1).
        const double span = total - pairs.back().second;
        double before = 0.0;
        double prev_pos = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double pos = std::min(1.0, before / span);
            if (pos >= p) {
                if (i == 0 || pos <= prev_pos) return pairs[i].first;
                const double frac = (p - prev_pos) / (pos - prev_pos);
                return pairs[i - 1].first + frac * (pairs[i].first - pairs[i - 1].first);
            }
            prev_pos = pos;
            before += pairs[i].second;
        }
        return pairs.back().first;
    }

    double target = p * total;
    if (convention == Convention::conformal)
        target = std::min(total, p * total * static_cast<double>(n + 1) / static_cast<double>(n));
    const double slack = kRankSlack * std::max(1.0, target);
    double cumulative = 0.0;
    for (const auto& [value, weight] : pairs) {
        cumulative += weight;
        if (cumulative >= target - slack) return value;
    }
    return pairs.back().first;
}

// ---------------------------------------------------------------------------
// Grid and forecast

QuantileGrid::QuantileGrid() : QuantileGrid({0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {}

QuantileGrid::QuantileGrid(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw ConfigError("quantile grid is empty");
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (!(levels_[i] > 0.0 && levels_[i] < 1.0))
            throw ConfigError("quantile level " + format_double(levels_[i]) + " outside (0, 1)");
        if (i > 0 && !(levels_[i] > levels_[i - 1]))
            throw ConfigError("quantile levels must be strictly increasing");
    }
}

bool QuantileGrid::contains(double level) const {
    return std::any_of(levels_.begin(), levels_.end(),
                       [&](double l) { return std::abs(l - level) < 1e-9; });
}

std::size_t QuantileGrid::index_of(double level) const {
    for (std::size_t i = 0; i < levels_.size(); ++i)
        if (std::abs(levels_[i] - level) < 1e-9) return i;
    throw ShapeError("level " + format_double(level) + " is not on the quantile grid");
}

std::vector<double> QuantileGrid::interval_alphas() const {
    std::vector<double> alphas;
    for (const double level : levels_)
        if (level < 0.5 - 1e-9 && contains(1.0 - level)) alphas.push_back(level);
    return alphas;
}

bool QuantileGrid::operator==(const QuantileGrid& other) const {
    if (levels_.size() != other.levels_.size()) return false;
    for (std::size_t i = 0; i < levels_.size(); ++i)
        if (std::abs(levels_[i] - other.levels_[i]) >= 1e-9) return false;
    return true;
}

QuantileForecast::QuantileForecast(QuantileGrid grid, std::size_t steps)
    : grid_(std::move(grid)), values_(steps * grid_.size(), 0.0) {}

QuantileForecast::QuantileForecast(QuantileGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() % grid_.size() != 0)
        throw ShapeError("forecast values are not a whole number of grid rows");
}

bool QuantileForecast::is_monotone() const {
    for (std::size_t t = 0; t < steps(); ++t) {
        const auto row = step_values(t);
        if (!std::is_sorted(row.begin(), row.end())) return false;
    }
    return true;
}

void QuantileForecast::append(const QuantileForecast& other) {
    if (values_.empty() && grid_.size() == 0) {
        *this = other;
        return;
    }
    if (!(grid_ == other.grid_)) throw ShapeError("cannot append forecasts on different grids");
    values_.insert(values_.end(), other.values_.begin(), other.values_.end());
}

QuantileForecast rearrange(QuantileForecast forecast) {
    const std::size_t width = forecast.grid().size();
    for (std::size_t t = 0; t < forecast.steps(); ++t) {
        std::vector<double> row(forecast.step_values(t).begin(), forecast.step_values(t).end());
        std::sort(row.begin(), row.end());
        for (std::size_t j = 0; j < width; ++j) forecast.at(t, j) = row[j];
    }
    return forecast;
}

// ---------------------------------------------------------------------------
// Linear quantile regression

double LinearQuantileModel::predict(std::span<const double> row) const {
    if (row.size() != coefficients.size())
        throw ShapeError("row width " + std::to_string(row.size()) + " differs from model width " +
                         std::to_string(coefficients.size()));
    double value = intercept;
    for (std::size_t j = 0; j < row.size(); ++j) value += coefficients[j] * row[j];
    return value;
}

std::vector<double> LinearQuantileModel::predict(const dataset::FeatureRows& rows) const {
    std::vector<double> out;
    out.reserve(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) out.push_back(predict(rows.row(i)));
    return out;
}

double qr_objective(const LinearQuantileModel& model, const dataset::DesignMatrix& data) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i)
        total += pinball(model.predict(data.row(i)), data.targets()[i], model.alpha);
    return total;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double max_step(const VectorXd& v, const VectorXd& dv) {
    double step = 1e20;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (dv[i] < 0.0) step = std::min(step, -v[i] / dv[i]);
    return step;
}

VectorXd solve_spd(const MatrixXd& m, const VectorXd& rhs) {
    Eigen::LDLT<MatrixXd> ldlt(m);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        VectorXd x = ldlt.solve(rhs);
        if (x.allFinite()) return x;
    }
    const double ridge = 1e-12 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    return (m + ridge * MatrixXd::Identity(m.rows(), m.cols())).ldlt().solve(rhs);
}

struct InteriorPointResult {
    VectorXd coefficients;
    std::size_t iterations = 0;
};

// Frisch-Newton interior point for
//   min c'x  s.t.  A x = b, 0 <= x <= u
// with A = X' (p × n), c = -y, b = (1-α) X'1, u = 1. Returns β = -dual.
InteriorPointResult frisch_newton(const MatrixXd& X, const VectorXd& y, double alpha,
                                  const LinearQrOptions& options) {
    constexpr double beta = 0.99995;
    const Eigen::Index n = X.rows();
    const MatrixXd A = X.transpose();
    const VectorXd c = -y;
    const VectorXd u = VectorXd::Ones(n);
    const VectorXd b = (1.0 - alpha) * A * VectorXd::Ones(n);

    VectorXd x = VectorXd::Constant(n, 1.0 - alpha);
    VectorXd s = u - x;
    VectorXd dual = solve_spd(A * A.transpose(), A * c);
    VectorXd r = c - A.transpose() * dual;
    for (Eigen::Index i = 0; i < n; ++i)
        if (r[i] == 0.0) r[i] = 1e-3;
    VectorXd z = r.cwiseMax(0.0);
    VectorXd w = z - r;

    const auto gap_of = [&] { return c.dot(x) - dual.dot(b) + w.dot(u); };
    double gap = gap_of();
    std::size_t it = 0;
    while (it < options.max_iterations) {
        const double scale = 1.0 + std::abs(c.dot(x));
        if (gap <= options.tolerance * scale) break;
        ++it;

        const VectorXd q = (z.cwiseQuotient(x) + w.cwiseQuotient(s)).cwiseInverse();
        r = z - w;
        const MatrixXd AQ = A * q.asDiagonal();
        const MatrixXd normal = AQ * A.transpose();

        // Affine-scaling predictor.
        VectorXd dy = solve_spd(normal, AQ * r);
        VectorXd dx = q.cwiseProduct(A.transpose() * dy - r);
        VectorXd ds = -dx;
        VectorXd dz = -z.cwiseProduct(dx.cwiseQuotient(x) + VectorXd::Ones(n));
        VectorXd dw = -w.cwiseProduct(ds.cwiseQuotient(s) + VectorXd::Ones(n));

        double fp = std::min(beta * std::min(max_step(x, dx), max_step(s, ds)), 1.0);
        double fd = std::min(beta * std::min(max_step(w, dw), max_step(z, dz)), 1.0);

        if (std::min(fp, fd) < 1.0) {
            // Mehrotra corrector with centering.
            double mu = z.dot(x) + w.dot(s);
            const double g = (z + fd * dz).dot(x + fp * dx) + (w + fd * dw).dot(s + fp * ds);
            mu = mu * std::pow(g / mu, 3) / (2.0 * static_cast<double>(n));

            const VectorXd dxdz = dx.cwiseProduct(dz);
            const VectorXd dsdw = ds.cwiseProduct(dw);
            const VectorXd xinv = x.cwiseInverse();
            const VectorXd sinv = s.cwiseInverse();
            const VectorXd xi = mu * (xinv - sinv);
            const VectorXd corr = xi - dxdz.cwiseProduct(xinv) + dsdw.cwiseProduct(sinv);

            dy = solve_spd(normal, AQ * (r - corr));
            dx = q.cwiseProduct(A.transpose() * dy - r + corr);
            ds = -dx;
            dz = mu * xinv - z - xinv.cwiseProduct(z.cwiseProduct(dx)) - dxdz.cwiseProduct(xinv);
            dw = mu * sinv - w - sinv.cwiseProduct(w.cwiseProduct(ds)) - dsdw.cwiseProduct(sinv);

            fp = std::min(beta * std::min(max_step(x, dx), max_step(s, ds)), 1.0);
            fd = std::min(beta * std::min(max_step(w, dw), max_step(z, dz)), 1.0);
        }

        x += fp * dx;
        s += fp * ds;
        dual += fd * dy;
        w += fd * dw;
        z += fd * dz;
        gap = gap_of();
        if (!std::isfinite(gap)) break;
    }
    return {-dual, it};
}

double objective_of(const MatrixXd& X, const VectorXd& y, const VectorXd& coef, double alpha) {
    const VectorXd fitted = X * coef;
    double total = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) total += pinball(fitted[i], y[i], alpha);
    return total;
}

// Exact vertex through the k rows with the smallest residuals; kept only when
// it strictly improves the interior-point objective.
void polish_vertex(const MatrixXd& X, const VectorXd& y, double alpha, VectorXd& coef) {
    const Eigen::Index n = X.rows();
    const Eigen::Index k = X.cols();
    if (n < k) return;
    const VectorXd resid = (y - X * coef).cwiseAbs();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return resid[a] < resid[b]; });
    MatrixXd basis(k, k);
    VectorXd rhs(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        basis.row(i) = X.row(order[static_cast<std::size_t>(i)]);
        rhs[i] = y[order[static_cast<std::size_t>(i)]];
    }
    Eigen::FullPivLU<MatrixXd> lu(basis);
    if (lu.rank() < k) return;
    const VectorXd candidate = lu.solve(rhs);
    if (!candidate.allFinite()) return;
    const double current = objective_of(X, y, coef, alpha);
    const double improved = objective_of(X, y, candidate, alpha);
    if (improved < current - 1e-13 * (1.0 + std::abs(current))) coef = candidate;
}

} // namespace

LinearQuantileModel fit_linear_qr(const dataset::DesignMatrix& data, double alpha,
                                  const LinearQrOptions& options) {
    if (data.empty()) throw DataError("quantile regression on an empty design");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("quantile level must lie in (0, 1), got " + format_double(alpha));

    const auto n = static_cast<Eigen::Index>(data.rows());
    const auto d = data.cols();
    LinearQuantileModel model;
    model.alpha = alpha;
    model.coefficients.assign(d, 0.0);

    // Standardize columns; QR is equivariant under affine reparameterization.
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) mean[j] += data(static_cast<std::size_t>(i), j);
        mean[j] /= static_cast<double>(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double dev = data(static_cast<std::size_t>(i), j) - mean[j];
            sd[j] += dev * dev;
        }
        sd[j] = std::sqrt(sd[j] / static_cast<double>(n));
    }

    // Greedy Gram-Schmidt keeps the intercept, then each column that adds rank.
    std::vector<std::size_t> kept;
    std::vector<VectorXd> basis{VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)))};
    for (std::size_t j = 0; j < d; ++j) {
        if (!(sd[j] > 0.0)) {
            model.warnings.push_back("column '" + data.feature_names()[j] +
                                     "' is constant; coefficient fixed at 0");
            continue;
        }
        VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v[i] = (data(static_cast<std::size_t>(i), j) - mean[j]) / sd[j];
        const double norm0 = v.norm();
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& e : basis) v -= e.dot(v) * e;
        if (v.norm() <= options.rank_tolerance * norm0 * 1e2) {
            model.warnings.push_back("column '" + data.feature_names()[j] +
                                     "' is linearly dependent on earlier columns; coefficient "
                                     "fixed at 0");
            continue;
        }
        basis.push_back(v / v.norm());
        kept.push_back(j);
    }
    if (kept.empty() && d > 0) model.warnings.push_back("degenerate design; intercept-only model");

    const auto k = static_cast<Eigen::Index>(kept.size()) + 1;
    MatrixXd X(n, k);
    VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (Eigen::Index c = 1; c < k; ++c) {
            const std::size_t j = kept[static_cast<std::size_t>(c - 1)];
            X(i, c) = (data(static_cast<std::size_t>(i), j) - mean[j]) / sd[j];
        }
        y[i] = data.targets()[static_cast<std::size_t>(i)];
    }

    auto result = frisch_newton(X, y, alpha, options);
    VectorXd coef = result.coefficients;
    if (!coef.allFinite()) throw InvariantError("quantile regression diverged");
    polish_vertex(X, y, alpha, coef);
    model.iterations = result.iterations;
    if (result.iterations >= options.max_iterations)
        model.warnings.push_back("interior point hit the iteration limit");

    double intercept = coef[0];
    for (Eigen::Index c = 1; c < k; ++c) {
        const std::size_t j = kept[static_cast<std::size_t>(c - 1)];
        const double beta_j = coef[c] / sd[j];
        model.coefficients[j] = beta_j;
        intercept -= beta_j * mean[j];
    }
    model.intercept = intercept;
    model.objective = qr_objective(model, data);
    return model;
}

} // namespace pepf::quantile
