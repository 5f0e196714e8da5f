#include <doctest.h>

#include <pepf/error.hpp>
#include <pepf/quantile.hpp>
#include <pepf/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace pepf;
using namespace pepf::quantile;

namespace {

/// Minimum of Σ ρ_α(y - c) over c; the optimum is attained at a data point.
struct BruteForce {
    double objective = std::numeric_limits<double>::infinity();
    std::vector<double> minimizers;
};

BruteForce brute_force_intercept(const std::vector<double>& y, double alpha) {
    BruteForce out;
    std::vector<double> objectives;
    for (const double c : y) {
        double total = 0.0;
        for (const double v : y) total += pinball(c, v, alpha);
        objectives.push_back(total);
        out.objective = std::min(out.objective, total);
    }
    for (std::size_t i = 0; i < y.size(); ++i)
        if (objectives[i] <= out.objective + 1e-9) out.minimizers.push_back(y[i]);
    return out;
}

dataset::DesignMatrix intercept_only(const std::vector<double>& y) {
    return dataset::DesignMatrix({}, 0, y);
}

} // namespace

TEST_CASE("pinball examples") {
    CHECK(pinball(10, 10, 0.3) == 0.0);
    CHECK(pinball(10, 20, 0.1) == doctest::Approx(1.0));
    CHECK(pinball(10, 4, 0.1) == doctest::Approx(5.4));
}

TEST_CASE("pinball is convex in the prediction") {
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        const double a = 100 * uniform_unit(rng) - 50, b = 100 * uniform_unit(rng) - 50;
        const double y = 100 * uniform_unit(rng) - 50;
        const double alpha = 0.01 + 0.98 * uniform_unit(rng);
        CHECK(pinball((a + b) / 2, y, alpha) <= (pinball(a, y, alpha) + pinball(b, y, alpha)) / 2 + 1e-12);
        CHECK(pinball(a, y, alpha) >= 0.0);
    }
}

TEST_CASE("empirical quantile conventions") {
    const std::vector<double> v{5, 3, 1, 4, 2};
    CHECK(empirical_quantile(v, 0.8, Convention::higher) == 4);
    CHECK(empirical_quantile(v, 0.8, Convention::conformal) == 5);
    CHECK(empirical_quantile(v, 0.5, Convention::linear) == 3);
    CHECK(empirical_quantile(v, 0.1, Convention::linear) == doctest::Approx(1.4));
    for (const auto c : {Convention::higher, Convention::linear, Convention::conformal})
        for (const double p : {0.05, 0.5, 0.99, 1.0}) CHECK(empirical_quantile(std::vector<double>{7.5}, p, c) == 7.5);

    const std::vector<double> nine{1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK(empirical_quantile(nine, 0.8, Convention::conformal) == 8);
    CHECK(empirical_quantile(nine, 0.95, Convention::conformal) == 9);

    CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, 0.5), DataError);
    CHECK_THROWS_AS(empirical_quantile(v, 0.0), ConfigError);
    CHECK_THROWS_AS(empirical_quantile(v, 1.5), ConfigError);
    CHECK(parse_convention("higher") == Convention::higher);
    CHECK_THROWS_AS(parse_convention("nearest"), ConfigError);
}

TEST_CASE("weighted quantile with equal weights matches the unweighted rule") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 20);
        std::vector<double> v(n);
        for (auto& x : v) x = std::round(20 * uniform_unit(rng));
        const std::vector<double> w(n, 0.37);
        const double p = 0.02 + 0.96 * uniform_unit(rng);
        for (const auto c : {Convention::higher, Convention::linear, Convention::conformal})
            CHECK(weighted_quantile(v, w, p, c) == doctest::Approx(empirical_quantile(v, p, c)));
    }
    const std::vector<double> v{1, 100, 3};
    const std::vector<double> w{1, 0, 1};
    CHECK(weighted_quantile(v, w, 1.0, Convention::higher) == 3);
}

TEST_CASE("grid and forecast basics") {
    const QuantileGrid grid;
    CHECK(grid.size() == 9);
    CHECK(grid.contains(0.1));
    CHECK(grid.contains(0.9));
    CHECK(grid.index_of(0.3) == 2);
    const auto alphas = grid.interval_alphas();
    REQUIRE(alphas.size() == 4);
    CHECK(alphas.front() == doctest::Approx(0.1));
    CHECK_THROWS_AS(QuantileGrid({0.5, 0.2}), ConfigError);
    CHECK_THROWS_AS(QuantileGrid({0.0, 0.2}), ConfigError);
    CHECK_THROWS_AS(grid.index_of(0.25), ShapeError);
}

TEST_CASE("rearrangement") {
    const QuantileGrid grid({0.1, 0.9});
    const auto fixed = rearrange(QuantileForecast(grid, {5, 3}));
    CHECK(fixed.values() == std::vector<double>{3, 5});
    const QuantileForecast monotone(grid, {1, 2, 3, 4});
    CHECK(rearrange(monotone).values() == monotone.values());

    Rng rng(2);
    const QuantileGrid deciles;
    std::vector<double> values(9 * 30);
    for (auto& x : values) x = uniform_unit(rng);
    const QuantileForecast random(deciles, values);
    const auto once = rearrange(random);
    CHECK(once.is_monotone());
    CHECK(rearrange(once).values() == once.values());
    for (std::size_t t = 0; t < 30; ++t) {
        std::vector<double> before(random.step_values(t).begin(), random.step_values(t).end());
        std::sort(before.begin(), before.end());
        CHECK(std::equal(before.begin(), before.end(), once.step_values(t).begin()));
    }
}

TEST_CASE("intercept-only fit at the median of 1..10") {
    std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto model = fit_linear_qr(intercept_only(y), 0.5);
    const auto oracle = brute_force_intercept(y, 0.5);
    CHECK(model.objective == doctest::Approx(oracle.objective).epsilon(1e-9));
    // Any point of [5, 6] is optimal.
    CHECK(model.intercept >= 5.0 - 1e-6);
    CHECK(model.intercept <= 6.0 + 1e-6);
}

TEST_CASE("intercept-only fit at 0.9 matches the brute-force minimizer") {
    std::vector<double> y{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5};
    const auto model = fit_linear_qr(intercept_only(y), 0.9);
    const auto oracle = brute_force_intercept(y, 0.9);
    CHECK(model.objective == doctest::Approx(oracle.objective).epsilon(1e-9));
    bool hit = false;
    for (const double m : oracle.minimizers) hit |= std::abs(model.intercept - m) < 1e-6;
    CHECK(hit);
}

TEST_CASE("exact linear relation is recovered at every level") {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 40; ++i) {
        const double x = 0.25 * i - 3;
        rows.push_back({x});
        y.push_back(3 + 2 * x);
    }
    const auto data = dataset::DesignMatrix::from_rows(rows, y);
    for (const double alpha : {0.1, 0.5, 0.9}) {
        const auto model = fit_linear_qr(data, alpha);
        CHECK(model.coefficients[0] == doctest::Approx(2.0).epsilon(1e-7));
        CHECK(model.intercept == doctest::Approx(3.0).epsilon(1e-7));
        CHECK(model.objective < 1e-6);
    }
}

TEST_CASE("fitted objective never exceeds the intercept-only baseline") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 60, d = 3;
        std::vector<std::vector<double>> rows(n, std::vector<double>(d));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& x : rows[i]) x = standard_normal(rng);
            y[i] = rows[i][0] - 0.5 * rows[i][2] + standard_normal(rng) * (1 + std::abs(rows[i][1]));
        }
        const auto data = dataset::DesignMatrix::from_rows(rows, y);
        const double alpha = 0.1 + 0.1 * static_cast<double>(trial % 9);
        const auto model = fit_linear_qr(data, alpha);
        const auto baseline = brute_force_intercept(y, alpha);
        CHECK(model.objective <= baseline.objective + 1e-8);
        CHECK(qr_objective(model, data) == doctest::Approx(model.objective).epsilon(1e-9));
    }
}

TEST_CASE("subgradient optimality of a fitted model") {
    // At an optimum some subgradient of Σρ vanishes: for every direction the
    // one-sided derivatives are non-negative, which a small perturbation test checks.
    Rng rng(8);
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 80; ++i) {
        const double x = standard_normal(rng);
        rows.push_back({x});
        y.push_back(1 + x + standard_normal(rng));
    }
    const auto data = dataset::DesignMatrix::from_rows(rows, y);
    const auto model = fit_linear_qr(data, 0.3);
    for (const double step : {1e-4, -1e-4}) {
        auto shifted = model;
        shifted.intercept += step;
        CHECK(qr_objective(shifted, data) >= model.objective - 1e-9);
        shifted = model;
        shifted.coefficients[0] += step;
        CHECK(qr_objective(shifted, data) >= model.objective - 1e-9);
    }
}

TEST_CASE("median regression on symmetric noise recovers the conditional median") {
    Rng rng(99);
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (int i = 0; i < 2000; ++i) {
        const double x = 4 * uniform_unit(rng) - 2;
        rows.push_back({x});
        y.push_back(1.5 - 0.7 * x + standard_normal(rng));
    }
    const auto model = fit_linear_qr(dataset::DesignMatrix::from_rows(rows, y), 0.5);
    CHECK(model.intercept == doctest::Approx(1.5).epsilon(0.06));
    CHECK(model.coefficients[0] == doctest::Approx(-0.7).epsilon(0.1));
}

TEST_CASE("degenerate designs fall back to an intercept with a warning") {
    std::vector<std::vector<double>> rows(10, std::vector<double>{0.0, 0.0});
    std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto model = fit_linear_qr(dataset::DesignMatrix::from_rows(rows, y), 0.5);
    CHECK(!model.warnings.empty());
    CHECK(model.coefficients == std::vector<double>{0.0, 0.0});
    CHECK(model.objective == doctest::Approx(brute_force_intercept(y, 0.5).objective));

    // A duplicated column is pinned and the fit is still optimal.
    std::vector<std::vector<double>> dup;
    for (int i = 0; i < 10; ++i) dup.push_back({double(i), double(i)});
    const auto twin = fit_linear_qr(dataset::DesignMatrix::from_rows(dup, y), 0.5);
    CHECK(!twin.warnings.empty());
    CHECK(twin.objective < 1e-6);

    CHECK_THROWS_AS(fit_linear_qr(dataset::DesignMatrix::from_rows(dup, y), 1.0), ConfigError);
    CHECK_THROWS_AS(fit_linear_qr(dataset::DesignMatrix(), 0.5), DataError);
}
