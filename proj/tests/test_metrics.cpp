#include <doctest.h>

#include <pepf/error.hpp>
#include <pepf/io.hpp>
#include <pepf/metrics.hpp>
#include <pepf/random.hpp>

#include "helpers.hpp"

#include <cmath>
#include <sstream>

using namespace pepf;
using namespace pepf::metrics;

TEST_CASE("APS examples") {
    const quantile::QuantileGrid grid({0.1, 0.9});
    CHECK(aps(quantile::QuantileForecast(grid, {10, 10}), std::vector<double>{20}) == doctest::Approx(5.0));
    CHECK(aps(quantile::QuantileForecast(grid, {3, 3, 7, 7}), std::vector<double>{3, 7}) == 0.0);
    CHECK_THROWS_AS(aps(quantile::QuantileForecast(grid, {1, 2}), std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("APS is permutation invariant and decomposes over periods") {
    Rng rng(1);
    const quantile::QuantileGrid grid;
    std::vector<double> values(9 * 30), truth(30);
    for (auto& v : values) v = 10 * standard_normal(rng);
    for (auto& y : truth) y = 10 * standard_normal(rng);
    const quantile::QuantileForecast f(grid, values);
    const double whole = aps(f, truth);

    std::vector<double> rv, rt;
    for (std::size_t t = 30; t-- > 0;) {
        rv.insert(rv.end(), f.step_values(t).begin(), f.step_values(t).end());
        rt.push_back(truth[t]);
    }
    CHECK(aps(quantile::QuantileForecast(grid, rv), rt) == doctest::Approx(whole).epsilon(1e-12));

    const quantile::QuantileForecast head(grid, std::vector<double>(values.begin(), values.begin() + 9 * 12));
    const quantile::QuantileForecast tail(grid, std::vector<double>(values.begin() + 9 * 12, values.end()));
    const double a = aps(head, std::vector<double>(truth.begin(), truth.begin() + 12));
    const double b = aps(tail, std::vector<double>(truth.begin() + 12, truth.end()));
    CHECK((12 * a + 18 * b) / 30 == doctest::Approx(whole).epsilon(1e-12));
}

TEST_CASE("coverage counts closed intervals") {
    const std::vector<PredictionInterval> iv(4, PredictionInterval{0, 2, 0.1});
    CHECK(coverage(iv, std::vector<double>{1, 1, 3, 1}) == 0.75);
    CHECK(coverage(iv, std::vector<double>{0, 2, 0, 2}) == 1.0);
    const std::vector<PredictionInterval> points{{5, 5, 0.1}, {7, 7, 0.1}};
    CHECK(coverage(points, std::vector<double>{5, 7}) == 1.0);
    CHECK_THROWS_AS(coverage(std::vector<PredictionInterval>{}, std::vector<double>{}), DataError);
}

TEST_CASE("Winkler branches") {
    const PredictionInterval iv{10, 20, 0.1};
    CHECK(winkler(iv, 15, 0.2) == 10.0);
    CHECK(winkler(iv, 15, 3.0) == 10.0);
    CHECK(winkler(iv, 7, 0.2) == doctest::Approx(40.0));
    CHECK(winkler(iv, 25, 0.2) == doctest::Approx(60.0));
    CHECK(winkler(iv, 25) == doctest::Approx(60.0));
    CHECK_THROWS_AS(winkler(iv, 1, 0.0), ConfigError);
}

TEST_CASE("metric identities on random data") {
    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const double q = 50 * standard_normal(rng), y = 50 * standard_normal(rng);
        CHECK(quantile::pinball(q, y, 0.5) == doctest::Approx(std::abs(y - q) / 2));
        const double a = 30 * standard_normal(rng), b = 30 * standard_normal(rng);
        const PredictionInterval iv{std::min(a, b), std::max(a, b), 0.1};
        CHECK(winkler(iv, y) >= iv.width());
        if (iv.contains(y)) CHECK(winkler(iv, y) == iv.width());
    }
}

TEST_CASE("level pair labels") {
    CHECK(level_pair_label(0.1) == "0.1-0.9");
    CHECK(level_pair_label(0.3) == "0.3-0.7");
    CHECK(level_pair_label(0.05) == "0.05-0.95");
}

namespace {

std::vector<RunOutput> sample_runs(std::size_t steps, std::uint64_t seed, std::vector<double>& truth) {
    Rng rng(seed);
    const quantile::QuantileGrid grid({0.1, 0.3, 0.5, 0.7, 0.9});
    truth.resize(steps);
    for (auto& y : truth) y = 40 + 10 * standard_normal(rng);
    std::vector<RunOutput> runs;
    for (const double spread : {2.0, 8.0, 20.0}) {
        std::vector<double> v;
        for (std::size_t t = 0; t < steps; ++t)
            for (const double z : {-1.28, -0.52, 0.0, 0.52, 1.28}) v.push_back(40 + spread * z);
        runs.push_back({"m" + std::to_string(int(spread)), "lear", quantile::QuantileForecast(grid, v),
                        testing::hourly(steps)});
    }
    return runs;
}

} // namespace

TEST_CASE("report rows equal direct metric calls") {
    std::vector<double> truth;
    const auto runs = sample_runs(10, 3, truth);
    const auto times = testing::hourly(10);
    const auto report = build_report(std::span(runs).first(1), truth, times);
    REQUIRE(report.rows.size() == 2);
    const auto& row = *report.find("m2", "lear", "0.1-0.9");
    const auto iv = intervals_at(runs[0].forecast, 0.1);
    CHECK(row.n == 10);
    CHECK(row.aps == aps(runs[0].forecast, truth));
    CHECK(row.coverage == coverage(iv, truth));
    CHECK(row.mean_width == mean_width(iv));
    CHECK(row.winkler == mean_winkler(iv, truth));
    CHECK(report.find("m2", "lear", "0.2-0.8") == nullptr);
}

TEST_CASE("identical runs give identical rows and flags mark extremes") {
    std::vector<double> truth;
    auto runs = sample_runs(50, 4, truth);
    runs.push_back(runs[0]);
    runs.back().method = "copy";
    const auto report = build_report(runs, truth);
    const auto* a = report.find("m2", "lear", "0.1-0.9");
    const auto* b = report.find("copy", "lear", "0.1-0.9");
    CHECK(a->aps == b->aps);
    CHECK(a->winkler == b->winkler);
    std::size_t best = 0, worst = 0;
    for (const auto& r : report.rows) {
        best += r.best;
        worst += r.worst;
        CHECK(r.coverage >= 0.0);
        CHECK(r.coverage <= 1.0);
        CHECK(r.winkler >= r.mean_width);
    }
    CHECK(best == 2);
    CHECK(worst == 2);
}

TEST_CASE("misaligned runs are rejected") {
    std::vector<double> truth;
    auto runs = sample_runs(10, 5, truth);
    truth.pop_back();
    CHECK_THROWS_AS(build_report(runs, truth), ShapeError);
    truth.push_back(1.0);
    const auto shifted = testing::hourly(10, 1577836800 + 3600);
    CHECK_THROWS_AS(build_report(runs, truth, shifted), ShapeError);
}

TEST_CASE("report recomputed from persisted forecasts matches bit for bit") {
    std::vector<double> truth;
    const auto runs = sample_runs(24, 6, truth);
    const auto times = testing::hourly(24);
    const auto direct = build_report(runs, truth, times);

    std::vector<RunOutput> reloaded;
    for (const auto& run : runs) {
        std::stringstream file;
        io::write_forecast_csv(file, run.timestamps, run.forecast, "config abc");
        const auto back = io::read_forecast_csv(file);
        reloaded.push_back({run.method, run.learner, back.forecast, back.times});
    }
    std::stringstream truth_file;
    io::write_series_csv(truth_file, times, truth);
    const auto truth_back = io::read_series_csv(truth_file);
    const auto again = build_report(reloaded, truth_back.values, truth_back.times);

    std::ostringstream a, b;
    write_report_csv(a, direct);
    write_report_csv(b, again);
    CHECK(a.str() == b.str());
    std::ostringstream ja, jb;
    write_report_json(ja, direct, "h");
    write_report_json(jb, again, "h");
    CHECK(ja.str() == jb.str());
    CHECK(a.str().rfind("method,learner,level_pair,aps,mean_width,coverage,winkler,n\n", 0) == 0);
}
