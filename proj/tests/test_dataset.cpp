#include <doctest.h>

#include "helpers.hpp"

#include <pepf/dataset.hpp>
#include <pepf/error.hpp>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace pepf;
using namespace pepf::dataset;

namespace {

SeriesFrame parse(const std::string& text, CsvSchema schema = {}) {
    std::istringstream in(text);
    return read_csv(in, schema);
}

std::string error_of(const auto& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("csv with timestamp and price columns") {
    CsvSchema schema;
    schema.timestamp_column = "ts";
    const auto frame = parse("ts,price\n2024-01-01T00:00Z,1\n2024-01-01T01:00Z,2\n2024-01-01T02:00Z,3\n", schema);
    CHECK(frame.size() == 3);
    CHECK(frame.covariates().empty());
    CHECK(frame.target() == std::vector<double>{1, 2, 3});
    CHECK(frame.period() == std::chrono::seconds{3600});
}

TEST_CASE("csv covariate columns are mapped by name") {
    CsvSchema schema;
    schema.timestamp_column = "ts";
    const auto frame = parse("ts,price,wind_fc\n2024-01-01T00:00Z,1,10\n2024-01-01T01:00Z,2,20\n", schema);
    REQUIRE(frame.covariates().size() == 1);
    CHECK(frame.covariates()[0].name == "wind_fc");
    CHECK(frame.covariate("wind_fc")->values == std::vector<double>{10, 20});
    CHECK(frame.covariate("demand") == nullptr);
}

TEST_CASE("duplicate timestamps are a grid error naming the timestamp") {
    const auto text = "timestamp,price\n2024-01-01T00:00Z,1\n2024-01-01T01:00Z,2\n2024-01-01T01:00Z,3\n";
    CHECK_THROWS_AS(parse(text), GridError);
    CHECK(error_of([&] { parse(text); }).find("2024-01-01T01:00:00Z") != std::string::npos);
}

TEST_CASE("non-uniform spacing names the first offending gap") {
    const auto text = "timestamp,price\n2024-01-01T00:00Z,1\n2024-01-01T01:00Z,2\n2024-01-01T03:00Z,3\n"
                      "2024-01-01T06:00Z,4\n";
    CHECK_THROWS_AS(parse(text), GridError);
    const auto msg = error_of([&] { parse(text); });
    CHECK(msg.find("2024-01-01T01:00:00Z") != std::string::npos);
}

TEST_CASE("missing columns and bad numbers") {
    CHECK_THROWS_AS(parse("time,price\n2024-01-01T00:00Z,1\n"), SchemaError);
    CHECK_THROWS_AS(parse("timestamp,cost\n2024-01-01T00:00Z,1\n"), SchemaError);

    const auto bad = "timestamp,price\n2024-01-01T00:00Z,1\n2024-01-01T01:00Z,abc\n";
    try {
        parse(bad);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("missing values are rejected unless forward fill is requested") {
    const auto text = "timestamp,price\n2024-01-01T00:00Z,1\n2024-01-01T01:00Z,NA\n2024-01-01T02:00Z,3\n";
    CHECK_THROWS_AS(parse(text), ParseError);
    CsvSchema schema;
    schema.missing = MissingPolicy::forward_fill;
    CHECK(parse(text, schema).target() == std::vector<double>{1, 1, 3});
}

TEST_CASE("rows are sorted and comments skipped") {
    const auto frame = parse("# note\ntimestamp,price\n2024-01-01T02:00Z,3\n2024-01-01T00:00Z,1\n"
                             "2024-01-01T01:00Z,2\n");
    CHECK(frame.target() == std::vector<double>{1, 2, 3});
}

TEST_CASE("csv round trip") {
    SynthParams p;
    p.n = 50;
    p.ar = {0.5};
    p.noise_scale = 3.0;
    const auto frame = synth_series(p, 3);
    std::stringstream buffer;
    write_csv(buffer, frame);
    const auto back = read_csv(buffer, {});
    CHECK(back.timestamps() == frame.timestamps());
    CHECK(back.target() == frame.target());
}

TEST_CASE("single target lag") {
    std::vector<double> y(10);
    std::iota(y.begin(), y.end(), 1.0);
    LagSpec spec;
    spec.target_lags = {1};
    const auto design = build_features(testing::frame_of(y), spec);
    REQUIRE(design.rows() == 9);
    CHECK(design.cols() == 1);
    CHECK(design.feature_names() == std::vector<std::string>{"price_lag_1"});
    for (std::size_t i = 0; i < design.rows(); ++i) {
        CHECK(design(i, 0) == y[i]);
        CHECK(design.targets()[i] == y[i + 1]);
    }
}

TEST_CASE("lag 2 on five values gives three rows") {
    LagSpec spec;
    spec.target_lags = {2};
    CHECK(build_features(testing::frame_of({1, 2, 3, 4, 5}), spec).rows() == 3);
}

TEST_CASE("target lag below lead is rejected") {
    LagSpec spec;
    spec.target_lags = {1};
    spec.lead = 2;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    CHECK_THROWS_AS(build_features(testing::frame_of({1, 2, 3, 4, 5}), spec), ConfigError);
}

TEST_CASE("lag spec validation") {
    LagSpec spec;
    spec.target_lags = {1, 1};
    CHECK_THROWS_AS(spec.validate(), ConfigError);
    spec.target_lags = {1};
    spec.horizon = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("frame too short for the lags") {
    LagSpec spec;
    spec.target_lags = {5};
    CHECK_THROWS_AS(build_features(testing::frame_of({1, 2, 3}), spec), InsufficientHistoryError);
}

TEST_CASE("future-known covariates and naming") {
    const std::size_t n = 12;
    std::vector<double> y(n), wind(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<double>(i);
        wind[i] = 100.0 + static_cast<double>(i);
    }
    SeriesFrame frame(testing::hourly(n), "price", y, {{"wind_fc", wind}});
    LagSpec spec;
    spec.target_lags = {2, 3};
    spec.covariate_lags["wind_fc"] = {0, -1, 1};
    spec.lead = 2;
    const auto design = build_features(frame, spec);
    CHECK(design.feature_names() ==
          std::vector<std::string>{"price_lag_2", "price_lag_3", "wind_fc_lead_0", "wind_fc_lead_1", "wind_fc_lag_1"});
    CHECK(design.rows() == n - 3 - 1);
    for (std::size_t i = 0; i < design.rows(); ++i) {
        const auto t = design.target_index()[i];
        CHECK(design.targets()[i] == y[t]);
        CHECK(design(i, 0) == y[t - 2]);
        CHECK(design(i, 1) == y[t - 3]);
        CHECK(design(i, 2) == wind[t]);
        CHECK(design(i, 3) == wind[t + 1]);
        CHECK(design(i, 4) == wind[t - 1]);
    }
}

TEST_CASE("no target-derived feature is newer than t - lead") {
    SynthParams p;
    p.n = 300;
    p.ar = {0.6, 0.2};
    p.noise_scale = 1.0;
    const auto frame = synth_series(p, 11);
    LagSpec spec;
    spec.target_lags = {2, 3, 24};
    spec.lead = 2;
    const auto design = build_features(frame, spec);
    for (std::size_t i = 0; i < design.rows(); ++i) {
        const auto t = design.target_index()[i];
        for (std::size_t j = 0; j < spec.target_lags.size(); ++j) {
            const auto source = t - static_cast<std::size_t>(spec.target_lags[j]);
            CHECK(source + static_cast<std::size_t>(spec.lead) <= t);
            CHECK(design(i, j) == frame.target()[source]);
        }
    }
}

TEST_CASE("target timestamps round trip to the frame") {
    SynthParams p;
    p.n = 60;
    const auto frame = synth_series(p, 1);
    LagSpec spec;
    spec.target_lags = {1, 24};
    const auto design = build_features(frame, spec);
    for (std::size_t i = 0; i < design.rows(); ++i)
        CHECK(design.target_times()[i] == frame.timestamps()[design.target_index()[i]]);
    CHECK(design.target_index().front() == 24);
    CHECK(design.target_index().back() == frame.size() - 1);
}

TEST_CASE("rolling origins") {
    const auto splits = rolling_splits(100, 50, 24, 24);
    REQUIRE(splits.size() == 2);
    CHECK(splits[0] == Split{0, 50, 50, 74});
    CHECK(splits[1] == Split{24, 74, 74, 98});

    CHECK(rolling_splits(100, 100, 24, 24).empty());
    CHECK(rolling_splits(3, 1, 1, 1).size() == 2);
    CHECK_THROWS_AS(rolling_splits(100, 50, 0, 24), ConfigError);
    CHECK_THROWS_AS(rolling_splits(100, 50, 12, 24), ConfigError);
}

TEST_CASE("test windows tile a contiguous slice and follow their train window") {
    const auto splits = rolling_splits(1000, 168, 24, 24);
    REQUIRE(!splits.empty());
    for (std::size_t i = 0; i < splits.size(); ++i) {
        CHECK(splits[i].train_end == splits[i].test_begin);
        CHECK(splits[i].train_end - splits[i].train_begin == 168);
        if (i > 0) CHECK(splits[i].test_begin == splits[i - 1].test_end);
    }
    CHECK(splits.back().test_end <= 1000);
    CHECK(splits.back().test_end + 24 > 1000);
}

TEST_CASE("degenerate generator is constant at the level") {
    SynthParams p;
    p.n = 5;
    p.level = 42.0;
    const auto frame = synth_series(p, 9);
    CHECK(frame.size() == 5);
    for (const double v : frame.target()) CHECK(v == 42.0);
}

TEST_CASE("generator is deterministic per seed") {
    SynthParams p;
    p.n = 500;
    p.ar = {0.7, -0.2};
    p.daily_amplitude = 10;
    p.weekly_amplitude = 5;
    p.noise_scale = 4;
    p.spike_probability = 0.05;
    p.spike_scale = 30;
    const auto a = synth_series(p, 7);
    const auto b = synth_series(p, 7);
    const auto c = synth_series(p, 8);
    CHECK(a.target() == b.target());
    CHECK(a.timestamps() == b.timestamps());
    CHECK(a.target() != c.target());
}

TEST_CASE("spikes add an offset of scale s on top of the spike-free series") {
    SynthParams p;
    p.n = 4000;
    p.spike_probability = 1.0;
    p.spike_scale = 25.0;
    const auto spiky = synth_series(p, 5);
    p.spike_probability = 0.0;
    const auto calm = synth_series(p, 5);
    double total = 0.0;
    std::size_t positive = 0;
    for (std::size_t i = 0; i < p.n; ++i) {
        const double d = spiky.target()[i] - calm.target()[i];
        CHECK(d != 0.0);
        total += std::abs(d);
        positive += d > 0.0;
    }
    CHECK(total / static_cast<double>(p.n) == doctest::Approx(25.0).epsilon(0.06));
    CHECK(static_cast<double>(positive) / static_cast<double>(p.n) == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("non-stationary AR is a config error") {
    SynthParams p;
    p.n = 10;
    p.ar = {1.0};
    CHECK_THROWS_AS(synth_series(p, 1), ConfigError);
    p.ar = {0.5, 0.6};
    CHECK(ar_spectral_radius(p.ar) > 1.0);
    CHECK_THROWS_AS(synth_series(p, 1), ConfigError);
    CHECK(ar_spectral_radius(std::vector<double>{0.5}) == doctest::Approx(0.5));
}
