#include <doctest.h>

#include "commands.hpp"
#include "config.hpp"

#include <pepf/error.hpp>
#include <pepf/io.hpp>
#include <pepf/quantile.hpp>
#include <pepf/text.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace pepf;

namespace {

fs::path scratch(const std::string& name) {
    const char* root = std::getenv("PEPF_TEST_TMP");
    const fs::path dir = fs::path(root ? root : fs::temp_directory_path() / "pepf_cli_test") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int pepf_main(std::vector<std::string> args) {
    args.insert(args.begin(), "pepf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> data_lines(const fs::path& path) {
    std::ifstream in(path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line.front() != '#') out.push_back(line);
    return out;
}

std::string first_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

/// Small but complete synthetic backtest.
std::vector<std::string> small_backtest(const fs::path& out) {
    return {"-s", "seed=11",          "-s", "synth.n=600",           "-s", "backtest.train_len=240",
            "-s", "lags.target=24,48", "-s", "output=" + out.string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

std::map<std::string, double> summary_profits(const fs::path& path) {
    std::map<std::string, double> out;
    const auto lines = data_lines(path);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        REQUIRE(f.size() == 7);
        out[f[0] + "/" + f[1] + "/" + f[2]] = *parse_double(f[6]);
    }
    return out;
}

} // namespace

TEST_CASE("config file parsing and overrides") {
    std::istringstream in("# comment\nseed = 3\nmethods = scp, enbpi\n\nbattery.capacity=2\n");
    auto config = cli::Config::parse(in);
    CHECK(config.require_u64("seed") == 3);
    CHECK(config.get_list("methods", {}) == std::vector<std::string>{"scp", "enbpi"});
    config.apply_override("battery.capacity=4");
    CHECK(config.get_double("battery.capacity", 0) == 4.0);
    CHECK_THROWS_AS(config.apply_override("battery.capacty=4"), ConfigError);
    CHECK_THROWS_AS(config.apply_override("seed"), ConfigError);

    std::istringstream dup("seed = 1\nseed = 2\n");
    CHECK_THROWS_AS(cli::Config::parse(dup), ConfigError);
    std::istringstream unknown("sed = 1\n");
    CHECK_THROWS_AS(cli::Config::parse(unknown), ConfigError);

    auto other = config;
    other.set("threads", "8");
    other.set("output", "elsewhere");
    CHECK(other.hash() == config.hash());
    other.set("seed", "4");
    CHECK(other.hash() != config.hash());
}

TEST_CASE("synth is deterministic and has the requested shape") {
    const auto dir = scratch("synth");
    const std::vector<std::string> base{"synth", "-s", "seed=7", "-s", "synth.n=100"};
    REQUIRE(pepf_main(concat(base, {"-o", (dir / "a.csv").string()})) == 0);
    REQUIRE(pepf_main(concat(base, {"-o", (dir / "b.csv").string()})) == 0);
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(data_lines(dir / "a.csv").size() == 101);
    CHECK(first_line(dir / "a.csv").rfind("# config_hash=", 0) == 0);
    CHECK_FALSE(fs::exists(dir / "a.csv.tmp"));
}

TEST_CASE("exit codes") {
    const auto dir = scratch("codes");
    CHECK(pepf_main({"synth", "-s", "seed=7", "-s", "synth.ar=0.7,0.5", "-o", (dir / "x.csv").string()}) == 2);
    CHECK(pepf_main({"synth", "-s", "synth.n=10"}) == 2);
    CHECK(pepf_main({"synth", "-s", "seed=7", "-s", "bogus.key=1"}) == 2);
    CHECK(pepf_main({"frobnicate"}) == 2);
    CHECK(pepf_main({"backtest", "-s", "seed=1", "-s", "data.source=csv", "-s",
                     "data.path=" + (dir / "absent.csv").string()}) == 3);
    {
        std::ofstream bad(dir / "bad.csv");
        bad << "timestamp,price\n2020-01-01T00:00:00Z,1\n2020-01-01T01:00:00Z,oops\n";
    }
    CHECK(pepf_main({"backtest", "-s", "seed=1", "-s", "data.source=csv", "-s",
                     "data.path=" + (dir / "bad.csv").string()}) == 3);
}

TEST_CASE("minimal backtest reports one scp row per learner and level pair") {
    const auto dir = scratch("scp");
    REQUIRE(pepf_main(concat({"backtest"}, concat(small_backtest(dir), {"-s", "methods=scp", "-s", "learners=lear,knn"}))) == 0);
    const auto lines = data_lines(dir / "report.csv");
    REQUIRE(lines.size() == 1 + 2 * 4);
    CHECK(lines[0] == "method,learner,level_pair,aps,mean_width,coverage,winkler,n");
    std::set<std::string> learners;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto f = split(lines[i], ',');
        CHECK(f[0] == "scp");
        learners.insert(f[1]);
    }
    CHECK(learners == std::set<std::string>{"lear", "knn"});
    for (const auto* name : {"report.csv", "report.json", "truth.csv", "forecast_scp_lear.csv", "forecast_scp_knn.csv"})
        CHECK(slurp(dir / name).find("config_hash") != std::string::npos);
}

TEST_CASE("missing method dependencies are rejected before any compute") {
    const auto dir = scratch("deps");
    const auto args = concat(small_backtest(dir), {"-s", "methods=qr,enbpi,q_ens"});
    CHECK(pepf_main(concat({"backtest"}, args)) == 2);
    CHECK_FALSE(fs::exists(dir / "report.csv"));

    cli::Config config;
    config.set("seed", "1");
    config.set("methods", "qr,enbpi,q_ens");
    try {
        cli::backtest_config(config);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("spci") != std::string::npos);
    }
}

TEST_CASE("backtest reruns and evaluation reproduce the report byte for byte") {
    const auto a = scratch("rerun_a");
    const auto b = scratch("rerun_b");
    const auto e = scratch("rerun_eval");
    const std::vector<std::string> extra{"-s", "methods=qr,scp,enbpi,spci,q_ens", "-s", "conformal.B=5"};
    REQUIRE(pepf_main(concat({"backtest"}, concat(small_backtest(a), extra))) == 0);
    REQUIRE(pepf_main(concat({"backtest"}, concat(small_backtest(b), concat(extra, {"-s", "threads=3"})))) == 0);
    CHECK(slurp(a / "report.csv") == slurp(b / "report.csv"));
    CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
    CHECK(slurp(a / "forecast_q_ens_lear.csv") == slurp(b / "forecast_q_ens_lear.csv"));

    REQUIRE(pepf_main(concat({"evaluate"}, concat(small_backtest(e), concat(extra, {"-s", "forecasts=" + a.string()})))) == 0);
    CHECK(slurp(e / "report.csv") == slurp(a / "report.csv"));
    CHECK(slurp(e / "report.json") == slurp(a / "report.json"));
}

TEST_CASE("flat prices never trade") {
    const auto dir = scratch("flat");
    const std::vector<std::string> args{"-s", "seed=2", "-s", "synth.n=480", "-s", "synth.ar=",
                                        "-s", "synth.noise_scale=0", "-s", "synth.daily_amplitude=0",
                                        "-s", "synth.weekly_amplitude=0", "-s", "backtest.train_len=240",
                                        "-s", "lags.target=24,48", "-s", "methods=qr,scp",
                                        "-s", "output=" + dir.string()};
    REQUIRE(pepf_main(concat({"backtest"}, args)) == 0);
    REQUIRE(pepf_main(concat({"trade"}, args)) == 0);
    const auto profits = summary_profits(dir / "trade_summary.csv");
    CHECK(profits.size() == 4);
    for (const auto& [key, profit] : profits) {
        INFO(key);
        CHECK(profit == 0.0);
    }
}

TEST_CASE("perfect foresight on a two-period series") {
    const auto dir = scratch("foresight");
    const std::vector<Timestamp> times{Timestamp{std::chrono::seconds{1577836800}},
                                       Timestamp{std::chrono::seconds{1577840400}}};
    const std::vector<double> prices{10, 50};
    const quantile::QuantileGrid grid;
    quantile::QuantileForecast forecast(grid, 2);
    for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t j = 0; j < grid.size(); ++j) forecast.at(t, j) = prices[t];
    io::atomic_write(dir / "truth.csv", [&](std::ostream& os) { io::write_series_csv(os, times, prices); });
    io::atomic_write(dir / "forecast_qr_linear.csv",
                     [&](std::ostream& os) { io::write_forecast_csv(os, times, forecast); });

    REQUIRE(pepf_main({"trade", "-s", "seed=1", "-s", "methods=qr", "-s", "trade.horizon=2", "-s",
                       "output=" + dir.string()}) == 0);
    const auto profits = summary_profits(dir / "trade_summary.csv");
    const double expected = 0.8 * 50 - 10 / 0.98;
    CHECK(profits.at("qr/linear/ts2") == doctest::Approx(expected).epsilon(1e-12));
    CHECK(profits.at("qr/linear/ts1") == doctest::Approx(expected).epsilon(1e-12));

    const auto ledger = data_lines(dir / "ledger_qr_linear_ts2.csv");
    REQUIRE(ledger.size() == 3);
    CHECK(ledger[0] == "window_start,period,side,grid_energy_mwh,price,cash,soc_after");
    CHECK(ledger[1].find(",buy,") != std::string::npos);
    CHECK(ledger[2].find(",sell,") != std::string::npos);
}

TEST_CASE("trade summary covers every method and strategy") {
    const auto dir = scratch("summary");
    const auto args = concat(small_backtest(dir), {"-s", "methods=qr,scp,enbpi", "-s", "conformal.B=5"});
    REQUIRE(pepf_main(concat({"backtest"}, args)) == 0);
    REQUIRE(pepf_main(concat({"trade"}, args)) == 0);
    CHECK(data_lines(dir / "trade_summary.csv").size() == 1 + 3 * 2);
    CHECK(first_line(dir / "trade_summary.csv").rfind("# config_hash=", 0) == 0);

    REQUIRE(pepf_main(concat({"trade"}, concat(args, {"-s", "trade.strategies=ts2", "-s", "trade.execution=receding"}))) == 0);
    CHECK(data_lines(dir / "trade_summary.csv").size() == 1 + 3);
}

TEST_CASE("missing forecast files name the path") {
    const auto dir = scratch("missing");
    const auto args = concat(small_backtest(dir), {"-s", "methods=scp"});
    REQUIRE(pepf_main(concat({"backtest"}, args)) == 0);
    CHECK(pepf_main(concat({"trade"}, concat(args, {"-s", "trade.methods=enbpi"}))) == 3);

    cli::Config config;
    config.set("seed", "1");
    config.set("trade.methods", "enbpi");
    config.set("output", dir.string());
    try {
        cli::cmd_trade(config);
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find((dir / "forecast_enbpi_lear.csv").string()) != std::string::npos);
    }
}
