#include "commands.hpp"

#include <pepf/error.hpp>
#include <pepf/io.hpp>
#include <pepf/metrics.hpp>
#include <pepf/parallel.hpp>
#include <pepf/text.hpp>
#include <pepf/time.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <ostream>

namespace pepf::cli {

namespace fs = std::filesystem;

namespace {

std::string hash_comment(const Config& config) { return "config_hash=" + config.hash(); }

struct MarketDefaults {
    std::size_t horizon;
    int lead;
    long period_minutes;
    const char* target_lags;
};

MarketDefaults defaults_for(Market market) {
    if (market == Market::bm) return {16, 2, 30, "17,18,48,336"};
    return {24, 1, 60, "24,25,48,168"};
}

Market market_of(const Config& config) { return parse_market(config.get_string("backtest.market", "dam")); }

conformal::EnbpiAggregation parse_aggregation(const std::string& name) {
    if (name == "mean") return conformal::EnbpiAggregation::member_mean;
    if (name == "oob") return conformal::EnbpiAggregation::oob;
    throw ConfigError("unknown EnbPI aggregation '" + name + "' (expected mean or oob)");
}

conformal::SpciMode parse_spci_mode(const std::string& name) {
    if (name == "signed") return conformal::SpciMode::signed_residuals;
    if (name == "symmetric") return conformal::SpciMode::symmetric;
    throw ConfigError("unknown SPCI mode '" + name + "' (expected signed or symmetric)");
}

trading::Ts2Pricing parse_pricing(const std::string& name) {
    if (name == "median") return trading::Ts2Pricing::median;
    if (name == "quantile") return trading::Ts2Pricing::quantile;
    throw ConfigError("unknown TS2 pricing '" + name + "' (expected median or quantile)");
}

std::chrono::seconds period_of(const Config& config, const char* key, long fallback_minutes) {
    const long minutes = config.get_long(key, fallback_minutes);
    if (minutes <= 0) throw ConfigError(std::string("config key '") + key + "' must be positive");
    return std::chrono::seconds{minutes * 60};
}

std::string learner_label(backtest::Method method, learners::Kind kind) {
    if (method == backtest::Method::qr) return std::string(backtest::kLinearLabel);
    return std::string(learners::to_string(kind));
}

void write_text(const fs::path& path, const std::function<void(std::ostream&)>& write) {
    io::atomic_write(path, write);
    spdlog::info("wrote {}", path.string());
}

io::TimedSeries load_truth(const fs::path& dir) {
    const auto path = dir / "truth.csv";
    if (!fs::exists(path)) throw DataError("missing truth file " + path.string());
    return io::load_series_csv(path);
}

io::TimedForecast load_forecast(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("missing forecast file " + path.string());
    return io::load_forecast_csv(path);
}

} // namespace

Market parse_market(std::string_view name) {
    if (name == "dam") return Market::dam;
    if (name == "bm") return Market::bm;
    throw ConfigError("unknown market '" + std::string(name) + "' (expected dam or bm)");
}

std::string_view to_string(Market market) { return market == Market::bm ? "bm" : "dam"; }

dataset::SynthParams synth_params(const Config& config) {
    dataset::SynthParams p;
    const auto market = defaults_for(market_of(config));
    p.n = config.get_size("synth.n", p.n);
    p.ar = config.get_doubles("synth.ar", {0.6, 0.2});
    p.level = config.get_double("synth.level", p.level);
    p.daily_period = config.get_size("synth.daily_period", p.daily_period);
    p.weekly_period = config.get_size("synth.weekly_period", p.weekly_period);
    p.daily_amplitude = config.get_double("synth.daily_amplitude", 10.0);
    p.weekly_amplitude = config.get_double("synth.weekly_amplitude", 5.0);
    p.noise_scale = config.get_double("synth.noise_scale", 5.0);
    p.spike_probability = config.get_double("synth.spike_probability", 0.0);
    p.spike_scale = config.get_double("synth.spike_scale", 0.0);
    p.period = period_of(config, "synth.period_minutes", market.period_minutes);
    if (config.has("synth.start")) {
        const auto start = parse_iso8601(config.get_string("synth.start", ""));
        if (!start) throw ConfigError("config key 'synth.start' is not an ISO 8601 UTC timestamp");
        p.start = *start;
    }
    p.target_name = config.get_string("synth.target_name", p.target_name);
    return p;
}

dataset::SeriesFrame load_frame(const Config& config) {
    const auto source = config.get_string("data.source", "synth");
    if (source == "synth") return dataset::synth_series(synth_params(config), config.require_u64("seed"));
    if (source != "csv") throw ConfigError("unknown data.source '" + source + "' (expected synth or csv)");

    dataset::CsvSchema schema;
    schema.timestamp_column = config.get_string("data.timestamp_column", schema.timestamp_column);
    schema.target_column = config.get_string("data.target_column", schema.target_column);
    schema.covariate_columns = config.get_list("data.covariates", {});
    const auto missing = config.get_string("data.missing", "reject");
    if (missing == "reject") schema.missing = dataset::MissingPolicy::reject;
    else if (missing == "forward_fill") schema.missing = dataset::MissingPolicy::forward_fill;
    else throw ConfigError("unknown data.missing '" + missing + "' (expected reject or forward_fill)");
    if (config.has("data.period_minutes")) schema.period = period_of(config, "data.period_minutes", 60);

    const fs::path path = config.require_string("data.path");
    if (!fs::exists(path)) throw DataError("missing data file " + path.string());
    return dataset::load_csv(path, schema);
}

backtest::BacktestConfig backtest_config(const Config& config) {
    backtest::BacktestConfig bc;
    const auto market = defaults_for(market_of(config));

    bc.seed = config.require_u64("seed");
    bc.horizon = config.get_size("backtest.horizon", market.horizon);
    bc.step = config.get_size("backtest.step", bc.horizon);
    bc.train_len = config.get_size("backtest.train_len", bc.train_len);

    bc.lags.horizon = static_cast<int>(bc.horizon);
    bc.lags.lead = static_cast<int>(config.get_long("lags.lead", market.lead));
    bc.lags.target_lags = config.get_ints("lags.target", {});
    if (!config.has("lags.target")) {
        for (const auto& item : split(market.target_lags, ','))
            bc.lags.target_lags.push_back(std::stoi(item));
    }
    for (const auto& name : config.suffixes("lags.cov."))
        bc.lags.covariate_lags[name] = config.get_ints("lags.cov." + name, {});

    bc.methods.clear();
    for (const auto& name : config.get_list("methods", {"scp"})) bc.methods.push_back(backtest::parse_method(name));
    bc.learners.clear();
    for (const auto& name : config.get_list("learners", {"lear"})) bc.learners.push_back(learners::parse_kind(name));

    auto& lp = bc.params;
    lp.knn.k = config.get_size("learner.knn.k", lp.knn.k);
    if (const auto lambda = config.get_optional_double("learner.lear.lambda")) lp.lear.lambda = *lambda;
    lp.lear.grid_factors = config.get_doubles("learner.lear.grid", lp.lear.grid_factors);
    lp.lear.validation_fraction = config.get_double("learner.lear.validation_fraction", lp.lear.validation_fraction);
    lp.forest.trees = config.get_size("learner.forest.trees", 50);
    lp.forest.max_depth = config.get_size("learner.forest.max_depth", lp.forest.max_depth);
    lp.forest.min_leaf = config.get_size("learner.forest.min_leaf", lp.forest.min_leaf);
    lp.forest.features_per_split = config.get_size("learner.forest.features_per_split", lp.forest.features_per_split);
    lp.boost.trees = config.get_size("learner.boost.trees", 100);
    lp.boost.learning_rate = config.get_double("learner.boost.learning_rate", lp.boost.learning_rate);
    lp.boost.max_depth = config.get_size("learner.boost.max_depth", lp.boost.max_depth);
    lp.boost.min_leaf = config.get_size("learner.boost.min_leaf", lp.boost.min_leaf);

    if (config.has("quantile.grid")) bc.grid = quantile::QuantileGrid(config.get_doubles("quantile.grid", {}));
    const auto convention = quantile::parse_convention(config.get_string("quantile.convention", "conformal"));
    bc.scp.convention = convention;
    bc.enbpi.convention = convention;
    bc.spci.convention = convention;

    bc.calib_fraction = config.get_double("conformal.calib_fraction", bc.calib_fraction);
    bc.enbpi.bootstrap_count = config.get_size("conformal.B", bc.enbpi.bootstrap_count);
    bc.enbpi.aggregation = parse_aggregation(config.get_string("conformal.aggregation", "mean"));
    bc.spci.window = config.get_size("conformal.window", bc.spci.window);
    bc.spci.residual_lags = config.get_size("conformal.resid_lags", bc.spci.residual_lags);
    bc.spci.mode = parse_spci_mode(config.get_string("conformal.spci_mode", "signed"));
    bc.spci.refit_every = config.get_size("conformal.refit_every", 6);
    bc.spci.qrf.trees = config.get_size("conformal.qrf_trees", bc.spci.qrf.trees);
    bc.spci.qrf.max_depth = config.get_size("conformal.qrf_max_depth", bc.spci.qrf.max_depth);
    bc.spci.qrf.min_leaf = config.get_size("conformal.qrf_min_leaf", bc.spci.qrf.min_leaf);
    bc.spci.qrf.subsample = config.get_double("conformal.qrf_subsample", bc.spci.qrf.subsample);

    bc.qra_calib_len = config.get_size("qra.calib_len", bc.qra_calib_len);
    bc.qra_r_windows = config.get_doubles("qra.windows", bc.qra_r_windows);

    bc.validate();
    return bc;
}

trading::BatteryConfig battery_config(const Config& config) {
    trading::BatteryConfig b;
    b.capacity = config.get_double("battery.capacity", b.capacity);
    b.max_charge = config.get_double("battery.max_charge", b.max_charge);
    b.max_discharge = config.get_double("battery.max_discharge", b.max_discharge);
    b.eta_c = config.get_double("battery.eta_c", b.eta_c);
    b.eta_d = config.get_double("battery.eta_d", b.eta_d);
    b.min_soc = config.get_double("battery.min_soc", b.min_soc);
    b.initial_soc = config.get_double("battery.initial_soc", b.min_soc);
    b.validate();
    return b;
}

fs::path output_dir(const Config& config) { return config.get_string("output", "out"); }

fs::path forecasts_dir(const Config& config) {
    return config.has("forecasts") ? fs::path(config.get_string("forecasts", "")) : output_dir(config);
}

fs::path forecast_path(const fs::path& dir, std::string_view method, std::string_view learner) {
    return dir / ("forecast_" + std::string(method) + "_" + std::string(learner) + ".csv");
}

std::vector<std::pair<std::string, std::string>> configured_runs(const backtest::BacktestConfig& config) {
    std::vector<std::pair<std::string, std::string>> out;
    for (int m = 0; m <= static_cast<int>(backtest::Method::q_ens); ++m) {
        const auto method = static_cast<backtest::Method>(m);
        if (!config.uses(method)) continue;
        if (method == backtest::Method::qr) {
            out.emplace_back(backtest::to_string(method), backtest::kLinearLabel);
            continue;
        }
        for (const auto kind : config.learners) out.emplace_back(backtest::to_string(method), learner_label(method, kind));
    }
    return out;
}

void cmd_synth(const Config& config, const std::optional<fs::path>& out) {
    const auto frame = dataset::synth_series(synth_params(config), config.require_u64("seed"));
    const auto path = out ? *out : output_dir(config) / "synth.csv";
    const auto comment = hash_comment(config);
    write_text(path, [&](std::ostream& os) {
        os << "# " << comment << '\n';
        dataset::write_csv(os, frame);
    });
}

void cmd_backtest(const Config& config) {
    const auto bc = backtest_config(config);
    const auto frame = load_frame(config);
    spdlog::info("backtest over {} rows, {} methods, {} learners", frame.size(), bc.methods.size(), bc.learners.size());
    const auto result = backtest::run_backtest(frame, bc);
    for (const auto& w : result.warnings) spdlog::warn("{}", w);
    spdlog::info("{} rolling origins, {} used for QRA warm-up", result.splits, result.warmup_splits);

    const auto dir = output_dir(config);
    const auto comment = hash_comment(config);
    for (const auto& run : result.runs) {
        write_text(forecast_path(dir, run.method, run.learner), [&](std::ostream& os) {
            io::write_forecast_csv(os, result.times, run.forecast, comment);
        });
    }
    write_text(dir / "truth.csv", [&](std::ostream& os) {
        io::write_series_csv(os, result.times, result.truths, comment);
    });
    const auto report = metrics::build_report(result.runs, result.truths, result.times);
    write_text(dir / "report.csv", [&](std::ostream& os) { metrics::write_report_csv(os, report, comment); });
    write_text(dir / "report.json", [&](std::ostream& os) { metrics::write_report_json(os, report, config.hash()); });
}

void cmd_evaluate(const Config& config) {
    const auto bc = backtest_config(config);
    const auto dir = forecasts_dir(config);
    const auto truth = load_truth(dir);

    std::vector<metrics::RunOutput> runs;
    for (const auto& [method, learner] : configured_runs(bc)) {
        auto loaded = load_forecast(forecast_path(dir, method, learner));
        runs.push_back({method, learner, std::move(loaded.forecast), std::move(loaded.times)});
    }
    const auto report = metrics::build_report(runs, truth.values, truth.times);
    const auto out = output_dir(config);
    const auto comment = hash_comment(config);
    write_text(out / "report.csv", [&](std::ostream& os) { metrics::write_report_csv(os, report, comment); });
    write_text(out / "report.json", [&](std::ostream& os) { metrics::write_report_json(os, report, config.hash()); });
}

void cmd_trade(const Config& config) {
    const auto market = market_of(config);
    const auto battery = battery_config(config);

    std::vector<backtest::Method> methods;
    for (const auto& name : config.get_list("trade.methods", config.get_list("methods", {"scp"})))
        methods.push_back(backtest::parse_method(name));
    if (methods.empty()) throw ConfigError("trade.methods is empty");
    std::vector<trading::Strategy> strategies;
    for (const auto& name : config.get_list("trade.strategies", {"ts1", "ts2"}))
        strategies.push_back(trading::parse_strategy(name));
    if (strategies.empty()) throw ConfigError("trade.strategies is empty");
    const auto learners = config.get_list("learners", {"lear"});
    const auto learner = learners::parse_kind(config.get_string("trade.learner", learners.empty() ? "lear" : learners.front()));

    trading::StrategyConfig sc;
    sc.horizon = config.get_size("trade.horizon", config.get_size("backtest.horizon", defaults_for(market).horizon));
    sc.execution = trading::parse_execution(config.get_string("trade.execution", "commit"));
    sc.ts1.filter = config.get_bool("trade.filter", sc.ts1.filter);
    sc.ts1.act_level = config.get_double("trade.act_level", sc.ts1.act_level);
    sc.ts2.soc_steps = config.get_size("trade.soc_steps", sc.ts2.soc_steps);
    sc.ts2.pricing = parse_pricing(config.get_string("trade.pricing", "median"));
    sc.ts2.risk_level = config.get_double("trade.risk_level", sc.ts2.risk_level);

    const auto dir = forecasts_dir(config);
    const auto out = output_dir(config);
    const auto comment = hash_comment(config);
    const auto truth = load_truth(dir);

    struct SummaryRow {
        std::string method, learner, strategy;
        std::size_t trades;
        double profit;
    };
    std::vector<SummaryRow> summary;
    for (const auto method : methods) {
        const auto label = learner_label(method, learner);
        const auto path = forecast_path(dir, backtest::to_string(method), label);
        const auto loaded = load_forecast(path);
        if (loaded.times != truth.times)
            throw ShapeError("timestamps of " + path.string() + " do not match truth.csv");
        for (const auto strategy : strategies) {
            sc.strategy = strategy;
            const auto ledger = trading::simulate(loaded.forecast, truth.values, battery, sc);
            const auto name = std::string(backtest::to_string(method)) + "_" + label + "_" +
                              std::string(trading::to_string(strategy));
            write_text(out / ("ledger_" + name + ".csv"), [&](std::ostream& os) {
                os << "# " << comment << '\n';
                os << "window_start,period,side,grid_energy_mwh,price,cash,soc_after\n";
                for (const auto& r : ledger.records) {
                    os << format_iso8601(truth.times[r.window_start]) << ',' << format_iso8601(truth.times[r.period])
                       << ',' << trading::to_string(r.side) << ',' << format_double(r.grid_energy) << ','
                       << format_double(r.price) << ',' << format_double(r.cash) << ','
                       << format_double(r.soc_after) << '\n';
                }
            });
            summary.push_back({std::string(backtest::to_string(method)), label,
                               std::string(trading::to_string(strategy)), ledger.records.size(), ledger.profit});
            spdlog::info("{} {} {}: profit {}", summary.back().method, label, summary.back().strategy,
                         format_double(ledger.profit));
        }
    }
    write_text(out / "trade_summary.csv", [&](std::ostream& os) {
        os << "# " << comment << '\n';
        os << "method,learner,strategy,market,execution,trades,profit\n";
        for (const auto& row : summary) {
            os << row.method << ',' << row.learner << ',' << row.strategy << ',' << to_string(market) << ','
               << trading::to_string(sc.execution) << ',' << row.trades << ',' << format_double(row.profit) << '\n';
        }
    });
}

namespace {

void configure_logging() {
    static const bool once = [] {
        auto logger = spdlog::stderr_color_st("pepf");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%l] %v");
        return true;
    }();
    (void)once;
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("PEPF_LOG")) {
        level = spdlog::level::from_str(env);
        if (level == spdlog::level::off && std::string_view(env) != "off") level = spdlog::level::warn;
    }
    spdlog::set_level(level);
}

int exit_code(Error::Category category) {
    switch (category) {
        case Error::Category::config: return 2;
        case Error::Category::data: return 3;
        case Error::Category::invariant: return 4;
    }
    return 4;
}

} // namespace

int run(int argc, const char* const* argv) {
    configure_logging();

    CLI::App app{"Probabilistic electricity price forecasting and battery trading"};
    app.require_subcommand(1);
    app.fallthrough();
    fs::path config_path;
    std::vector<std::string> overrides;
    app.add_option("-c,--config", config_path, "key = value config file");
    app.add_option("-s,--set", overrides, "override one key (key=value), repeatable")->allow_extra_args(false);

    auto* synth = app.add_subcommand("synth", "write a synthetic price series");
    std::string synth_out;
    synth->add_option("-o,--out", synth_out, "output CSV (default <output>/synth.csv)");
    auto* backtest = app.add_subcommand("backtest", "rolling-origin forecasts and evaluation report");
    auto* trade = app.add_subcommand("trade", "battery trading on persisted forecasts");
    auto* evaluate = app.add_subcommand("evaluate", "recompute the report from persisted forecasts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Config config = config_path.empty() ? Config{} : Config::load(config_path);
        for (const auto& o : overrides) config.apply_override(o);
        config.require_u64("seed");
        set_max_threads(static_cast<unsigned>(config.get_size("threads", 0)));
        spdlog::debug("config hash {}", config.hash());

        if (synth->parsed()) cmd_synth(config, synth_out.empty() ? std::nullopt : std::optional<fs::path>(synth_out));
        else if (backtest->parsed()) cmd_backtest(config);
        else if (trade->parsed()) cmd_trade(config);
        else if (evaluate->parsed()) cmd_evaluate(config);
        return 0;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code(e.category());
    } catch (const fs::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return 3;
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return 4;
    }
}

} // namespace pepf::cli
