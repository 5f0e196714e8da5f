#include "pepf/backtest.hpp"

#include "pepf/combine.hpp"
#include "pepf/error.hpp"
#include "pepf/parallel.hpp"
#include "pepf/random.hpp"
#include "pepf/text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>

namespace pepf::backtest {

namespace {

constexpr std::array<Method, 7> kAllMethods{Method::qr,    Method::scp,    Method::enbpi, Method::spci,
                                            Method::qra_r, Method::qra_cp, Method::q_ens};

} // namespace

Method parse_method(std::string_view name) {
    for (const auto m : kAllMethods)
        if (to_string(m) == name) return m;
    throw ConfigError("unknown method '" + std::string(name) +
                      "' (expected qr, scp, enbpi, spci, qra_r, qra_cp or q_ens)");
}

std::string_view to_string(Method method) {
    switch (method) {
    case Method::qr: return "qr";
    case Method::scp: return "scp";
    case Method::enbpi: return "enbpi";
    case Method::spci: return "spci";
    case Method::qra_r: return "qra_r";
    case Method::qra_cp: return "qra_cp";
    case Method::q_ens: return "q_ens";
    }
    return "qr";
}

bool BacktestConfig::uses(Method method) const {
    return std::find(methods.begin(), methods.end(), method) != methods.end();
}

void BacktestConfig::validate() const {
    if (methods.empty()) throw ConfigError("no methods selected");
    const auto require = [&](Method method, Method dependency) {
        if (uses(method) && !uses(dependency))
            throw ConfigError("method " + std::string(to_string(method)) + " requires " +
                              std::string(to_string(dependency)) + ", which is not in the method list");
    };
    for (const auto dep : {Method::qr, Method::enbpi, Method::spci}) require(Method::q_ens, dep);
    for (const auto dep : {Method::scp, Method::enbpi, Method::spci}) require(Method::qra_cp, dep);

    const bool needs_learner = std::any_of(methods.begin(), methods.end(), [](Method m) { return m != Method::qr; });
    if (needs_learner && learners.empty()) throw ConfigError("no learners selected");

    if (train_len == 0 || horizon == 0) throw ConfigError("train_len and horizon must be >= 1");
    if (step != horizon) throw ConfigError("step must equal horizon so test windows tile");
    lags.validate();
    if (lags.horizon != static_cast<int>(horizon))
        throw ConfigError("lag horizon " + std::to_string(lags.horizon) + " differs from backtest horizon " +
                          std::to_string(horizon));
    const int min_lag = lags.lead + static_cast<int>(horizon) - 1;
    for (const int lag : lags.target_lags)
        if (lag < min_lag)
            throw ConfigError("target lag " + std::to_string(lag) + " would read values unknown at issue time; "
                              "lags must be >= lead + horizon - 1 = " + std::to_string(min_lag));
    for (const auto& [name, list] : lags.covariate_lags)
        for (const int lag : list)
            if (lag > 0 && lag < min_lag)
                throw ConfigError("covariate " + name + " lag " + std::to_string(lag) +
                                  " would read values unknown at issue time; positive lags must be >= " +
                                  std::to_string(min_lag));
    if (static_cast<std::size_t>(lags.lead - 1) >= train_len)
        throw ConfigError("train_len must exceed lead - 1");

    if (!grid.contains(0.5)) throw ConfigError("quantile grid must contain 0.5");
    for (const double level : grid.levels())
        if (!grid.contains(1.0 - level))
            throw ConfigError("quantile grid must be symmetric; " + format_double(1.0 - level) + " is missing");

    if (!(calib_fraction > 0.0 && calib_fraction < 1.0)) throw ConfigError("calib_fraction must lie in (0, 1)");
    if (uses(Method::qra_r)) {
        if (qra_r_windows.empty()) throw ConfigError("qra_r needs at least one training window");
        for (const double w : qra_r_windows)
            if (!(w > 0.0 && w <= 1.0)) throw ConfigError("qra_r window shares must lie in (0, 1]");
    }
    const std::size_t pool = std::max(uses(Method::qra_r) ? qra_r_windows.size() : 0,
                                      uses(Method::qra_cp) ? std::size_t{3} : 0);
    if (pool > 0 && qra_calib_len < pool + 2)
        throw ConfigError("qra_calib_len must be at least pool size + 2 = " + std::to_string(pool + 2));
}

namespace {

enum Stream : std::uint64_t { s_scp = 1, s_enbpi, s_spci, s_qra_r };

std::uint64_t task_seed(std::uint64_t seed, std::size_t split, std::size_t learner, Stream stream) {
    return derive_seed(derive_seed(seed, split), learner * 16 + stream);
}

struct LearnerOutput {
    std::map<Method, quantile::QuantileForecast> forecasts;
    std::vector<double> qra_r_members;   // steps × windows
    std::vector<double> qra_cp_members;  // steps × 3 (scp, enbpi, spci centers)
};

struct SplitOutput {
    std::optional<quantile::QuantileForecast> qr;
    std::vector<LearnerOutput> learners;
    std::vector<std::string> warnings;
};

void interleave(std::vector<double>& out, const std::vector<std::vector<double>>& columns) {
    const std::size_t steps = columns.front().size();
    out.resize(steps * columns.size());
    for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t m = 0; m < columns.size(); ++m) out[t * columns.size() + m] = columns[m][t];
}

SplitOutput run_split(const BacktestConfig& config, const dataset::DesignMatrix& design,
                      const dataset::Split& split, std::size_t index, bool warmup) {
    const std::size_t embargo = static_cast<std::size_t>(config.lags.lead - 1);
    const auto train = design.slice(split.train_begin, split.train_end - embargo);
    const auto test = design.slice(split.test_begin, split.test_end);
    const auto& grid = config.grid;
    const auto alphas = grid.interval_alphas();

    SplitOutput out;
    if (!warmup && config.uses(Method::qr)) {
        quantile::QuantileForecast forecast(grid, test.rows());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const auto model = quantile::fit_linear_qr(train, grid[j], config.qr);
            for (const auto& w : model.warnings) out.warnings.push_back("qr: " + w);
            const auto predicted = model.predict(test.features());
            for (std::size_t t = 0; t < test.rows(); ++t) forecast.at(t, j) = predicted[t];
        }
        out.qr = quantile::rearrange(std::move(forecast));
    }

    const bool needs_learner = std::any_of(config.methods.begin(), config.methods.end(),
                                           [](Method m) { return m != Method::qr; });
    if (!needs_learner) return out;

    const bool want_scp = config.uses(Method::scp);
    const bool want_enbpi = config.uses(Method::enbpi);
    const bool want_spci = config.uses(Method::spci);
    const bool want_cp = config.uses(Method::qra_cp);

    const std::size_t n_calib = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.calib_fraction * static_cast<double>(train.rows()))), 1,
        train.rows() - 1);
    const auto fit_part = train.slice(0, train.rows() - n_calib);
    const auto calib_part = train.slice(train.rows() - n_calib, train.rows());

    for (std::size_t l = 0; l < config.learners.size(); ++l) {
        const auto kind = config.learners[l];
        const auto fitter = conformal::make_fitter(kind, config.params);
        const std::string tag(learners::to_string(kind));
        LearnerOutput lo;
        std::vector<std::vector<double>> cp_columns;
        const auto note = [&](const char* method, const std::vector<std::string>& warnings) {
            for (const auto& w : warnings) out.warnings.push_back(std::string(method) + "/" + tag + ": " + w);
        };

        if (want_scp) {
            const auto seed = task_seed(config.seed, index, l, s_scp);
            if (warmup) {
                cp_columns.push_back(fitter(fit_part, seed)(test.features()));
            } else {
                auto run = conformal::scp_run(fitter, fit_part, calib_part, test, alphas, seed, config.scp);
                note("scp", run.warnings);
                lo.forecasts[Method::scp] = run.to_forecast(grid);
                cp_columns.push_back(run.centers);
            }
        }
        if (want_enbpi) {
            auto run = conformal::enbpi_run(fitter, train, test, alphas, config.enbpi,
                                            task_seed(config.seed, index, l, s_enbpi));
            if (!warmup) {
                note("enbpi", run.warnings);
                lo.forecasts[Method::enbpi] = run.to_forecast(grid);
            }
            cp_columns.push_back(run.centers);
        }
        if (want_spci) {
            const auto seed = task_seed(config.seed, index, l, s_spci);
            if (warmup) {
                cp_columns.push_back(fitter(train, seed)(test.features()));
            } else {
                auto run = conformal::spci_run(fitter, train, test, alphas, config.spci, seed);
                note("spci", run.warnings);
                lo.forecasts[Method::spci] = run.to_forecast(grid);
                cp_columns.push_back(run.centers);
            }
        }
        if (want_cp) interleave(lo.qra_cp_members, cp_columns);

        if (config.uses(Method::qra_r)) {
            std::vector<std::vector<double>> columns;
            for (std::size_t w = 0; w < config.qra_r_windows.size(); ++w) {
                const auto keep = std::max<std::size_t>(
                    1, static_cast<std::size_t>(
                           std::ceil(config.qra_r_windows[w] * static_cast<double>(train.rows()) - 1e-9)));
                const auto window = train.slice(train.rows() - std::min(keep, train.rows()), train.rows());
                columns.push_back(fitter(window, task_seed(config.seed, index, l, s_qra_r) + w)(test.features()));
            }
            interleave(lo.qra_r_members, columns);
        }
        out.learners.push_back(std::move(lo));
    }
    return out;
}

/// Pool for one split: the member forecasts of every earlier split as
/// calibration, the current split's member forecasts as evaluation rows.
combine::ForecastPool make_pool(const std::vector<SplitOutput>& outputs, const std::vector<dataset::Split>& splits,
                                const dataset::DesignMatrix& design, std::size_t current, std::size_t learner,
                                std::vector<std::string> labels, bool randomized) {
    combine::ForecastPool pool;
    pool.labels = std::move(labels);
    const auto members = [&](std::size_t s) -> const std::vector<double>& {
        const auto& lo = outputs[s].learners[learner];
        return randomized ? lo.qra_r_members : lo.qra_cp_members;
    };
    for (std::size_t s = 0; s < current; ++s) {
        const auto& m = members(s);
        pool.calib.insert(pool.calib.end(), m.begin(), m.end());
        for (std::size_t t = splits[s].test_begin; t < splits[s].test_end; ++t)
            pool.calib_truth.push_back(design.targets()[t]);
    }
    pool.eval = members(current);
    return pool;
}

} // namespace

BacktestResult run_backtest(const dataset::SeriesFrame& frame, const BacktestConfig& config) {
    config.validate();
    const auto design = dataset::build_features(frame, config.lags);
    const auto splits = dataset::rolling_splits(design.rows(), config.train_len, config.step, config.horizon);

    const bool qra = config.uses(Method::qra_r) || config.uses(Method::qra_cp);
    const std::size_t warmup =
        qra ? (config.qra_calib_len + config.horizon - 1) / config.horizon : std::size_t{0};
    if (splits.size() <= warmup)
        throw InsufficientHistoryError(std::to_string(design.rows()) + " feature rows give " +
                                       std::to_string(splits.size()) + " rolling origins; at least " +
                                       std::to_string(warmup + 1) + " are needed");

    std::vector<SplitOutput> outputs(splits.size());
    parallel_for(splits.size(), [&](std::size_t s) {
        outputs[s] = run_split(config, design, splits[s], s, s < warmup);
    });

    const std::size_t eval_count = splits.size() - warmup;
    const std::size_t n_learners = config.learners.size();
    // qra[kind][e][l]: kind 0 = qra_r, 1 = qra_cp
    std::vector<std::vector<combine::QraResult>> qra_results[2];
    for (auto& r : qra_results) r.assign(eval_count, std::vector<combine::QraResult>(n_learners));
    if (qra) {
        std::vector<std::string> r_labels, cp_labels;
        for (std::size_t w = 0; w < config.qra_r_windows.size(); ++w)
            r_labels.push_back("window_" + format_double(config.qra_r_windows[w]));
        for (const auto m : {Method::scp, Method::enbpi, Method::spci}) cp_labels.emplace_back(to_string(m));
        parallel_for(eval_count * n_learners, [&](std::size_t task) {
            const std::size_t e = task / n_learners;
            const std::size_t l = task % n_learners;
            const std::size_t s = warmup + e;
            if (config.uses(Method::qra_r))
                qra_results[0][e][l] = combine::qra_run(make_pool(outputs, splits, design, s, l, r_labels, true),
                                                        config.grid, config.qra_calib_len, config.qr);
            if (config.uses(Method::qra_cp))
                qra_results[1][e][l] = combine::qra_run(make_pool(outputs, splits, design, s, l, cp_labels, false),
                                                        config.grid, config.qra_calib_len, config.qr);
        });
    }

    BacktestResult result;
    result.splits = splits.size();
    result.warmup_splits = warmup;
    for (std::size_t s = warmup; s < splits.size(); ++s)
        for (std::size_t t = splits[s].test_begin; t < splits[s].test_end; ++t) {
            result.truths.push_back(design.targets()[t]);
            if (!design.target_times().empty()) result.times.push_back(design.target_times()[t]);
        }

    const auto assemble = [&](Method method, const std::string& learner, auto&& piece) {
        metrics::RunOutput run;
        run.method = std::string(to_string(method));
        run.learner = learner;
        run.forecast = quantile::QuantileForecast(config.grid, 0);
        for (std::size_t e = 0; e < eval_count; ++e) run.forecast.append(piece(e));
        run.timestamps = result.times;
        result.runs.push_back(std::move(run));
    };

    for (const auto method : kAllMethods) {
        if (!config.uses(method)) continue;
        if (method == Method::qr) {
            assemble(method, std::string(kLinearLabel), [&](std::size_t e) { return *outputs[warmup + e].qr; });
            continue;
        }
        for (std::size_t l = 0; l < n_learners; ++l) {
            const std::string label(learners::to_string(config.learners[l]));
            assemble(method, label, [&](std::size_t e) -> quantile::QuantileForecast {
                const auto& lo = outputs[warmup + e].learners[l];
                switch (method) {
                case Method::qra_r: return qra_results[0][e][l].forecast;
                case Method::qra_cp: return qra_results[1][e][l].forecast;
                case Method::q_ens:
                    return combine::q_ens(*outputs[warmup + e].qr, lo.forecasts.at(Method::enbpi),
                                          lo.forecasts.at(Method::spci));
                default: return lo.forecasts.at(method);
                }
            });
        }
    }

    std::set<std::string> seen;
    const auto add_warning = [&](const std::string& w) {
        if (seen.insert(w).second) result.warnings.push_back(w);
    };
    for (const auto& o : outputs)
        for (const auto& w : o.warnings) add_warning(w);
    for (const auto& kind : qra_results)
        for (const auto& row : kind)
            for (const auto& r : row)
                for (const auto& w : r.warnings) add_warning("qra: " + w);
    return result;
}

} // namespace pepf::backtest
