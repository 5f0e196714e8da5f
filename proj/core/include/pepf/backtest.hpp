#pragma once

#include "pepf/conformal.hpp"
#include "pepf/dataset.hpp"
#include "pepf/learners.hpp"
#include "pepf/metrics.hpp"
#include "pepf/quantile.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pepf::backtest {

enum class Method { qr, scp, enbpi, spci, qra_r, qra_cp, q_ens };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);

/// Learner label used for the linear quantile regression runs.
inline constexpr std::string_view kLinearLabel = "linear";

struct BacktestConfig {
    dataset::LagSpec lags;
    std::vector<learners::Kind> learners{learners::Kind::lear};
    learners::LearnerParams params;
    std::vector<Method> methods{Method::scp};
    quantile::QuantileGrid grid;

    std::size_t train_len = 24 * 28;
    std::size_t step = 24;
    std::size_t horizon = 24;

    /// Share of the training window held out for split conformal calibration.
    double calib_fraction = 0.25;
    conformal::ScpOptions scp;
    conformal::EnbpiOptions enbpi;
    conformal::SpciOptions spci;

    /// Out-of-sample steps used to fit QRA; the evaluation region starts
    /// once this much history has accumulated.
    std::size_t qra_calib_len = 24 * 28;
    /// Training-window shares of the QRA-R members, most recent rows kept.
    std::vector<double> qra_r_windows{1.0, 0.5, 0.25};
    quantile::LinearQrOptions qr;

    std::uint64_t seed = 0;

    bool uses(Method method) const;
    /// Throws ConfigError naming the first missing dependency or invalid value.
    void validate() const;
};

struct BacktestResult {
    std::vector<Timestamp> times;   ///< evaluation region
    std::vector<double> truths;
    std::vector<metrics::RunOutput> runs;
    std::vector<std::string> warnings;
    std::size_t splits = 0;         ///< rolling origins in total
    std::size_t warmup_splits = 0;  ///< origins spent accumulating QRA history
};

/// Rolling-origin evaluation of every configured method and learner. Runs
/// are ordered by method (declaration order of Method) then learner.
BacktestResult run_backtest(const dataset::SeriesFrame& frame, const BacktestConfig& config);

} // namespace pepf::backtest
