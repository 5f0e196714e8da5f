#pragma once

#include "pepf/interval.hpp"
#include "pepf/quantile.hpp"
#include "pepf/time.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pepf::metrics {

/// Mean pinball loss over every step and grid level.
double aps(const quantile::QuantileForecast& forecast, std::span<const double> truths);

/// Fraction of truths inside their closed interval. Requires at least one step.
double coverage(std::span<const PredictionInterval> intervals, std::span<const double> truths);

/// Interval score: width, plus (2/τ) times the miss distance outside the interval.
double winkler(const PredictionInterval& interval, double y, double tau);
/// τ defaults to the nominal miscoverage 2α of the interval.
double winkler(const PredictionInterval& interval, double y);

double mean_width(std::span<const PredictionInterval> intervals);
double mean_winkler(std::span<const PredictionInterval> intervals, std::span<const double> truths);

/// The (α, 1-α) interval of every step.
std::vector<PredictionInterval> intervals_at(const quantile::QuantileForecast& forecast, double alpha);

/// "0.1-0.9"
std::string level_pair_label(double alpha);

/// One forecast series to score against the shared truths.
struct RunOutput {
    std::string method;
    std::string learner;
    quantile::QuantileForecast forecast;
    std::vector<Timestamp> timestamps;  ///< optional; checked against the truths when both exist
};

struct ReportRow {
    std::string method;
    std::string learner;
    std::string level_pair;
    double alpha = 0.0;
    double aps = 0.0;
    double mean_width = 0.0;
    double coverage = 0.0;
    double winkler = 0.0;
    std::size_t n = 0;
    bool best = false;   ///< lowest Winkler among methods for this learner and level pair
    bool worst = false;  ///< highest Winkler among methods for this learner and level pair
};

struct EvalReport {
    std::vector<ReportRow> rows;

    const ReportRow* find(const std::string& method, const std::string& learner,
                          const std::string& level_pair) const;
};

/// One row per run and interval level pair, in run order then ascending α.
EvalReport build_report(std::span<const RunOutput> runs, std::span<const double> truths,
                        std::span<const Timestamp> truth_times = {});

/// Writes "method,learner,level_pair,aps,mean_width,coverage,winkler,n".
/// A non-empty `header_comment` is written first as a '#' line.
void write_report_csv(std::ostream& out, const EvalReport& report,
                      const std::string& header_comment = {});
void write_report_json(std::ostream& out, const EvalReport& report,
                       const std::string& config_hash = {});

} // namespace pepf::metrics
