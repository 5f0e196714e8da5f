#include "pepf/metrics.hpp"

#include "pepf/error.hpp"
#include "pepf/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace pepf::metrics {

namespace {

void check_aligned(std::size_t steps, std::size_t truths) {
    if (steps != truths)
        throw ShapeError("forecast has " + std::to_string(steps) + " steps but " +
                         std::to_string(truths) + " truths were given");
}

} // namespace

double aps(const quantile::QuantileForecast& forecast, std::span<const double> truths) {
    check_aligned(forecast.steps(), truths.size());
    const auto& grid = forecast.grid();
    if (truths.empty() || grid.size() == 0) throw DataError("APS of an empty forecast");
    double total = 0.0;
    for (std::size_t t = 0; t < truths.size(); ++t) {
        double step = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j)
            step += quantile::pinball(forecast.at(t, j), truths[t], grid[j]);
        total += step / static_cast<double>(grid.size());
    }
    return total / static_cast<double>(truths.size());
}

double coverage(std::span<const PredictionInterval> intervals, std::span<const double> truths) {
    check_aligned(intervals.size(), truths.size());
    if (intervals.empty()) throw DataError("coverage of an empty interval series");
    std::size_t hits = 0;
    for (std::size_t t = 0; t < intervals.size(); ++t)
        if (intervals[t].contains(truths[t])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

double winkler(const PredictionInterval& interval, double y, double tau) {
    if (!(tau > 0.0)) throw ConfigError("Winkler penalty level must be positive");
    const double width = interval.width();
    if (y < interval.lower) return width + (2.0 / tau) * (interval.lower - y);
    if (y > interval.upper) return width + (2.0 / tau) * (y - interval.upper);
    return width;
}

double winkler(const PredictionInterval& interval, double y) {
    return winkler(interval, y, 2.0 * interval.alpha);
}

double mean_width(std::span<const PredictionInterval> intervals) {
    if (intervals.empty()) throw DataError("mean width of an empty interval series");
    double sum = 0.0;
    for (const auto& i : intervals) sum += i.width();
    return sum / static_cast<double>(intervals.size());
}

double mean_winkler(std::span<const PredictionInterval> intervals, std::span<const double> truths) {
    check_aligned(intervals.size(), truths.size());
    if (intervals.empty()) throw DataError("Winkler score of an empty interval series");
    double sum = 0.0;
    for (std::size_t t = 0; t < intervals.size(); ++t) sum += winkler(intervals[t], truths[t]);
    return sum / static_cast<double>(intervals.size());
}

std::vector<PredictionInterval> intervals_at(const quantile::QuantileForecast& forecast, double alpha) {
    const std::size_t lo = forecast.grid().index_of(alpha);
    const std::size_t hi = forecast.grid().index_of(1.0 - alpha);
    std::vector<PredictionInterval> out;
    out.reserve(forecast.steps());
    for (std::size_t t = 0; t < forecast.steps(); ++t)
        out.push_back({forecast.at(t, lo), forecast.at(t, hi), alpha});
    return out;
}

std::string level_pair_label(double alpha) {
    // Round to 12 digits so 1 - 0.1 prints as 0.9.
    const auto clean = [](double v) { return format_double(std::round(v * 1e12) / 1e12); };
    return clean(alpha) + "-" + clean(1.0 - alpha);
}

const ReportRow* EvalReport::find(const std::string& method, const std::string& learner,
                                  const std::string& level_pair) const {
    for (const auto& row : rows)
        if (row.method == method && row.learner == learner && row.level_pair == level_pair)
            return &row;
    return nullptr;
}

EvalReport build_report(std::span<const RunOutput> runs, std::span<const double> truths,
                        std::span<const Timestamp> truth_times) {
    EvalReport report;
    for (const auto& run : runs) {
        if (run.forecast.steps() != truths.size())
            throw ShapeError("run " + run.method + "/" + run.learner + " covers " +
                             std::to_string(run.forecast.steps()) +
                             " steps, evaluation region has " + std::to_string(truths.size()));
        if (!run.timestamps.empty() && !truth_times.empty() &&
            !std::equal(run.timestamps.begin(), run.timestamps.end(), truth_times.begin(),
                        truth_times.end()))
            throw ShapeError("run " + run.method + "/" + run.learner +
                             " is not aligned with the evaluation timestamps");
        const double score = aps(run.forecast, truths);
        for (const double alpha : run.forecast.grid().interval_alphas()) {
            const auto intervals = intervals_at(run.forecast, alpha);
            ReportRow row;
            row.method = run.method;
            row.learner = run.learner;
            row.level_pair = level_pair_label(alpha);
            row.alpha = alpha;
            row.aps = score;
            row.mean_width = mean_width(intervals);
            row.coverage = coverage(intervals, truths);
            row.winkler = mean_winkler(intervals, truths);
            row.n = truths.size();
            report.rows.push_back(std::move(row));
        }
    }

    std::map<std::pair<std::string, std::string>, std::vector<ReportRow*>> groups;
    for (auto& row : report.rows) groups[{row.learner, row.level_pair}].push_back(&row);
    for (auto& [key, rows] : groups) {
        if (rows.size() < 2) continue;
        const auto by_winkler = [](const ReportRow* a, const ReportRow* b) { return a->winkler < b->winkler; };
        (*std::min_element(rows.begin(), rows.end(), by_winkler))->best = true;
        (*std::max_element(rows.begin(), rows.end(), by_winkler))->worst = true;
    }
    return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report, const std::string& header_comment) {
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    out << "method,learner,level_pair,aps,mean_width,coverage,winkler,n\n";
    for (const auto& r : report.rows)
        out << r.method << ',' << r.learner << ',' << r.level_pair << ',' << format_double(r.aps) << ','
            << format_double(r.mean_width) << ',' << format_double(r.coverage) << ','
            << format_double(r.winkler) << ',' << r.n << '\n';
}

void write_report_json(std::ostream& out, const EvalReport& report, const std::string& config_hash) {
    nlohmann::ordered_json doc;
    doc["config_hash"] = config_hash;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : report.rows) {
        nlohmann::ordered_json row;
        row["method"] = r.method;
        row["learner"] = r.learner;
        row["level_pair"] = r.level_pair;
        row["aps"] = r.aps;
        row["mean_width"] = r.mean_width;
        row["coverage"] = r.coverage;
        row["winkler"] = r.winkler;
        row["n"] = r.n;
        row["best"] = r.best;
        row["worst"] = r.worst;
        doc["rows"].push_back(std::move(row));
    }
    out << doc.dump(2) << '\n';
}

} // namespace pepf::metrics
