#include "pepf/dataset.hpp"

#include "pepf/error.hpp"
#include "pepf/random.hpp"
#include "pepf/text.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace pepf::dataset {

// ---------------------------------------------------------------------------
// SeriesFrame

SeriesFrame::SeriesFrame(std::vector<Timestamp> timestamps, std::string target_name,
                         std::vector<double> target, std::vector<Column> covariates,
                         std::optional<std::chrono::seconds> period)
    : timestamps_(std::move(timestamps)), target_name_(std::move(target_name)),
      target_(std::move(target)), covariates_(std::move(covariates)) {
    if (target_.size() != timestamps_.size())
        throw ShapeError("target length " + std::to_string(target_.size()) +
                         " differs from timestamp count " + std::to_string(timestamps_.size()));
    std::set<std::string> names{target_name_};
    for (const auto& column : covariates_) {
        if (column.values.size() != timestamps_.size())
            throw ShapeError("covariate '" + column.name + "' has length " +
                             std::to_string(column.values.size()) + ", expected " +
                             std::to_string(timestamps_.size()));
        if (!names.insert(column.name).second)
            throw SchemaError("duplicate column '" + column.name + "'");
    }
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
        if (timestamps_[i] == timestamps_[i - 1])
            throw GridError("duplicate timestamp " + format_iso8601(timestamps_[i]));
        if (timestamps_[i] < timestamps_[i - 1])
            throw GridError("timestamps not increasing at " + format_iso8601(timestamps_[i]));
    }

    if (timestamps_.size() >= 2) period_ = timestamps_[1] - timestamps_[0];
    if (period) {
        if (period->count() <= 0) throw ConfigError("declared period must be positive");
        period_ = *period;
    }
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
        const auto gap = timestamps_[i] - timestamps_[i - 1];
        if (gap != period_)
            throw GridError("non-uniform spacing: gap of " + std::to_string(gap.count()) +
                            "s between " + format_iso8601(timestamps_[i - 1]) + " and " +
                            format_iso8601(timestamps_[i]) + " (expected " +
                            std::to_string(period_.count()) + "s)");
    }
}

const Column* SeriesFrame::covariate(const std::string& name) const {
    for (const auto& column : covariates_)
        if (column.name == name) return &column;
    return nullptr;
}

SeriesFrame SeriesFrame::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw ShapeError("slice out of range");
    const auto cut = [&](const auto& v) {
        using V = std::decay_t<decltype(v)>;
        return V(v.begin() + static_cast<std::ptrdiff_t>(begin),
                 v.begin() + static_cast<std::ptrdiff_t>(end));
    };
    std::vector<Column> covs;
    for (const auto& column : covariates_) covs.push_back({column.name, cut(column.values)});
    return SeriesFrame(cut(timestamps_), target_name_, cut(target_), std::move(covs), period_);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

bool is_missing_token(std::string_view field) {
    field = trim(field);
    return field.empty() || field == "NA" || field == "NaN" || field == "nan" || field == "null";
}

} // namespace

SeriesFrame read_csv(std::istream& in, const CsvSchema& schema) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        for (auto& name : split(text, ',')) header.emplace_back(trim(name));
        break;
    }
    if (header.empty()) throw SchemaError("missing header row");

    const auto find_column = [&](const std::string& name) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw SchemaError("missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t ts_col = find_column(schema.timestamp_column);
    const std::size_t target_col = find_column(schema.target_column);

    std::vector<std::string> cov_names = schema.covariate_columns;
    if (cov_names.empty()) {
        for (const auto& name : header)
            if (name != schema.timestamp_column && name != schema.target_column)
                cov_names.push_back(name);
    }
    std::vector<std::size_t> cov_cols;
    for (const auto& name : cov_names) cov_cols.push_back(find_column(name));

    struct Row {
        Timestamp ts;
        std::size_t line;
        std::vector<double> values; // target first, then covariates; NaN = missing
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto fields = split(text, ',');
        if (fields.size() != header.size())
            throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                          " fields, found " + std::to_string(fields.size()));
        Row row;
        row.line = line_no;
        const auto ts = parse_iso8601(fields[ts_col]);
        if (!ts) throw ParseError(line_no, "unparsable timestamp '" + fields[ts_col] + "'");
        row.ts = *ts;

        const auto read_value = [&](std::size_t col) {
            if (is_missing_token(fields[col])) {
                if (schema.missing == MissingPolicy::reject)
                    throw ParseError(line_no, "missing value in column '" + header[col] + "'");
                return std::numeric_limits<double>::quiet_NaN();
            }
            const auto value = parse_double(fields[col]);
            if (!value || !std::isfinite(*value))
                throw ParseError(line_no, "unparsable number '" + fields[col] + "' in column '" +
                                              header[col] + "'");
            return *value;
        };
        row.values.push_back(read_value(target_col));
        for (const auto col : cov_cols) row.values.push_back(read_value(col));
        rows.push_back(std::move(row));
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.ts < b.ts; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].ts == rows[i - 1].ts)
            throw GridError("duplicate timestamp " + format_iso8601(rows[i].ts) + " (line " +
                            std::to_string(rows[i].line) + ")");

    const std::size_t width = 1 + cov_cols.size();
    if (schema.missing == MissingPolicy::forward_fill) {
        for (std::size_t j = 0; j < width; ++j) {
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (!std::isnan(rows[i].values[j])) continue;
                if (i == 0)
                    throw ParseError(rows[i].line, "cannot forward-fill a missing value in the "
                                                   "first row");
                rows[i].values[j] = rows[i - 1].values[j];
            }
        }
    }

    std::vector<Timestamp> timestamps;
    std::vector<double> target;
    std::vector<Column> covariates;
    for (const auto& name : cov_names) covariates.push_back({name, {}});
    for (const auto& row : rows) {
        timestamps.push_back(row.ts);
        target.push_back(row.values[0]);
        for (std::size_t j = 0; j < cov_cols.size(); ++j)
            covariates[j].values.push_back(row.values[j + 1]);
    }
    return SeriesFrame(std::move(timestamps), schema.target_column, std::move(target),
                       std::move(covariates), schema.period);
}

SeriesFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return read_csv(in, schema);
}

void write_csv(std::ostream& out, const SeriesFrame& frame) {
    out << "timestamp," << frame.target_name();
    for (const auto& column : frame.covariates()) out << ',' << column.name;
    out << '\n';
    for (std::size_t i = 0; i < frame.size(); ++i) {
        out << format_iso8601(frame.timestamps()[i]) << ',' << format_double(frame.target()[i]);
        for (const auto& column : frame.covariates()) out << ',' << format_double(column.values[i]);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Features

void LagSpec::validate() const {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (lead < 1) throw ConfigError("lead must be >= 1");
    const auto check_unique = [](const std::vector<int>& lags, const std::string& what) {
        std::set<int> seen;
        for (const int lag : lags)
            if (!seen.insert(lag).second)
                throw ConfigError("duplicate lag " + std::to_string(lag) + " for " + what);
    };
    check_unique(target_lags, "target");
    for (const int lag : target_lags)
        if (lag < lead)
            throw ConfigError("target lag " + std::to_string(lag) + " is below lead " +
                              std::to_string(lead) + " (target leakage)");
    for (const auto& [name, lags] : covariate_lags) check_unique(lags, "'" + name + "'");
}

int LagSpec::max_history() const {
    int history = 0;
    for (const int lag : target_lags) history = std::max(history, lag);
    for (const auto& [name, lags] : covariate_lags)
        for (const int lag : lags) history = std::max(history, lag);
    return history;
}

int LagSpec::max_future() const {
    int future = 0;
    for (const auto& [name, lags] : covariate_lags)
        for (const int lag : lags) future = std::max(future, -lag);
    return future;
}

FeatureRows::FeatureRows(std::span<const double> values, std::size_t cols)
    : values_(values), cols_(cols) {
    if (cols_ != 0 && values_.size() % cols_ != 0)
        throw ShapeError("feature storage is not a whole number of rows");
}

DesignMatrix::DesignMatrix(std::vector<double> values, std::size_t cols,
                           std::vector<double> targets, std::vector<std::string> feature_names,
                           std::vector<std::size_t> target_index,
                           std::vector<Timestamp> target_times)
    : values_(std::move(values)), cols_(cols), targets_(std::move(targets)),
      names_(std::move(feature_names)), target_index_(std::move(target_index)),
      target_times_(std::move(target_times)) {
    if (values_.size() != targets_.size() * cols_)
        throw ShapeError("design matrix holds " + std::to_string(values_.size()) +
                         " values for " + std::to_string(targets_.size()) + " rows of width " +
                         std::to_string(cols_));
    if (names_.empty())
        for (std::size_t j = 0; j < cols_; ++j) names_.push_back("x" + std::to_string(j));
    if (names_.size() != cols_) throw ShapeError("feature name count differs from width");
    if (!target_index_.empty() && target_index_.size() != targets_.size())
        throw ShapeError("target index length differs from row count");
    if (!target_times_.empty() && target_times_.size() != targets_.size())
        throw ShapeError("target time length differs from row count");
}

DesignMatrix DesignMatrix::from_rows(const std::vector<std::vector<double>>& rows,
                                     std::vector<double> targets) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * cols);
    for (const auto& row : rows) {
        if (row.size() != cols) throw ShapeError("ragged rows");
        values.insert(values.end(), row.begin(), row.end());
    }
    return DesignMatrix(std::move(values), cols, std::move(targets));
}

DesignMatrix DesignMatrix::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > rows()) throw ShapeError("row slice out of range");
    std::vector<std::size_t> idx(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    return select(idx);
}

DesignMatrix DesignMatrix::select(std::span<const std::size_t> rows_to_keep) const {
    std::vector<double> values;
    std::vector<double> targets;
    std::vector<std::size_t> index;
    std::vector<Timestamp> times;
    values.reserve(rows_to_keep.size() * cols_);
    for (const auto i : rows_to_keep) {
        if (i >= rows()) throw ShapeError("row index out of range");
        const auto r = row(i);
        values.insert(values.end(), r.begin(), r.end());
        targets.push_back(targets_[i]);
        if (!target_index_.empty()) index.push_back(target_index_[i]);
        if (!target_times_.empty()) times.push_back(target_times_[i]);
    }
    return DesignMatrix(std::move(values), cols_, std::move(targets), names_, std::move(index),
                        std::move(times));
}

DesignMatrix build_features(const SeriesFrame& frame, const LagSpec& spec) {
    spec.validate();

    struct Source {
        const std::vector<double>* values;
        int lag;
    };
    std::vector<Source> sources;
    std::vector<std::string> names;
    for (const int lag : spec.target_lags) {
        sources.push_back({&frame.target(), lag});
        names.push_back(frame.target_name() + "_lag_" + std::to_string(lag));
    }
    for (const auto& [column_name, lags] : spec.covariate_lags) {
        const Column* column = frame.covariate(column_name);
        if (column == nullptr)
            throw SchemaError("lag spec references unknown covariate '" + column_name + "'");
        for (const int lag : lags) {
            sources.push_back({&column->values, lag});
            names.push_back(lag > 0 ? column_name + "_lag_" + std::to_string(lag)
                                    : column_name + "_lead_" + std::to_string(-lag));
        }
    }
    if (sources.empty()) throw ConfigError("lag spec produces no features");

    const auto history = static_cast<std::size_t>(spec.max_history());
    const auto future = static_cast<std::size_t>(spec.max_future());
    if (frame.size() <= history + future)
        throw InsufficientHistoryError("frame of length " + std::to_string(frame.size()) +
                                       " needs more than " + std::to_string(history + future) +
                                       " periods for the requested lags");

    const std::size_t first = history;
    const std::size_t last = frame.size() - future;
    std::vector<double> values;
    std::vector<double> targets;
    std::vector<std::size_t> index;
    std::vector<Timestamp> times;
    values.reserve((last - first) * sources.size());
    for (std::size_t t = first; t < last; ++t) {
        for (const auto& source : sources)
            values.push_back((*source.values)[static_cast<std::size_t>(
                static_cast<std::ptrdiff_t>(t) - source.lag)]);
        targets.push_back(frame.target()[t]);
        index.push_back(t);
        times.push_back(frame.timestamps()[t]);
    }
    return DesignMatrix(std::move(values), sources.size(), std::move(targets), std::move(names),
                        std::move(index), std::move(times));
}

// ---------------------------------------------------------------------------
// Splits

std::vector<Split> rolling_splits(std::size_t length, std::size_t train_len, std::size_t step,
                                  std::size_t horizon) {
    if (step == 0) throw ConfigError("rolling step must be >= 1");
    if (horizon == 0) throw ConfigError("rolling horizon must be >= 1");
    if (train_len == 0) throw ConfigError("training window must be >= 1");
    if (step != horizon)
        throw ConfigError("rolling step (" + std::to_string(step) + ") must equal horizon (" +
                          std::to_string(horizon) + ") so test windows tile without gaps");
    std::vector<Split> splits;
    for (std::size_t origin = train_len; origin + horizon <= length; origin += step)
        splits.push_back({origin - train_len, origin, origin, origin + horizon});
    return splits;
}

std::vector<Split> rolling_splits(const SeriesFrame& frame, std::size_t train_len,
                                  std::size_t step, std::size_t horizon) {
    return rolling_splits(frame.size(), train_len, step, horizon);
}

// ---------------------------------------------------------------------------
// Synthetic series

double ar_spectral_radius(std::span<const double> ar) {
    const auto p = static_cast<Eigen::Index>(ar.size());
    if (p == 0) return 0.0;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = ar[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

SeriesFrame synth_series(const SynthParams& params, std::uint64_t seed) {
    if (params.n == 0) throw ConfigError("synthetic series length must be >= 1");
    if (params.period.count() <= 0) throw ConfigError("synthetic period must be positive");
    if (params.noise_scale < 0 || params.spike_scale < 0)
        throw ConfigError("noise and spike scales must be non-negative");
    if (params.spike_probability < 0 || params.spike_probability > 1)
        throw ConfigError("spike probability must lie in [0, 1]");
    for (const double phi : params.ar)
        if (!std::isfinite(phi)) throw ConfigError("AR coefficients must be finite");
    const double radius = ar_spectral_radius(params.ar);
    if (radius >= 1.0)
        throw ConfigError("AR coefficients are not stationary (spectral radius " +
                          format_double(radius) + ")");

    Rng noise_rng(derive_seed(seed, 1));
    Rng spike_rng(derive_seed(seed, 2));
    constexpr double two_pi = 6.283185307179586476925;

    // Burn-in so the AR state starts near its stationary distribution.
    const std::size_t burn_in = params.ar.empty() ? 0 : 50 * params.ar.size();
    std::vector<double> state(burn_in + params.n, 0.0);
    for (std::size_t t = 0; t < state.size(); ++t) {
        double x = 0.0;
        for (std::size_t i = 0; i < params.ar.size() && i < t; ++i)
            x += params.ar[i] * state[t - 1 - i];
        const double eps = standard_normal(noise_rng);
        state[t] = x + params.noise_scale * eps;
    }

    std::vector<Timestamp> timestamps;
    std::vector<double> values;
    timestamps.reserve(params.n);
    values.reserve(params.n);
    for (std::size_t t = 0; t < params.n; ++t) {
        double y = params.level + state[burn_in + t];
        if (params.daily_period > 0)
            y += params.daily_amplitude *
                 std::sin(two_pi * static_cast<double>(t) / static_cast<double>(params.daily_period));
        if (params.weekly_period > 0)
            y += params.weekly_amplitude * std::sin(two_pi * static_cast<double>(t) /
                                                    static_cast<double>(params.weekly_period));
        // Three draws per period whether or not a spike fires keeps streams aligned.
        const double fire = uniform_unit(spike_rng);
        const double sign = uniform_unit(spike_rng) < 0.5 ? -1.0 : 1.0;
        const double magnitude = -std::log1p(-uniform_unit(spike_rng));
        if (fire < params.spike_probability) y += sign * params.spike_scale * magnitude;
        timestamps.push_back(params.start + params.period * static_cast<long>(t));
        values.push_back(y);
    }
    return SeriesFrame(std::move(timestamps), params.target_name, std::move(values), {},
                       params.period);
}

} // namespace pepf::dataset
