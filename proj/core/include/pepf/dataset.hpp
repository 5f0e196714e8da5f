#pragma once

#include "pepf/time.hpp"

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pepf::dataset {

struct Column {
    std::string name;
    std::vector<double> values;
};

/// Timestamped target series with named covariate columns on a uniform grid.
/// Immutable once constructed; the constructor enforces the grid invariants.
class SeriesFrame {
public:
    SeriesFrame(std::vector<Timestamp> timestamps, std::string target_name,
                std::vector<double> target, std::vector<Column> covariates = {},
                std::optional<std::chrono::seconds> period = std::nullopt);

    std::size_t size() const noexcept { return timestamps_.size(); }
    std::chrono::seconds period() const noexcept { return period_; }

    const std::vector<Timestamp>& timestamps() const noexcept { return timestamps_; }
    const std::string& target_name() const noexcept { return target_name_; }
    const std::vector<double>& target() const noexcept { return target_; }
    const std::vector<Column>& covariates() const noexcept { return covariates_; }

    /// nullptr when the column does not exist.
    const Column* covariate(const std::string& name) const;

    SeriesFrame slice(std::size_t begin, std::size_t end) const;

private:
    std::vector<Timestamp> timestamps_;
    std::string target_name_;
    std::vector<double> target_;
    std::vector<Column> covariates_;
    std::chrono::seconds period_{0};
};

enum class MissingPolicy { reject, forward_fill };

/// Column roles for CSV ingestion. When `covariate_columns` is empty every
/// column other than timestamp and target becomes a covariate.
struct CsvSchema {
    std::string timestamp_column = "timestamp";
    std::string target_column = "price";
    std::vector<std::string> covariate_columns;
    MissingPolicy missing = MissingPolicy::reject;
    std::optional<std::chrono::seconds> period;
};

/// Reads a header-first CSV. Lines starting with '#' are skipped. Rows are
/// sorted by timestamp; duplicates and non-uniform spacing are rejected.
SeriesFrame read_csv(std::istream& in, const CsvSchema& schema);
SeriesFrame load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes `timestamp,<target>,<covariates...>` with shortest round-trip decimals.
void write_csv(std::ostream& out, const SeriesFrame& frame);

/// Lag layout for supervised rows. Lags are relative to the target period t:
/// target lag L reads y[t-L]; covariate lag L reads x[t-L], so L <= 0 reads a
/// value published ahead of time (e.g. an operator forecast for period t-L).
struct LagSpec {
    std::vector<int> target_lags;
    std::map<std::string, std::vector<int>> covariate_lags;
    int horizon = 1;
    int lead = 1;

    /// Throws ConfigError on horizon < 1, lead < 1, a target lag below lead
    /// (leakage) or duplicate lags.
    void validate() const;

    /// Largest look-back in periods over all features.
    int max_history() const;
    /// Largest look-ahead over covariates with non-positive lags.
    int max_future() const;
};

/// Read-only window over row-major feature storage.
class FeatureRows {
public:
    FeatureRows() = default;
    FeatureRows(std::span<const double> values, std::size_t cols);

    std::size_t rows() const noexcept { return cols_ == 0 ? 0 : values_.size() / cols_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> row(std::size_t i) const { return values_.subspan(i * cols_, cols_); }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    std::span<const double> values() const noexcept { return values_; }

private:
    std::span<const double> values_;
    std::size_t cols_ = 0;
};

/// Feature rows aligned to response values. `target_index` maps each row to
/// the frame position of its target (empty for hand-built matrices).
class DesignMatrix {
public:
    DesignMatrix() = default;
    DesignMatrix(std::vector<double> values, std::size_t cols, std::vector<double> targets,
                 std::vector<std::string> feature_names = {},
                 std::vector<std::size_t> target_index = {},
                 std::vector<Timestamp> target_times = {});

    /// Convenience for tests: one inner vector per row.
    static DesignMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                  std::vector<double> targets);

    std::size_t rows() const noexcept { return targets_.size(); }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return targets_.empty(); }

    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(values_).subspan(i * cols_, cols_);
    }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    FeatureRows features() const { return FeatureRows(values_, cols_); }

    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& targets() const noexcept { return targets_; }
    const std::vector<std::string>& feature_names() const noexcept { return names_; }
    const std::vector<std::size_t>& target_index() const noexcept { return target_index_; }
    const std::vector<Timestamp>& target_times() const noexcept { return target_times_; }

    DesignMatrix slice(std::size_t begin, std::size_t end) const;
    DesignMatrix select(std::span<const std::size_t> rows) const;

private:
    std::vector<double> values_;
    std::size_t cols_ = 0;
    std::vector<double> targets_;
    std::vector<std::string> names_;
    std::vector<std::size_t> target_index_;
    std::vector<Timestamp> target_times_;
};

/// One row per target period t with every lag available:
/// rows = frame.size() - spec.max_history() - spec.max_future().
/// Feature names: "<target>_lag_L", "<col>_lag_L" for L > 0, "<col>_lead_K" for L = -K <= 0.
DesignMatrix build_features(const SeriesFrame& frame, const LagSpec& spec);

/// Half-open index ranges of one rolling origin.
struct Split {
    std::size_t train_begin = 0;
    std::size_t train_end = 0;
    std::size_t test_begin = 0;
    std::size_t test_end = 0;

    std::size_t origin() const noexcept { return test_begin; }
    bool operator==(const Split&) const = default;
};

/// Origins o = train_len, train_len + step, ... while o + horizon <= length.
/// Train window [o - train_len, o), test window [o, o + horizon). Test
/// windows tile a contiguous slice, so step must equal horizon.
std::vector<Split> rolling_splits(std::size_t length, std::size_t train_len, std::size_t step,
                                  std::size_t horizon);
std::vector<Split> rolling_splits(const SeriesFrame& frame, std::size_t train_len,
                                  std::size_t step, std::size_t horizon);

/// Generator for desk-scale price-like series:
///   y_t = level + x_t + A_d sin(2πt/P_d) + A_w sin(2πt/P_w) + spike_t
///   x_t = Σ φ_i x_{t-i} + σ ε_t,  ε_t ~ N(0, 1)
///   spike_t = B_t · S_t · s · E_t,  B_t ~ Bernoulli(p), S_t = ±1, E_t ~ Exp(1)
/// Noise and spikes use independent streams, so toggling spikes leaves the
/// rest of the series unchanged.
struct SynthParams {
    std::size_t n = 24 * 7 * 8;
    std::vector<double> ar;
    double level = 50.0;
    std::size_t daily_period = 24;
    std::size_t weekly_period = 168;
    double daily_amplitude = 0.0;
    double weekly_amplitude = 0.0;
    double noise_scale = 0.0;
    double spike_probability = 0.0;
    double spike_scale = 0.0;
    std::chrono::seconds period{3600};
    Timestamp start = Timestamp{std::chrono::seconds{1577836800}}; // 2020-01-01T00:00:00Z
    std::string target_name = "price";
};

/// Throws ConfigError when n == 0 or the AR polynomial is not stationary
/// (companion spectral radius >= 1).
SeriesFrame synth_series(const SynthParams& params, std::uint64_t seed);

/// Spectral radius of the AR companion matrix (0 for an empty coefficient list).
double ar_spectral_radius(std::span<const double> ar);

} // namespace pepf::dataset
