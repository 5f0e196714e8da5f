#pragma once

#include "pepf/quantile.hpp"
#include "pepf/time.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pepf::io {

/// 64-bit FNV-1a as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

/// Writes through a sibling temporary file renamed into place on success.
void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& write);

struct TimedForecast {
    std::vector<Timestamp> times;
    quantile::QuantileForecast forecast;
};

/// Long format "timestamp,level,value", one line per step and level.
void write_forecast_csv(std::ostream& out, std::span<const Timestamp> times,
                        const quantile::QuantileForecast& forecast,
                        const std::string& header_comment = {});
/// Every timestamp must list the same levels in the same order.
TimedForecast read_forecast_csv(std::istream& in);
TimedForecast load_forecast_csv(const std::filesystem::path& path);

struct TimedSeries {
    std::vector<Timestamp> times;
    std::vector<double> values;
};

/// "timestamp,value"
void write_series_csv(std::ostream& out, std::span<const Timestamp> times,
                      std::span<const double> values, const std::string& header_comment = {});
TimedSeries read_series_csv(std::istream& in);
TimedSeries load_series_csv(const std::filesystem::path& path);

} // namespace pepf::io
