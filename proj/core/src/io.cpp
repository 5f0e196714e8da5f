#include "pepf/io.hpp"

#include "pepf/error.hpp"
#include "pepf/text.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace pepf::io {

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    return out;
}

void atomic_write(const std::filesystem::path& path, const std::function<void(std::ostream&)>& write) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto temp = path;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open " + temp.string() + " for writing");
        write(out);
        out.flush();
        if (!out) throw DataError("failed writing " + temp.string());
    }
    std::error_code ec;
    std::filesystem::rename(temp, path, ec);
    if (ec) {
        std::filesystem::remove(temp);
        throw DataError("cannot move " + temp.string() + " to " + path.string() + ": " + ec.message());
    }
}

namespace {

/// Data lines of a header-first CSV, skipping '#' comments and blank lines.
class CsvLines {
public:
    CsvLines(std::istream& in, std::vector<std::string> expected) : in_(in) {
        std::vector<std::string> header;
        if (!next(header)) throw DataError("empty file, expected header '" + join(expected) + "'");
        if (header != expected)
            throw SchemaError("header '" + join(header) + "' differs from '" + join(expected) + "'");
    }

    bool next(std::vector<std::string>& fields) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto body = trim(line);
            if (body.empty() || body.front() == '#') continue;
            fields = split(body, ',');
            for (auto& f : fields) f = std::string(trim(f));
            return true;
        }
        return false;
    }

    std::size_t line() const { return line_; }

    Timestamp time(const std::string& text) const {
        const auto ts = parse_iso8601(text);
        if (!ts) throw ParseError(line_, "bad timestamp '" + text + "'");
        return *ts;
    }

    double number(const std::string& text) const {
        const auto v = parse_double(text);
        if (!v || !std::isfinite(*v)) throw ParseError(line_, "bad number '" + text + "'");
        return *v;
    }

private:
    static std::string join(const std::vector<std::string>& parts) {
        std::string out;
        for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? "," : "") + parts[i];
        return out;
    }

    std::istream& in_;
    std::size_t line_ = 0;
};

} // namespace

void write_forecast_csv(std::ostream& out, std::span<const Timestamp> times,
                        const quantile::QuantileForecast& forecast, const std::string& header_comment) {
    if (times.size() != forecast.steps())
        throw ShapeError("forecast has " + std::to_string(forecast.steps()) + " steps but " +
                         std::to_string(times.size()) + " timestamps");
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    out << "timestamp,level,value\n";
    const auto& grid = forecast.grid();
    for (std::size_t t = 0; t < times.size(); ++t) {
        const auto stamp = format_iso8601(times[t]);
        for (std::size_t j = 0; j < grid.size(); ++j)
            out << stamp << ',' << format_double(grid[j]) << ',' << format_double(forecast.at(t, j)) << '\n';
    }
}

TimedForecast read_forecast_csv(std::istream& in) {
    CsvLines csv(in, {"timestamp", "level", "value"});
    std::vector<Timestamp> times;
    std::vector<double> levels;
    std::vector<double> values;
    std::size_t position = 0;  // index within the current timestamp's levels
    bool levels_known = false;
    std::vector<std::string> f;
    while (csv.next(f)) {
        if (f.size() != 3) throw ParseError(csv.line(), "expected 3 fields, got " + std::to_string(f.size()));
        const auto ts = csv.time(f[0]);
        const double level = csv.number(f[1]);
        const double value = csv.number(f[2]);
        if (times.empty() || ts != times.back()) {
            if (!times.empty()) {
                if (!levels_known) levels_known = true;
                else if (position != levels.size())
                    throw ParseError(csv.line(), "previous timestamp lists " + std::to_string(position) +
                                                     " levels, expected " + std::to_string(levels.size()));
                if (ts <= times.back()) throw ParseError(csv.line(), "timestamps must increase");
            }
            times.push_back(ts);
            position = 0;
        }
        if (!levels_known) {
            levels.push_back(level);
        } else if (position >= levels.size() || levels[position] != level) {
            throw ParseError(csv.line(), "level " + f[1] + " breaks the level layout of earlier timestamps");
        }
        ++position;
        values.push_back(value);
    }
    if (times.empty()) throw DataError("forecast file has no rows");
    if (levels_known && position != levels.size())
        throw ParseError(csv.line(), "last timestamp lists " + std::to_string(position) + " levels, expected " +
                                         std::to_string(levels.size()));
    return {std::move(times), quantile::QuantileForecast(quantile::QuantileGrid(std::move(levels)), std::move(values))};
}

TimedForecast load_forecast_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open forecast file " + path.string());
    try {
        return read_forecast_csv(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void write_series_csv(std::ostream& out, std::span<const Timestamp> times, std::span<const double> values,
                      const std::string& header_comment) {
    if (times.size() != values.size()) throw ShapeError("timestamps and values differ in length");
    if (!header_comment.empty()) out << "# " << header_comment << '\n';
    out << "timestamp,value\n";
    for (std::size_t t = 0; t < times.size(); ++t)
        out << format_iso8601(times[t]) << ',' << format_double(values[t]) << '\n';
}

TimedSeries read_series_csv(std::istream& in) {
    CsvLines csv(in, {"timestamp", "value"});
    TimedSeries series;
    std::vector<std::string> f;
    while (csv.next(f)) {
        if (f.size() != 2) throw ParseError(csv.line(), "expected 2 fields, got " + std::to_string(f.size()));
        const auto ts = csv.time(f[0]);
        if (!series.times.empty() && ts <= series.times.back())
            throw ParseError(csv.line(), "timestamps must increase");
        series.times.push_back(ts);
        series.values.push_back(csv.number(f[1]));
    }
    return series;
}

TimedSeries load_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open series file " + path.string());
    try {
        return read_series_csv(in);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

} // namespace pepf::io
