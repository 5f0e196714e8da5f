#include "config.hpp"

#include <pepf/error.hpp>
#include <pepf/io.hpp>
#include <pepf/text.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <set>

namespace pepf::cli {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "seed", "output", "threads", "forecasts",
        "data.source", "data.path", "data.timestamp_column", "data.target_column", "data.covariates",
        "data.missing", "data.period_minutes",
        "synth.n", "synth.ar", "synth.level", "synth.daily_period", "synth.weekly_period",
        "synth.daily_amplitude", "synth.weekly_amplitude", "synth.noise_scale", "synth.spike_probability",
        "synth.spike_scale", "synth.period_minutes", "synth.start", "synth.target_name",
        "lags.target", "lags.lead",
        "backtest.market", "backtest.train_len", "backtest.step", "backtest.horizon",
        "methods", "learners",
        "learner.knn.k", "learner.lear.lambda", "learner.lear.grid", "learner.lear.validation_fraction",
        "learner.forest.trees", "learner.forest.max_depth", "learner.forest.min_leaf",
        "learner.forest.features_per_split", "learner.boost.trees", "learner.boost.learning_rate",
        "learner.boost.max_depth", "learner.boost.min_leaf",
        "quantile.grid", "quantile.convention",
        "conformal.calib_fraction", "conformal.B", "conformal.aggregation", "conformal.window",
        "conformal.resid_lags", "conformal.spci_mode", "conformal.refit_every", "conformal.qrf_trees",
        "conformal.qrf_max_depth", "conformal.qrf_min_leaf", "conformal.qrf_subsample",
        "qra.calib_len", "qra.windows",
        "battery.capacity", "battery.max_charge", "battery.max_discharge", "battery.eta_c", "battery.eta_d",
        "battery.min_soc", "battery.initial_soc",
        "trade.methods", "trade.learner", "trade.strategies", "trade.horizon",
        "trade.execution", "trade.soc_steps", "trade.pricing", "trade.risk_level", "trade.filter",
        "trade.act_level",
    };
    return keys;
}

/// Settings that never change numeric results.
bool presentation_only(const std::string& key) { return key == "output" || key == "threads" || key == "forecasts"; }

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not " + expected);
}

} // namespace

bool Config::known_key(const std::string& key) {
    return known_keys().count(key) != 0 || (key.rfind("lags.cov.", 0) == 0 && key.size() > 9);
}

Config Config::parse(std::istream& in, const std::string& source) {
    Config config;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(source + ":" + std::to_string(number) + ": expected 'key = value'");
        const std::string key(trim(body.substr(0, eq)));
        const std::string value(trim(body.substr(eq + 1)));
        if (!known_key(key)) throw ConfigError(source + ":" + std::to_string(number) + ": unknown key '" + key + "'");
        if (config.has(key)) throw ConfigError(source + ":" + std::to_string(number) + ": duplicate key '" + key + "'");
        config.values_[key] = value;
    }
    return config;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

void Config::set(const std::string& key, const std::string& value) {
    if (!known_key(key)) throw ConfigError("unknown config key '" + key + "'");
    values_[key] = value;
}

void Config::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) throw ConfigError("missing required config key '" + key + "'");
    return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    return get_optional_double(key).value_or(fallback);
}

std::optional<double> Config::get_optional_double(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    const auto v = parse_double(it->second);
    if (!v) bad_value(key, it->second, "a number");
    return v;
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
    const long v = get_long(key, static_cast<long>(fallback));
    if (v < 0) bad_value(key, get_string(key, ""), "a non-negative integer");
    return static_cast<std::size_t>(v);
}

std::uint64_t Config::require_u64(const std::string& key) const {
    const auto text = require_string(key);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) bad_value(key, text, "an unsigned integer");
    return v;
}

long Config::get_long(const std::string& key, long fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    long v = 0;
    const auto& text = it->second;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || end != text.data() + text.size()) bad_value(key, text, "an integer");
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1" || it->second == "yes" || it->second == "on") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no" || it->second == "off") return false;
    bad_value(key, it->second, "a boolean");
}

std::vector<std::string> Config::get_list(const std::string& key, const std::vector<std::string>& fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<std::string> out;
    for (const auto& part : split(it->second, ',')) {
        const auto item = trim(part);
        if (!item.empty()) out.emplace_back(item);
    }
    return out;
}

std::vector<double> Config::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& item : get_list(key, {})) {
        const auto v = parse_double(item);
        if (!v) bad_value(key, item, "a number");
        out.push_back(*v);
    }
    return out;
}

std::vector<int> Config::get_ints(const std::string& key, const std::vector<int>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<int> out;
    for (const auto& item : get_list(key, {})) {
        int v = 0;
        const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || end != item.data() + item.size()) bad_value(key, item, "an integer");
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> Config::suffixes(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
        if (key.rfind(prefix, 0) == 0) out.push_back(key.substr(prefix.size()));
    return out;
}

std::string Config::canonical() const {
    std::string out;
    for (const auto& [key, value] : values_)
        if (!presentation_only(key)) out += key + "=" + value + "\n";
    return out;
}

std::string Config::hash() const { return io::fnv1a_hex(canonical()); }

} // namespace pepf::cli
