#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pepf::cli {

/// Flat `key = value` settings. Lines starting with '#' are comments. Keys
/// are checked against the known set so typos fail early.
class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    /// "key=value"; later assignments win.
    void apply_override(std::string_view assignment);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::string require_string(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::optional<double> get_optional_double(const std::string& key) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t require_u64(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<std::string> get_list(const std::string& key, const std::vector<std::string>& fallback) const;
    std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;

    /// Keys with the given prefix, prefix stripped.
    std::vector<std::string> suffixes(const std::string& prefix) const;

    /// Sorted `key=value` lines of every setting that can change results
    /// (everything except directories and thread count).
    std::string canonical() const;
    std::string hash() const;

    static bool known_key(const std::string& key);

private:
    std::map<std::string, std::string> values_;
};

} // namespace pepf::cli
