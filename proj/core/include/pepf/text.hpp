#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pepf {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Whole-field decimal parse; leading/trailing blanks are ignored.
std::optional<double> parse_double(std::string_view text);

std::string_view trim(std::string_view text);

std::vector<std::string> split(std::string_view text, char delimiter);

} // namespace pepf
