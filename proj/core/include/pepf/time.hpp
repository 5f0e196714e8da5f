#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace pepf {

using Timestamp = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DDTHH:MM[:SS][Z]" (a space may replace 'T'). Only UTC is
/// accepted; an explicit "+00:00" offset is allowed, any other offset is not.
std::optional<Timestamp> parse_iso8601(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp ts);

} // namespace pepf
