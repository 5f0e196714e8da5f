#pragma once

#include "config.hpp"

#include <pepf/backtest.hpp>
#include <pepf/dataset.hpp>
#include <pepf/trading.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pepf::cli {

enum class Market { dam, bm };

Market parse_market(std::string_view name);
std::string_view to_string(Market market);

dataset::SynthParams synth_params(const Config& config);
/// Frame named by `data.source` (synth or csv).
dataset::SeriesFrame load_frame(const Config& config);
backtest::BacktestConfig backtest_config(const Config& config);
trading::BatteryConfig battery_config(const Config& config);

std::filesystem::path output_dir(const Config& config);
std::filesystem::path forecasts_dir(const Config& config);
std::filesystem::path forecast_path(const std::filesystem::path& dir, std::string_view method,
                                    std::string_view learner);

/// (method, learner) pairs the backtest emits, in report order.
std::vector<std::pair<std::string, std::string>> configured_runs(const backtest::BacktestConfig& config);

void cmd_synth(const Config& config, const std::optional<std::filesystem::path>& out);
void cmd_backtest(const Config& config);
void cmd_trade(const Config& config);
void cmd_evaluate(const Config& config);

/// Full command line entry point; returns the process exit code
/// (0 ok, 2 config, 3 data, 4 internal).
int run(int argc, const char* const* argv);

} // namespace pepf::cli
