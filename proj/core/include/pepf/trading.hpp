#pragma once

#include "pepf/quantile.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pepf::trading {

/// Energies in MWh, per-period rates in MWh per period.
struct BatteryConfig {
    double capacity = 1.0;
    double max_charge = 1.0;
    double max_discharge = 1.0;
    double eta_c = 0.98;
    double eta_d = 0.8;
    double min_soc = 0.0;
    double initial_soc = 0.0;

    /// Throws ConfigError unless 0 <= min_soc <= initial_soc <= capacity,
    /// rates > 0 and efficiencies in (0, 1].
    void validate() const;
};

enum class ActionKind { idle, charge, discharge };

std::string_view to_string(ActionKind kind);

/// Battery-side energy moved in one period.
struct Action {
    ActionKind kind = ActionKind::idle;
    double energy = 0.0;

    bool operator==(const Action&) const = default;
};

struct TradePlan {
    std::vector<Action> actions;

    std::size_t horizon() const noexcept { return actions.size(); }
    bool idle() const noexcept;
    bool operator==(const TradePlan&) const = default;
};

struct LedgerRecord {
    std::size_t window_start = 0;
    std::size_t period = 0;
    ActionKind side = ActionKind::idle;
    double grid_energy = 0.0;  ///< e / eta_c bought, or eta_d · e sold
    double price = 0.0;
    double cash = 0.0;         ///< negative for purchases
    double soc_after = 0.0;
};

struct TradeLedger {
    std::vector<LedgerRecord> records;
    double profit = 0.0;
    double final_soc = 0.0;
};

/// SoC after each period. Throws FeasibilityError on any bound or rate violation.
std::vector<double> validate_plan(const TradePlan& plan, const BatteryConfig& battery);

/// Σ sell cash − Σ buy cash with buy and sell legs priced separately.
double planned_profit(const TradePlan& plan, std::span<const double> buy_prices,
                      std::span<const double> sell_prices, const BatteryConfig& battery);

/// Executes the plan against realized prices. Period indices in the ledger
/// are offset by `window_start`.
TradeLedger settle(const TradePlan& plan, std::span<const double> realized,
                   const BatteryConfig& battery, std::size_t window_start = 0);

struct Ts1Options {
    bool filter = false;
    /// With the filter on, trade only if eta_d·q̂_s^α − q̂_b^{1−α}/eta_c > 0.
    double act_level = 0.1;
};

/// One charge at b and one discharge at s > b, chosen on the median forecast.
/// A battery starting above min_soc instead sells what it holds at the
/// highest median.
TradePlan ts1_plan(const quantile::QuantileForecast& forecast, const BatteryConfig& battery,
                   const Ts1Options& options = {});

enum class Ts2Pricing { median, quantile };

struct Ts2Options {
    std::size_t soc_steps = 11;
    Ts2Pricing pricing = Ts2Pricing::median;
    /// Quantile pricing buys at q̂^{1−α} and sells at q̂^α.
    double risk_level = 0.1;
};

/// Profit-maximizing schedule on the SoC grid initial_soc + kΔ,
/// Δ = (capacity − min_soc) / (soc_steps − 1). Ties between optimal plans
/// are settled at the last period where they differ, preferring idle, then
/// charges by increasing energy, then discharges by increasing energy. This
/// favours doing nothing and, among equal trades, charging earlier.
TradePlan ts2_plan(std::span<const double> buy_prices, std::span<const double> sell_prices,
                   const BatteryConfig& battery, std::size_t soc_steps);
TradePlan ts2_plan(const quantile::QuantileForecast& forecast, const BatteryConfig& battery,
                   const Ts2Options& options = {});

/// Exhaustive search over the same grid and tie order. Horizon <= 8.
TradePlan brute_force_plan(std::span<const double> buy_prices, std::span<const double> sell_prices,
                           const BatteryConfig& battery, std::size_t soc_steps);
TradePlan brute_force_plan(std::span<const double> prices, const BatteryConfig& battery,
                           std::size_t soc_steps);

enum class Strategy { ts1, ts2 };
enum class Execution {
    commit,   ///< plan each window once and execute every action
    receding  ///< re-plan every period over the rest of the window, execute the first action
};

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy strategy);
Execution parse_execution(std::string_view name);
std::string_view to_string(Execution execution);

struct StrategyConfig {
    Strategy strategy = Strategy::ts2;
    std::size_t horizon = 24;
    Execution execution = Execution::commit;
    Ts1Options ts1;
    Ts2Options ts2;
};

/// Plans consecutive windows of `horizon` periods on the forecast and settles
/// each at the realized prices, carrying the SoC from window to window.
TradeLedger simulate(const quantile::QuantileForecast& forecast, std::span<const double> realized,
                     const BatteryConfig& battery, const StrategyConfig& config);

} // namespace pepf::trading
