#include "pepf/trading.hpp"

#include "pepf/error.hpp"
#include "pepf/text.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace pepf::trading {

namespace {

constexpr double kSocSlack = 1e-9;
constexpr double kTieSlack = 1e-9;
constexpr std::size_t kBruteForceHorizon = 8;

double charge_cost(double price, double energy, const BatteryConfig& b) { return price * energy / b.eta_c; }
double discharge_revenue(double price, double energy, const BatteryConfig& b) { return price * b.eta_d * energy; }

} // namespace

void BatteryConfig::validate() const {
    const auto fail = [](const std::string& what) { throw ConfigError("battery: " + what); };
    if (!(min_soc >= 0.0)) fail("min_soc must be >= 0");
    if (!(min_soc <= capacity)) fail("min_soc " + format_double(min_soc) + " exceeds capacity " + format_double(capacity));
    if (!(initial_soc >= min_soc && initial_soc <= capacity))
        fail("initial_soc must lie in [min_soc, capacity]");
    if (!(max_charge > 0.0) || !(max_discharge > 0.0)) fail("charge and discharge rates must be > 0");
    if (!(eta_c > 0.0 && eta_c <= 1.0) || !(eta_d > 0.0 && eta_d <= 1.0))
        fail("efficiencies must lie in (0, 1]");
}

std::string_view to_string(ActionKind kind) {
    switch (kind) {
    case ActionKind::idle: return "idle";
    case ActionKind::charge: return "buy";
    case ActionKind::discharge: return "sell";
    }
    return "idle";
}

bool TradePlan::idle() const noexcept {
    return std::all_of(actions.begin(), actions.end(),
                       [](const Action& a) { return a.kind == ActionKind::idle; });
}

std::vector<double> validate_plan(const TradePlan& plan, const BatteryConfig& battery) {
    std::vector<double> soc;
    soc.reserve(plan.horizon());
    double level = battery.initial_soc;
    for (std::size_t t = 0; t < plan.horizon(); ++t) {
        const auto& a = plan.actions[t];
        const auto fail = [&](const std::string& what) {
            throw FeasibilityError("period " + std::to_string(t) + ": " + what);
        };
        if (a.kind != ActionKind::idle && !(a.energy >= 0.0)) fail("negative energy");
        if (a.kind == ActionKind::charge) {
            if (a.energy > battery.max_charge + kSocSlack) fail("charge exceeds rate limit");
            level += a.energy;
        } else if (a.kind == ActionKind::discharge) {
            if (a.energy > battery.max_discharge + kSocSlack) fail("discharge exceeds rate limit");
            level -= a.energy;
        }
        if (level > battery.capacity + kSocSlack) fail("state of charge above capacity");
        if (level < battery.min_soc - kSocSlack) fail("state of charge below minimum");
        soc.push_back(level);
    }
    return soc;
}

double planned_profit(const TradePlan& plan, std::span<const double> buy_prices,
                      std::span<const double> sell_prices, const BatteryConfig& battery) {
    if (buy_prices.size() < plan.horizon() || sell_prices.size() < plan.horizon())
        throw ShapeError("price series shorter than the plan horizon");
    double profit = 0.0;
    for (std::size_t t = 0; t < plan.horizon(); ++t) {
        const auto& a = plan.actions[t];
        if (a.kind == ActionKind::charge) profit -= charge_cost(buy_prices[t], a.energy, battery);
        else if (a.kind == ActionKind::discharge) profit += discharge_revenue(sell_prices[t], a.energy, battery);
    }
    return profit;
}

TradeLedger settle(const TradePlan& plan, std::span<const double> realized,
                   const BatteryConfig& battery, std::size_t window_start) {
    if (realized.size() < plan.horizon())
        throw ShapeError("realized prices cover " + std::to_string(realized.size()) +
                         " periods, plan needs " + std::to_string(plan.horizon()));
    const auto soc = validate_plan(plan, battery);
    TradeLedger ledger;
    ledger.final_soc = battery.initial_soc;
    for (std::size_t t = 0; t < plan.horizon(); ++t) {
        const auto& a = plan.actions[t];
        ledger.final_soc = soc[t];
        if (a.kind == ActionKind::idle || a.energy == 0.0) continue;
        LedgerRecord r;
        r.window_start = window_start;
        r.period = window_start + t;
        r.side = a.kind;
        r.price = realized[t];
        if (a.kind == ActionKind::charge) {
            r.grid_energy = a.energy / battery.eta_c;
            r.cash = -charge_cost(realized[t], a.energy, battery);
        } else {
            r.grid_energy = battery.eta_d * a.energy;
            r.cash = discharge_revenue(realized[t], a.energy, battery);
        }
        r.soc_after = soc[t];
        ledger.profit += r.cash;
        ledger.records.push_back(r);
    }
    return ledger;
}

TradePlan ts1_plan(const quantile::QuantileForecast& forecast, const BatteryConfig& battery,
                   const Ts1Options& options) {
    battery.validate();
    const std::size_t n = forecast.steps();
    if (n < 2) throw ConfigError("single-trade strategy needs a horizon of at least 2 periods");
    TradePlan plan{std::vector<Action>(n)};

    std::vector<double> median(n);
    for (std::size_t t = 0; t < n; ++t) median[t] = forecast.value(t, 0.5);

    const double held = battery.initial_soc - battery.min_soc;
    if (held > 0.0) {
        const auto sell = static_cast<std::size_t>(std::max_element(median.begin(), median.end()) - median.begin());
        plan.actions[sell] = {ActionKind::discharge, std::min(held, battery.max_discharge)};
        return plan;
    }

    double best = -std::numeric_limits<double>::infinity();
    std::size_t buy = 0, sell = 1;
    for (std::size_t b = 0; b + 1 < n; ++b)
        for (std::size_t s = b + 1; s < n; ++s) {
            const double spread = battery.eta_d * median[s] - median[b] / battery.eta_c;
            if (spread > best) {
                best = spread;
                buy = b;
                sell = s;
            }
        }
    if (!(best > 0.0)) return plan;

    if (options.filter) {
        if (!(options.act_level > 0.0 && options.act_level < 0.5))
            throw ConfigError("act_level must lie in (0, 0.5)");
        const double pessimistic = battery.eta_d * forecast.value(sell, options.act_level) -
                                   forecast.value(buy, 1.0 - options.act_level) / battery.eta_c;
        if (!(pessimistic > 0.0)) return plan;
    }

    const double volume = std::min({battery.capacity - battery.initial_soc, battery.max_charge,
                                    battery.max_discharge});
    if (!(volume > 0.0)) return plan;
    plan.actions[buy] = {ActionKind::charge, volume};
    plan.actions[sell] = {ActionKind::discharge, volume};
    return plan;
}

namespace {

/// Reachable SoC levels initial_soc + jΔ for j in [lo, hi], stored at index j - lo,
/// together with the per-period step limits.
struct SocGrid {
    double delta = 0.0;
    long lo = 0;
    long hi = 0;
    long max_up = 0;
    long max_down = 0;

    std::size_t size() const { return static_cast<std::size_t>(hi - lo + 1); }
    bool trivial() const { return delta <= 0.0 || (max_up == 0 && max_down == 0) || lo == hi; }
};

SocGrid make_grid(const BatteryConfig& battery, std::size_t soc_steps) {
    battery.validate();
    if (soc_steps < 2) throw ConfigError("soc_steps must be >= 2");
    SocGrid g;
    const double usable = battery.capacity - battery.min_soc;
    if (!(usable > 0.0)) return g;
    g.delta = usable / static_cast<double>(soc_steps - 1);
    g.lo = -static_cast<long>(std::floor((battery.initial_soc - battery.min_soc) / g.delta + kSocSlack));
    g.hi = static_cast<long>(std::floor((battery.capacity - battery.initial_soc) / g.delta + kSocSlack));
    g.max_up = static_cast<long>(std::floor(battery.max_charge / g.delta + kSocSlack));
    g.max_down = static_cast<long>(std::floor(battery.max_discharge / g.delta + kSocSlack));
    return g;
}

/// Signed level changes in tie-break order: idle, charges by increasing
/// size, discharges by increasing size.
std::vector<long> move_order(const SocGrid& g) {
    std::vector<long> moves{0};
    for (long k = 1; k <= g.max_up; ++k) moves.push_back(k);
    for (long k = 1; k <= g.max_down; ++k) moves.push_back(-k);
    return moves;
}

std::size_t move_rank(long k, const SocGrid& g) {
    if (k >= 0) return static_cast<std::size_t>(k);
    return static_cast<std::size_t>(g.max_up - k);
}

double move_reward(long k, double buy, double sell, const SocGrid& g, const BatteryConfig& b) {
    if (k > 0) return -charge_cost(buy, static_cast<double>(k) * g.delta, b);
    if (k < 0) return discharge_revenue(sell, static_cast<double>(-k) * g.delta, b);
    return 0.0;
}

Action move_action(long k, const SocGrid& g) {
    if (k > 0) return {ActionKind::charge, static_cast<double>(k) * g.delta};
    if (k < 0) return {ActionKind::discharge, static_cast<double>(-k) * g.delta};
    return {};
}

void check_prices(std::span<const double> buy, std::span<const double> sell) {
    if (buy.size() != sell.size())
        throw ShapeError("buy and sell price series differ in length");
}

constexpr double kUnreachable = -std::numeric_limits<double>::infinity();

} // namespace

TradePlan ts2_plan(std::span<const double> buy_prices, std::span<const double> sell_prices,
                   const BatteryConfig& battery, std::size_t soc_steps) {
    check_prices(buy_prices, sell_prices);
    const SocGrid g = make_grid(battery, soc_steps);
    const std::size_t n = buy_prices.size();
    TradePlan plan{std::vector<Action>(n)};
    if (n == 0 || g.trivial()) return plan;

    const auto moves = move_order(g);
    const auto slot = [&](long j) { return static_cast<std::size_t>(j - g.lo); };
    const auto on_grid = [&](long j) { return j >= g.lo && j <= g.hi; };

    // best[t][j]: highest cash collected over periods [0, t) ending at level j.
    std::vector<std::vector<double>> best(n + 1, std::vector<double>(g.size(), kUnreachable));
    best[0][slot(0)] = 0.0;
    for (std::size_t t = 0; t < n; ++t)
        for (long j = g.lo; j <= g.hi; ++j) {
            const double here = best[t][slot(j)];
            if (here == kUnreachable) continue;
            for (const long k : moves) {
                if (!on_grid(j + k)) continue;
                auto& next = best[t + 1][slot(j + k)];
                next = std::max(next, here + move_reward(k, buy_prices[t], sell_prices[t], g, battery));
            }
        }
    const double optimum = *std::max_element(best[n].begin(), best[n].end());
    const double threshold = optimum - kTieSlack;

    // Plans are compared from the last period backwards, so actions are fixed
    // from the end. `candidates` holds the levels at t + 1 from which the
    // chosen suffix is feasible and can still reach the threshold.
    std::vector<char> candidates(g.size(), 1);
    double suffix = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        bool chosen = false;
        for (const long k : moves) {
            const double r = move_reward(k, buy_prices[t], sell_prices[t], g, battery);
            std::vector<char> previous(g.size(), 0);
            bool any = false;
            for (long j = g.lo; j <= g.hi; ++j) {
                if (!candidates[slot(j)] || !on_grid(j - k)) continue;
                const double prefix = best[t][slot(j - k)];
                if (prefix != kUnreachable && prefix + r + suffix >= threshold) {
                    previous[slot(j - k)] = 1;
                    any = true;
                }
            }
            if (!any) continue;
            plan.actions[t] = move_action(k, g);
            suffix += r;
            candidates = std::move(previous);
            chosen = true;
            break;
        }
        if (!chosen) throw InvariantError("dynamic program lost the optimal path at period " + std::to_string(t));
    }
    return plan;
}

namespace {

std::vector<double> level_prices(const quantile::QuantileForecast& forecast, double level) {
    std::vector<double> out(forecast.steps());
    const std::size_t j = forecast.grid().index_of(level);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = forecast.at(t, j);
    return out;
}

} // namespace

TradePlan ts2_plan(const quantile::QuantileForecast& forecast, const BatteryConfig& battery,
                   const Ts2Options& options) {
    if (options.pricing == Ts2Pricing::median) {
        const auto median = level_prices(forecast, 0.5);
        return ts2_plan(median, median, battery, options.soc_steps);
    }
    if (!(options.risk_level > 0.0 && options.risk_level < 0.5))
        throw ConfigError("risk_level must lie in (0, 0.5)");
    return ts2_plan(level_prices(forecast, 1.0 - options.risk_level),
                    level_prices(forecast, options.risk_level), battery, options.soc_steps);
}

TradePlan brute_force_plan(std::span<const double> buy_prices, std::span<const double> sell_prices,
                           const BatteryConfig& battery, std::size_t soc_steps) {
    check_prices(buy_prices, sell_prices);
    const std::size_t n = buy_prices.size();
    if (n > kBruteForceHorizon)
        throw ConfigError("exhaustive search is limited to " + std::to_string(kBruteForceHorizon) +
                          " periods, got " + std::to_string(n));
    const SocGrid g = make_grid(battery, soc_steps);
    TradePlan plan{std::vector<Action>(n)};
    if (n == 0 || g.trivial()) return plan;

    const auto moves = move_order(g);
    std::vector<long> path(n);
    std::vector<std::pair<std::vector<long>, double>> plans;
    std::function<void(std::size_t, long, double)> explore = [&](std::size_t t, long j, double cash) {
        if (t == n) {
            plans.emplace_back(path, cash);
            return;
        }
        for (const long k : moves) {
            if (j + k < g.lo || j + k > g.hi) continue;
            path[t] = k;
            explore(t + 1, j + k, cash + move_reward(k, buy_prices[t], sell_prices[t], g, battery));
        }
    };
    explore(0, 0, 0.0);

    double optimum = kUnreachable;
    for (const auto& [moves_taken, cash] : plans) optimum = std::max(optimum, cash);
    const double threshold = optimum - kTieSlack;

    // Earliest in the order that compares the last period first.
    const auto before = [&](const std::vector<long>& a, const std::vector<long>& b) {
        for (std::size_t t = n; t-- > 0;)
            if (a[t] != b[t]) return move_rank(a[t], g) < move_rank(b[t], g);
        return false;
    };
    const std::vector<long>* chosen = nullptr;
    for (const auto& [moves_taken, cash] : plans)
        if (cash >= threshold && (chosen == nullptr || before(moves_taken, *chosen))) chosen = &moves_taken;
    for (std::size_t t = 0; t < n; ++t) plan.actions[t] = move_action((*chosen)[t], g);
    return plan;
}

TradePlan brute_force_plan(std::span<const double> prices, const BatteryConfig& battery,
                           std::size_t soc_steps) {
    return brute_force_plan(prices, prices, battery, soc_steps);
}

Strategy parse_strategy(std::string_view name) {
    if (name == "ts1") return Strategy::ts1;
    if (name == "ts2") return Strategy::ts2;
    throw ConfigError("unknown trading strategy '" + std::string(name) + "' (expected ts1 or ts2)");
}

std::string_view to_string(Strategy strategy) { return strategy == Strategy::ts1 ? "ts1" : "ts2"; }

Execution parse_execution(std::string_view name) {
    if (name == "commit") return Execution::commit;
    if (name == "receding") return Execution::receding;
    throw ConfigError("unknown execution mode '" + std::string(name) + "' (expected commit or receding)");
}

std::string_view to_string(Execution execution) {
    return execution == Execution::commit ? "commit" : "receding";
}

namespace {

quantile::QuantileForecast slice_forecast(const quantile::QuantileForecast& f, std::size_t begin,
                                          std::size_t end) {
    const std::size_t w = f.grid().size();
    return quantile::QuantileForecast(
        f.grid(), std::vector<double>(f.values().begin() + static_cast<std::ptrdiff_t>(begin * w),
                                      f.values().begin() + static_cast<std::ptrdiff_t>(end * w)));
}

TradePlan plan_window(const quantile::QuantileForecast& window, const BatteryConfig& battery,
                      const StrategyConfig& config) {
    if (config.strategy == Strategy::ts1) {
        if (window.steps() < 2) return TradePlan{std::vector<Action>(window.steps())};
        return ts1_plan(window, battery, config.ts1);
    }
    return ts2_plan(window, battery, config.ts2);
}

} // namespace

TradeLedger simulate(const quantile::QuantileForecast& forecast, std::span<const double> realized,
                     const BatteryConfig& battery, const StrategyConfig& config) {
    battery.validate();
    if (config.horizon < 1) throw ConfigError("trading horizon must be >= 1");
    if (forecast.steps() != realized.size())
        throw ShapeError("forecast covers " + std::to_string(forecast.steps()) +
                         " periods, realized prices " + std::to_string(realized.size()));

    TradeLedger total;
    BatteryConfig state = battery;
    const std::size_t n = realized.size();
    const auto absorb = [&](const TradeLedger& part, std::size_t window_start) {
        for (auto r : part.records) {
            r.window_start = window_start;
            total.records.push_back(r);
        }
        state.initial_soc = part.final_soc;
    };

    for (std::size_t start = 0; start < n; start += config.horizon) {
        const std::size_t end = std::min(n, start + config.horizon);
        if (config.execution == Execution::commit) {
            const auto plan = plan_window(slice_forecast(forecast, start, end), state, config);
            absorb(settle(plan, realized.subspan(start, end - start), state, start), start);
            continue;
        }
        for (std::size_t t = start; t < end; ++t) {
            auto plan = plan_window(slice_forecast(forecast, t, end), state, config);
            plan.actions.resize(1);
            absorb(settle(plan, realized.subspan(t, 1), state, t), start);
        }
    }
    for (const auto& r : total.records) total.profit += r.cash;
    total.final_soc = state.initial_soc;
    return total;
}

} // namespace pepf::trading
