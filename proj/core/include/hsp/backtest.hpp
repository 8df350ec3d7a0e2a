#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsp/allocation.hpp"
#include "hsp/market_data.hpp"
#include "hsp/sde_paths.hpp"

namespace hsp {

enum class Method {
    equal_weight,
    min_vol,
    max_sharpe,
    quad_utility,
    target_return,
    hrp,
    hsp,
    hsp_paths,
    cvar,
};

struct BacktestConfig {
    Method method = Method::hsp;
    int rebalance_stride = 21;      // rows between weight updates
    int driver_update_stride = 126; // rows between driver re-selection
    double lower_bound = 0.03;
    double upper_bound = 0.10;
    std::string start;  // first tradable date (default: first feasible row)
    std::string end;    // last date (default: last row)
    double initial_nav = 100.0;
    int covariance_window = 63;
    int min_history = 0;        // 0 = derived from the method's windows
    bool drift_weights = true;  // buy-and-hold between rebalances
    double cost_bps = 0.0;      // reserved; excluded from acceptance runs
    double gamma = 1.0;         // quadratic utility risk aversion
    double target_return = 0.0; // per-period target for target_return
    double cvar_alpha = 0.95;
    int cvar_scenario_window = 126;
    HspConfig hsp;
    PathHspConfig hsp_paths;
    std::string label;
};

struct RebalanceRecord {
    std::string date;
    WeightVector weights;
};

struct BacktestResult {
    std::string label;
    std::vector<std::string> dates;  // NAV dates (first = inception)
    std::vector<double> nav;
    std::vector<RebalanceRecord> rebalances;
    double total_return = 0.0;
    double annualized_vol = 0.0;
    double sharpe = 0.0;
    bool degenerate_vol = false;
};

struct Metrics {
    double total_return = 0.0;
    double annualized_vol = 0.0;
    double sharpe = 0.0;
    bool degenerate = false;
};

/// Return/vol/Sharpe of a NAV path: total return NAV_f/NAV_0 - 1, vol as
/// stdev of daily NAV returns annualized by sqrt(periods), Sharpe as
/// annualized mean daily return over vol (zero risk-free, 0 when vol is 0).
Metrics nav_metrics(const std::vector<double>& nav, int periods_per_year = 252);

/// Rows of history a method needs before its first rebalance (cfg.min_history
/// when set, otherwise derived from the method's windows).
int required_history(const BacktestConfig& cfg);

/// Walk-forward engine: weights at each rebalance use data strictly before
/// the rebalance date; NAV compounds realized returns; holdings are fixed
/// between rebalances unless drift_weights is false (daily re-weighting).
BacktestResult run_backtest(const ReturnPanel& assets, const ReturnPanel& drivers,
                            const BacktestConfig& cfg);

/// The paper's benchmark set: 1/N, min-vol, max-Sharpe, quadratic utility,
/// target-return min-vol, and HRP on correlation distances.
std::vector<BacktestResult> run_benchmarks(const ReturnPanel& assets, const BacktestConfig& cfg);

/// Single-date weights for any method, using only the rows of `assets` /
/// `drivers` that precede the decision (the caller truncates).
WeightVector method_weights(Method method, const ReturnPanel& history,
                            const ReturnPanel& driver_history, const BacktestConfig& cfg,
                            const std::optional<std::vector<std::string>>& fixed_drivers);

}  // namespace hsp
