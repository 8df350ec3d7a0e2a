#include "hsp/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsp/errors.hpp"
#include "hsp/qp.hpp"
#include "hsp/stats.hpp"

namespace hsp {
namespace {

ReturnPanel head_rows(const ReturnPanel& panel, Eigen::Index rows) {
    ReturnPanel out;
    out.names = panel.names;
    out.dates.assign(panel.dates.begin(), panel.dates.begin() + rows);
    out.values = panel.values.topRows(rows);
    out.missing = panel.missing.topRows(rows);
    return out;
}

/// Feasible range of mu'w over the bounded simplex, by greedy filling.
std::pair<double, double> return_range(const Eigen::VectorXd& mu, const Bounds& bounds) {
    const Eigen::Index n = mu.size();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    auto fill = [&](bool maximize) {
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return maximize ? mu(a) > mu(b) : mu(a) < mu(b);
        });
        Eigen::VectorXd w = bounds.lower;
        double budget = 1.0 - w.sum();
        for (int i : order) {
            const double room = bounds.upper(i) - bounds.lower(i);
            const double add = std::min(room, budget);
            w(i) += add;
            budget -= add;
            if (budget <= 0.0) break;
        }
        return mu.dot(w);
    };
    return {fill(false), fill(true)};
}

int derived_min_history_impl(const BacktestConfig& cfg) {
    switch (cfg.method) {
        case Method::equal_weight: return 2;
        case Method::min_vol:
        case Method::max_sharpe:
        case Method::quad_utility:
        case Method::target_return:
        case Method::hrp: return cfg.covariance_window;
        case Method::cvar: return std::max(cfg.cvar_scenario_window, cfg.covariance_window);
        case Method::hsp:
            return std::max({cfg.hsp.selection_window,
                             cfg.hsp.sensitivity_window + cfg.hsp.sensitivity.lag,
                             cfg.hsp.covariance_window});
        case Method::hsp_paths: {
            const int series_rows = cfg.hsp_paths.base.sensitivity_window +
                                    cfg.hsp_paths.base.sensitivity.lag +
                                    29 * cfg.hsp_paths.stride;
            return std::max({cfg.hsp_paths.base.selection_window, series_rows,
                             cfg.hsp_paths.base.covariance_window});
        }
    }
    return 2;
}

const char* method_label(Method method) {
    switch (method) {
        case Method::equal_weight: return "1/N";
        case Method::min_vol: return "MinVol";
        case Method::max_sharpe: return "MaxSharpe";
        case Method::quad_utility: return "QuadUtility";
        case Method::target_return: return "TargetReturn";
        case Method::hrp: return "HRP";
        case Method::hsp: return "HSP";
        case Method::hsp_paths: return "HSP-Paths";
        case Method::cvar: return "CVaR";
    }
    return "?";
}

}  // namespace

int required_history(const BacktestConfig& cfg) {
    if (cfg.min_history > 0) return cfg.min_history;
    return derived_min_history_impl(cfg);
}

Metrics nav_metrics(const std::vector<double>& nav, int periods_per_year) {
    if (nav.size() < 2) fail(errc::too_short, "metrics need a NAV series of length >= 2");
    for (double v : nav)
        if (!(v > 0.0)) fail(errc::config_invalid, "NAV must stay positive");

    Metrics metrics;
    metrics.total_return = nav.back() / nav.front() - 1.0;

    const std::size_t t = nav.size() - 1;
    Eigen::VectorXd daily(static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < t; ++i)
        daily(static_cast<Eigen::Index>(i)) = nav[i + 1] / nav[i] - 1.0;
    const double mean = daily.mean();
    const double var = t > 1 ? (daily.array() - mean).square().sum() / static_cast<double>(t - 1)
                             : 0.0;
    metrics.annualized_vol = std::sqrt(var) * std::sqrt(static_cast<double>(periods_per_year));
    if (metrics.annualized_vol < 1e-12) {
        metrics.sharpe = 0.0;  // convention for flat NAV paths
        metrics.degenerate = true;
    } else {
        metrics.sharpe = mean * static_cast<double>(periods_per_year) / metrics.annualized_vol;
    }
    return metrics;
}

WeightVector method_weights(Method method, const ReturnPanel& history,
                            const ReturnPanel& driver_history, const BacktestConfig& cfg,
                            const std::optional<std::vector<std::string>>& fixed_drivers) {
    const Eigen::Index n = history.cols();
    const Bounds bounds = Bounds::uniform(n, cfg.lower_bound, cfg.upper_bound);
    if (bounds.lower.sum() > 1.0 + 1e-12 || bounds.upper.sum() < 1.0 - 1e-12)
        fail(errc::infeasible, "weight bounds cannot hold a fully invested portfolio");

    switch (method) {
        case Method::equal_weight: {
            WeightVector w;
            w.names = history.names;
            w.bounds = bounds;
            w.weights = clip_to_bounds(Eigen::VectorXd::Constant(n, 1.0 / n), bounds);
            return w;
        }
        case Method::min_vol: {
            const CovEstimate cov = covariance_of(history, cfg.covariance_window);
            const QpResult qp = solve_qp_simplex_box(cov.matrix, Eigen::VectorXd::Zero(n),
                                                     bounds.lower, bounds.upper);
            return WeightVector{history.names, qp.x, bounds};
        }
        case Method::quad_utility: {
            const CovEstimate cov = covariance_of(history, cfg.covariance_window);
            const Eigen::VectorXd mu =
                history.values.bottomRows(cfg.covariance_window).colwise().mean();
            const QpResult qp = solve_qp_simplex_box(0.5 * cfg.gamma * cov.matrix, -mu,
                                                     bounds.lower, bounds.upper);
            return WeightVector{history.names, qp.x, bounds};
        }
        case Method::target_return: {
            const CovEstimate cov = covariance_of(history, cfg.covariance_window);
            const Eigen::VectorXd mu =
                history.values.bottomRows(cfg.covariance_window).colwise().mean();
            const auto [lo, hi] = return_range(mu, bounds);
            double target = cfg.target_return != 0.0 ? cfg.target_return : mu.mean();
            target = std::clamp(target, lo, hi);
            const QpResult qp = solve_qp_simplex_box_target(
                cov.matrix, Eigen::VectorXd::Zero(n), bounds.lower, bounds.upper, mu, target);
            return WeightVector{history.names, qp.x, bounds};
        }
        case Method::max_sharpe: {
            const CovEstimate cov = covariance_of(history, cfg.covariance_window);
            const Eigen::VectorXd mu =
                history.values.bottomRows(cfg.covariance_window).colwise().mean();
            const auto [lo, hi] = return_range(mu, bounds);
            Eigen::VectorXd best;
            double best_sharpe = -std::numeric_limits<double>::infinity();
            const int grid = 24;
            for (int g = 0; g <= grid; ++g) {
                const double target = lo + (hi - lo) * static_cast<double>(g) / grid;
                const QpResult qp = solve_qp_simplex_box_target(
                    cov.matrix, Eigen::VectorXd::Zero(n), bounds.lower, bounds.upper, mu, target);
                const double vol = std::sqrt(std::max(qp.x.dot(cov.matrix * qp.x), 1e-18));
                const double sharpe = mu.dot(qp.x) / vol;
                if (sharpe > best_sharpe) {
                    best_sharpe = sharpe;
                    best = qp.x;
                }
            }
            return WeightVector{history.names, best, bounds};
        }
        case Method::hrp: {
            const DistanceMatrix d = correlation_distance(history, cfg.covariance_window);
            return allocate_from_distance(d, history, cfg.covariance_window,
                                          /*psd_repair=*/false, bounds);
        }
        case Method::cvar: {
            CvarProblem problem;
            problem.names = history.names;
            problem.scenarios = history.values.bottomRows(cfg.cvar_scenario_window);
            problem.alpha = cfg.cvar_alpha;
            problem.bounds = bounds;
            return cvar_optimize(problem).w;
        }
        case Method::hsp: {
            HspConfig hsp = cfg.hsp;
            hsp.bounds = bounds;
            hsp.covariance_window = cfg.covariance_window;
            return hsp_weights(history, driver_history, hsp, fixed_drivers);
        }
        case Method::hsp_paths: {
            PathHspConfig paths = cfg.hsp_paths;
            paths.base.bounds = bounds;
            paths.base.covariance_window = cfg.covariance_window;
            return path_dependent_hsp(history, driver_history, paths, fixed_drivers);
        }
    }
    fail(errc::config_invalid, "unknown method");
}

BacktestResult run_backtest(const ReturnPanel& assets, const ReturnPanel& drivers,
                            const BacktestConfig& cfg) {
    if (assets.has_missing()) fail(errc::missing_data, "asset panel has missing values");
    if (cfg.rebalance_stride < 1 || cfg.driver_update_stride < 1)
        fail(errc::config_invalid, "strides must be >= 1");
    const Eigen::Index t = assets.rows();
    const Eigen::Index needed = static_cast<Eigen::Index>(required_history(cfg));

    Eigen::Index first = needed;
    if (!cfg.start.empty()) first = std::max(first, assets.row_of(cfg.start));
    Eigen::Index last = t - 1;
    if (!cfg.end.empty()) last = std::min(last, assets.row_of(cfg.end));
    if (first > last)
        fail(errc::insufficient_history, "no tradable rows between start and end",
             {{"needed", std::to_string(needed)}, {"available", std::to_string(t)}});

    const bool needs_drivers = cfg.method == Method::hsp || cfg.method == Method::hsp_paths;
    if (needs_drivers && drivers.dates != assets.dates)
        fail(errc::shape_mismatch, "driver panel must share the asset date index");

    BacktestResult result;
    result.label = cfg.label.empty() ? method_label(cfg.method) : cfg.label;
    result.dates.push_back(assets.dates[static_cast<std::size_t>(first - 1)]);
    result.nav.push_back(cfg.initial_nav);

    Eigen::VectorXd holdings = Eigen::VectorXd::Zero(assets.cols());
    Eigen::VectorXd target_weights = Eigen::VectorXd::Zero(assets.cols());
    std::optional<std::vector<std::string>> cached_drivers;
    double nav = cfg.initial_nav;

    for (Eigen::Index row = first; row <= last; ++row) {
        const Eigen::Index since_start = row - first;
        if (since_start % cfg.rebalance_stride == 0) {
            const ReturnPanel history = head_rows(assets, row);
            const ReturnPanel driver_history =
                needs_drivers ? head_rows(drivers, row) : ReturnPanel{};
            if (needs_drivers &&
                (!cached_drivers || since_start % cfg.driver_update_stride == 0)) {
                // Re-select on driver-update dates, then hold the set fixed.
                const HspConfig& hsp = cfg.method == Method::hsp ? cfg.hsp : cfg.hsp_paths.base;
                const WindowSpec spec{history.dates.back(), hsp.selection_window, 0};
                const ReturnPanel sel_assets = slice_window(history, spec).current;
                const ReturnPanel sel_cands = slice_window(driver_history, spec).current;
                cached_drivers = select_drivers(sel_assets, sel_cands, hsp.selection).selected;
            }
            WeightVector w =
                method_weights(cfg.method, history, driver_history, cfg, cached_drivers);
            if (cfg.cost_bps > 0.0 && nav > 0.0) {
                const Eigen::VectorXd target_holdings = nav * w.weights;
                const double turnover = (target_holdings - holdings).cwiseAbs().sum();
                nav -= cfg.cost_bps / 1e4 * turnover;
            }
            target_weights = w.weights;
            holdings = nav * target_weights;
            result.rebalances.push_back(
                {assets.dates[static_cast<std::size_t>(row)], std::move(w)});
        }

        // Realize this row's returns.
        if (cfg.drift_weights) {
            holdings.array() *= 1.0 + assets.values.row(row).transpose().array();
            nav = holdings.sum();
        } else {
            nav *= 1.0 + target_weights.dot(assets.values.row(row).transpose());
            holdings = nav * target_weights;
        }
        if (!(nav > 0.0)) fail(errc::config_invalid, "NAV became non-positive");
        result.dates.push_back(assets.dates[static_cast<std::size_t>(row)]);
        result.nav.push_back(nav);
    }

    const Metrics metrics = nav_metrics(result.nav);
    result.total_return = metrics.total_return;
    result.annualized_vol = metrics.annualized_vol;
    result.sharpe = metrics.sharpe;
    result.degenerate_vol = metrics.degenerate;
    return result;
}

std::vector<BacktestResult> run_benchmarks(const ReturnPanel& assets, const BacktestConfig& cfg) {
    std::vector<BacktestResult> results;
    for (Method method : {Method::equal_weight, Method::min_vol, Method::max_sharpe,
                          Method::quad_utility, Method::target_return, Method::hrp}) {
        BacktestConfig bench = cfg;
        bench.method = method;
        bench.label.clear();
        results.push_back(run_backtest(assets, ReturnPanel{}, bench));
    }
    return results;
}

}  // namespace hsp
