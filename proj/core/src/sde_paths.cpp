#include "hsp/sde_paths.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "hsp/errors.hpp"
#include "hsp/rng.hpp"
#include "hsp/stats.hpp"

namespace hsp {
namespace {

struct Ar1Fit {
    double slope = 0.0;
    double intercept = 0.0;
    double resid_sd = 0.0;
    bool degenerate = false;  // regressor had no variance
};

Ar1Fit ar1_fit(const std::vector<double>& series) {
    const std::size_t t = series.size();
    Eigen::VectorXd x(t - 1), y(t - 1);
    for (std::size_t i = 0; i + 1 < t; ++i) {
        x(static_cast<Eigen::Index>(i)) = series[i];
        y(static_cast<Eigen::Index>(i)) = series[i + 1];
    }
    Ar1Fit fit;
    const double x_mean = x.mean();
    const double var_x = (x.array() - x_mean).square().sum();
    if (var_x <= 1e-24) {
        fit.degenerate = true;
        fit.slope = 0.0;
        fit.intercept = y.mean();
    } else {
        fit.slope = (x.array() - x_mean).matrix().dot((y.array() - y.mean()).matrix()) / var_x;
        fit.intercept = y.mean() - fit.slope * x_mean;
    }
    const Eigen::VectorXd resid = y - (fit.slope * x).array().matrix() -
                                  Eigen::VectorXd::Constant(y.size(), fit.intercept);
    fit.resid_sd = std::sqrt(resid.squaredNorm() / static_cast<double>(resid.size()));
    return fit;
}

}  // namespace

SdeParams calibrate(const std::vector<double>& series, SdeModel model, double dt,
                    int hull_white_span) {
    if (series.size() < 30)
        fail(errc::too_short, "calibration needs >= 30 observations",
             {{"length", std::to_string(series.size())}});
    for (double v : series)
        if (!std::isfinite(v)) fail(errc::config_invalid, "calibration series has non-finite values");
    if (!(dt > 0.0)) fail(errc::config_invalid, "dt must be positive");
    if (model == SdeModel::arima_ar1) dt = 1.0;  // AR(1) works in step units

    const Ar1Fit fit = ar1_fit(series);

    SdeParams params;
    params.model = model;
    params.dt = dt;
    params.explosive = std::abs(fit.slope) > 1.0 + 1e-6;

    double kappa = (1.0 - fit.slope) / dt;
    if (kappa < 0.0) kappa = 0.0;  // floored, reported via `explosive`
    params.kappa = kappa;
    const double mean_level =
        std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
    params.theta = kappa * dt > 1e-12 ? fit.intercept / (kappa * dt) : mean_level;
    params.sigma = fit.resid_sd / std::sqrt(dt);

    if (model == SdeModel::hull_white) {
        const int span = std::max(1, hull_white_span);
        params.theta_t.resize(series.size());
        double running = 0.0;
        for (std::size_t i = 0; i < series.size(); ++i) {
            running += series[i];
            if (i >= static_cast<std::size_t>(span)) running -= series[i - span];
            params.theta_t[i] = running / std::min<double>(span, static_cast<double>(i + 1));
        }
    }

    if (model == SdeModel::local_vol_linear) {
        // sigma_t = alpha + beta t from |residual| / (|S_t| sqrt(dt) E|z|).
        const double abs_z = std::sqrt(2.0 / std::numbers::pi);
        std::vector<double> times, levels;
        for (std::size_t i = 0; i + 1 < series.size(); ++i) {
            if (std::abs(series[i]) < 1e-12) continue;
            const double resid =
                series[i + 1] - series[i] * (1.0 - params.kappa * dt);
            times.push_back(static_cast<double>(i) * dt);
            levels.push_back(std::abs(resid) / (std::abs(series[i]) * std::sqrt(dt) * abs_z));
        }
        if (times.size() >= 2) {
            Eigen::MatrixXd design(static_cast<Eigen::Index>(times.size()), 1);
            Eigen::VectorXd target(static_cast<Eigen::Index>(times.size()));
            for (std::size_t i = 0; i < times.size(); ++i) {
                design(static_cast<Eigen::Index>(i), 0) = times[i];
                target(static_cast<Eigen::Index>(i)) = levels[i];
            }
            const OlsFit vol_fit = ridge_ols(design, target, 1e-12, true);
            params.vol_alpha = vol_fit.coef(0);
            params.vol_beta = vol_fit.coef(1);
        } else {
            params.vol_alpha = params.sigma;
            params.vol_beta = 0.0;
        }
    }
    return params;
}

Eigen::MatrixXd simulate(const SdeParams& params, double s0, int horizon, int n_paths,
                         std::uint64_t seed) {
    if (horizon < 1) fail(errc::config_invalid, "horizon must be >= 1");
    if (n_paths < 1) fail(errc::config_invalid, "n_paths must be >= 1");
    const double dt = params.model == SdeModel::arima_ar1 ? 1.0 : params.dt;
    const double sqrt_dt = std::sqrt(dt);
    if (params.model == SdeModel::hull_white &&
        params.theta_t.size() < static_cast<std::size_t>(horizon))
        fail(errc::config_invalid, "hull_white theta_t shorter than the horizon",
             {{"theta_t", std::to_string(params.theta_t.size())},
              {"horizon", std::to_string(horizon)}});

    const std::uint64_t base = CounterRng::stream_of("sde-simulate");
    Eigen::MatrixXd paths(n_paths, horizon);
    for (int p = 0; p < n_paths; ++p) {
        CounterRng rng(seed, CounterRng::substream(base, static_cast<std::uint64_t>(p)));
        double s = s0;
        for (int step = 0; step < horizon; ++step) {
            const double z = rng.next_normal();
            switch (params.model) {
                case SdeModel::vasicek:
                case SdeModel::arima_ar1:
                    s = s + params.kappa * (params.theta - s) * dt + params.sigma * sqrt_dt * z;
                    break;
                case SdeModel::hull_white:
                    s = s +
                        params.kappa * (params.theta_t[static_cast<std::size_t>(step)] - s) * dt +
                        params.sigma * sqrt_dt * z;
                    break;
                case SdeModel::local_vol_linear: {
                    const double vol =
                        params.vol_alpha + params.vol_beta * static_cast<double>(step) * dt;
                    s = s * (1.0 - params.kappa * dt) + s * vol * sqrt_dt * z;
                    break;
                }
            }
            if (!std::isfinite(s)) fail(errc::nonfinite_loss, "simulated path diverged");
            paths(p, step) = s;
        }
    }
    return paths;
}

PathEnsemble simulate_ensemble(const Eigen::MatrixXd& sensitivity_series,
                               const std::vector<std::string>& assets,
                               const std::vector<std::string>& drivers, SdeModel model, double dt,
                               int horizon, int n_paths, std::uint64_t seed, bool zero_sigma) {
    const Eigen::Index pairs =
        static_cast<Eigen::Index>(assets.size()) * static_cast<Eigen::Index>(drivers.size());
    if (sensitivity_series.cols() != pairs)
        fail(errc::shape_mismatch, "sensitivity series width must equal assets x drivers");

    PathEnsemble ensemble;
    ensemble.n_paths = n_paths;
    ensemble.horizon = horizon;
    ensemble.assets = assets;
    ensemble.drivers = drivers;
    ensemble.seed = seed;
    ensemble.paths.reserve(static_cast<std::size_t>(pairs));
    ensemble.params.reserve(static_cast<std::size_t>(pairs));
    for (Eigen::Index pair = 0; pair < pairs; ++pair) {
        std::vector<double> series(static_cast<std::size_t>(sensitivity_series.rows()));
        for (Eigen::Index r = 0; r < sensitivity_series.rows(); ++r)
            series[static_cast<std::size_t>(r)] = sensitivity_series(r, pair);
        SdeParams params = calibrate(series, model, dt);
        if (zero_sigma) {
            params.sigma = 0.0;
            params.vol_alpha = 0.0;
            params.vol_beta = 0.0;
        }
        const double s0 = series.back();
        ensemble.paths.push_back(
            simulate(params, s0, horizon, n_paths,
                     CounterRng::substream(seed, static_cast<std::uint64_t>(pair))));
        ensemble.params.push_back(std::move(params));
    }
    return ensemble;
}

std::vector<DistanceMatrix> trajectory_distance_matrices(const PathEnsemble& ensemble) {
    const Eigen::Index n = static_cast<Eigen::Index>(ensemble.assets.size());
    const Eigen::Index m = static_cast<Eigen::Index>(ensemble.drivers.size());
    if (ensemble.paths.size() != static_cast<std::size_t>(n * m))
        fail(errc::shape_mismatch, "ensemble path list does not match assets x drivers");

    std::vector<DistanceMatrix> matrices;
    matrices.reserve(static_cast<std::size_t>(ensemble.horizon));
    for (int step = 0; step < ensemble.horizon; ++step) {
        SensitivityMatrix sens;
        sens.assets = ensemble.assets;
        sens.drivers = ensemble.drivers;
        sens.values.resize(n, m);
        for (Eigen::Index a = 0; a < n; ++a)
            for (Eigen::Index d = 0; d < m; ++d)
                sens.values(a, d) =
                    ensemble.paths[static_cast<std::size_t>(ensemble.pair_index(a, d))]
                        .col(step)
                        .mean();
        matrices.push_back(sensitivity_distance(sens));
    }
    return matrices;
}

Eigen::MatrixXd sensitivity_series(const ReturnPanel& assets, const ReturnPanel& drivers,
                                   const SensitivityConfig& cfg, int window, int stride) {
    if (assets.dates != drivers.dates)
        fail(errc::shape_mismatch, "asset and driver panels must share the date index");
    if (stride < 1) fail(errc::config_invalid, "stride must be >= 1");
    const Eigen::Index t = assets.rows();
    const Eigen::Index fit_rows = window + cfg.lag;
    if (t < fit_rows) fail(errc::insufficient_history, "panel shorter than one fitting window");

    const Eigen::Index steps = (t - fit_rows) / stride + 1;
    Eigen::MatrixXd series(steps, assets.cols() * drivers.cols());
    for (Eigen::Index s = 0; s < steps; ++s) {
        const Eigen::Index first = s * stride;
        ReturnPanel asset_win;
        asset_win.names = assets.names;
        asset_win.dates.assign(assets.dates.begin() + first,
                               assets.dates.begin() + first + fit_rows);
        asset_win.values = assets.values.middleRows(first, fit_rows);
        asset_win.missing = assets.missing.middleRows(first, fit_rows);
        ReturnPanel driver_win = asset_win;
        driver_win.names = drivers.names;
        driver_win.values = drivers.values.middleRows(first, fit_rows);
        driver_win.missing = drivers.missing.middleRows(first, fit_rows);
        const SensitivityMatrix sens = fit_sensitivities(asset_win, driver_win, cfg);
        for (Eigen::Index a = 0; a < sens.values.rows(); ++a)
            for (Eigen::Index d = 0; d < sens.values.cols(); ++d)
                series(s, a * drivers.cols() + d) = sens.values(a, d);
    }
    return series;
}

WeightVector path_dependent_hsp(const ReturnPanel& assets, const ReturnPanel& drivers,
                                const PathHspConfig& cfg,
                                const std::optional<std::vector<std::string>>& fixed_drivers) {
    std::vector<std::string> selected;
    if (fixed_drivers) {
        selected = *fixed_drivers;
    } else {
        const WindowSpec spec{assets.dates.back(), cfg.base.selection_window, 0};
        const ReturnPanel sel_assets = slice_window(assets, spec).current;
        const ReturnPanel sel_candidates = slice_window(drivers, spec).current;
        selected = select_drivers(sel_assets, sel_candidates, cfg.base.selection).selected;
    }
    if (selected.empty()) fail(errc::empty_selection, "no common drivers selected");
    const ReturnPanel chosen = drivers.select_columns(selected);

    const Eigen::MatrixXd series = sensitivity_series(
        assets, chosen, cfg.base.sensitivity, cfg.base.sensitivity_window, cfg.stride);
    const PathEnsemble ensemble =
        simulate_ensemble(series, assets.names, selected, cfg.model, cfg.dt, cfg.horizon,
                          cfg.n_paths, cfg.seed, cfg.force_zero_sigma);
    const std::vector<DistanceMatrix> steps = trajectory_distance_matrices(ensemble);
    const DistanceMatrix cumulative = aggregate_trajectory(steps, TrajectoryAggregate::cumulative);
    return allocate_from_distance(cumulative, assets, cfg.base.covariance_window,
                                  cfg.base.psd_repair, cfg.base.bounds);
}

}  // namespace hsp
