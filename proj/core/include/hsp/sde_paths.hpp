#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hsp/allocation.hpp"
#include "hsp/market_data.hpp"
#include "hsp/sensitivity_geometry.hpp"
#include "hsp/sensitivity_models.hpp"

namespace hsp {

enum class SdeModel { vasicek, hull_white, arima_ar1, local_vol_linear };

struct SdeParams {
    SdeModel model = SdeModel::vasicek;
    double kappa = 0.0;   // mean-reversion speed (per year)
    double theta = 0.0;   // long-run level
    double sigma = 0.0;   // diffusion scale (per sqrt(year))
    double dt = 1.0 / 252.0;
    std::vector<double> theta_t;  // hull_white level path
    double vol_alpha = 0.0;       // local_vol_linear: sigma_t = alpha + beta t
    double vol_beta = 0.0;
    bool explosive = false;  // |AR slope| exceeded 1; kappa floored at 0
};

/// AR(1)-based calibration: regress S_{t+1} on S_t and map
/// kappa = (1 - slope)/dt, theta = intercept/(kappa dt), sigma = resid_sd/sqrt(dt).
SdeParams calibrate(const std::vector<double>& series, SdeModel model, double dt,
                    int hull_white_span = 10);

/// Euler-Maruyama paths, one row per path. Bit-reproducible for a fixed
/// (params, s0, horizon, n_paths, seed); each path draws from its own
/// substream so the result does not depend on evaluation order.
Eigen::MatrixXd simulate(const SdeParams& params, double s0, int horizon, int n_paths,
                         std::uint64_t seed);

struct PathEnsemble {
    int n_paths = 0;
    int horizon = 0;
    std::vector<std::string> assets;
    std::vector<std::string> drivers;
    std::vector<Eigen::MatrixXd> paths;  // per (asset, driver) pair, asset-major
    std::vector<SdeParams> params;
    std::uint64_t seed = 0;

    Eigen::Index pair_index(Eigen::Index asset, Eigen::Index driver) const {
        return asset * static_cast<Eigen::Index>(drivers.size()) + driver;
    }
};

/// Calibrate one SDE per (asset, driver) sensitivity series and simulate
/// forward from the last observed value.
PathEnsemble simulate_ensemble(const Eigen::MatrixXd& sensitivity_series,
                               const std::vector<std::string>& assets,
                               const std::vector<std::string>& drivers, SdeModel model, double dt,
                               int horizon, int n_paths, std::uint64_t seed,
                               bool zero_sigma = false);

/// Per-step distance matrices: average sensitivities across paths, then
/// pairwise Euclidean distances over assets.
std::vector<DistanceMatrix> trajectory_distance_matrices(const PathEnsemble& ensemble);

/// Sensitivity history manufactured by refitting on a sliding window
/// (stride rows apart). Columns are (asset, driver) pairs, asset-major.
Eigen::MatrixXd sensitivity_series(const ReturnPanel& assets, const ReturnPanel& drivers,
                                   const SensitivityConfig& cfg, int window, int stride = 1);

struct PathHspConfig {
    HspConfig base;
    SdeModel model = SdeModel::vasicek;
    double dt = 1.0 / 252.0;
    int horizon = 21;
    int n_paths = 500;
    int stride = 1;
    std::uint64_t seed = 0;
    bool force_zero_sigma = false;  // validation switch: deterministic drift only
};

/// HSP on the cumulative distance matrix aggregated over simulated future
/// sensitivity trajectories.
WeightVector path_dependent_hsp(const ReturnPanel& assets, const ReturnPanel& drivers,
                                const PathHspConfig& cfg,
                                const std::optional<std::vector<std::string>>& fixed_drivers =
                                    std::nullopt);

}  // namespace hsp
