#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "hsp/driver_selection.hpp"
#include "hsp/market_data.hpp"
#include "hsp/sensitivity_geometry.hpp"
#include "hsp/sensitivity_models.hpp"

namespace hsp {

/// Per-asset weight limits; an unbounded side uses +-infinity.
struct Bounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    static Bounds uniform(Eigen::Index n, double lo, double hi);
    static Bounds unbounded(Eigen::Index n);
    bool finite() const;
};

struct WeightVector {
    std::vector<std::string> names;
    Eigen::VectorXd weights;
    Bounds bounds;
};

struct CovEstimate {
    std::vector<std::string> names;
    Eigen::MatrixXd matrix;
    int window = 0;
};

CovEstimate covariance_of(const ReturnPanel& panel, int window);

/// HRP-style top-down split of the leaf-ordered asset list. Cluster risk uses
/// inverse-variance weights inside each half; the halves are scaled by
/// alpha_1 = 1 - sigma_1/(sigma_1+sigma_2), alpha_2 = 1 - alpha_1.
Eigen::VectorXd recursive_bisection_weights(const Eigen::MatrixXd& cov,
                                            const std::vector<int>& leaf_order);

/// Same, then optional clipping into bounds with proportional redistribution.
WeightVector recursive_bisection(const CovEstimate& cov, const std::vector<int>& leaf_order,
                                 const std::optional<Bounds>& bounds = std::nullopt);

/// Clip into bounds and redistribute the excess proportionally among
/// unclipped names, iterating to a fixed point.
Eigen::VectorXd clip_to_bounds(const Eigen::VectorXd& weights, const Bounds& bounds);

struct HspConfig {
    SelectionConfig selection;
    SensitivityConfig sensitivity;
    // The Higham clip of a hollow distance matrix flattens cluster structure
    // (its negative eigenmode carries the geometry), so the repair is off by
    // default and opt-in for the clustering stage.
    bool psd_repair = false;
    std::optional<Bounds> bounds;
    int selection_window = 126;  // rows used for driver selection
    int sensitivity_window = 63; // rows used for model fitting
    int covariance_window = 63;  // trailing rows for cluster covariance
    std::optional<DistanceMatrix> distance_override;  // test hook
};

/// Distance-to-weights stage shared by HSP and HRP: PSD repair (optional),
/// single linkage, leaf order, recursive bisection on the trailing covariance.
WeightVector allocate_from_distance(const DistanceMatrix& distance, const ReturnPanel& assets,
                                    int covariance_window, bool psd_repair,
                                    const std::optional<Bounds>& bounds);

/// Full Hierarchical Sensitivity Parity pipeline on trailing windows of the
/// given panels. `drivers` holds candidate series; selection picks from them
/// unless cfg.selection is bypassed by fixed_drivers.
WeightVector hsp_weights(const ReturnPanel& assets, const ReturnPanel& drivers,
                         const HspConfig& cfg,
                         const std::optional<std::vector<std::string>>& fixed_drivers =
                             std::nullopt);

/// w* = D^-1 1 / (1' D^-1 1); optional eigenvalue-cutoff pseudoinverse.
WeightVector closed_form_distance_weights(const DistanceMatrix& d, bool pseudoinverse = false);

struct QpWeightsResult {
    WeightVector w;
    double objective = 0.0;
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// minimize w' (Sigma + lambda D) w (or w' D w when cov is absent) on the
/// bounded simplex; without bounds returns the stationary point.
QpWeightsResult qp_distance_weights(const DistanceMatrix& d, const std::optional<Bounds>& bounds,
                                    double lambda, const CovEstimate* cov = nullptr);

DistanceMatrix regularize_distance(const DistanceMatrix& d, double lambda_reg);

struct CvarProblem {
    std::vector<std::string> names;
    Eigen::MatrixXd scenarios;  // T x n asset returns
    double alpha = 0.95;
    Bounds bounds;
};

struct CvarResult {
    WeightVector w;
    double cvar = 0.0;
    double var_threshold = 0.0;   // zeta at the optimum
    double lp_objective = 0.0;
    double optimality_gap = 0.0;  // |primal recompute - LP objective|
    int iterations = 0;
};

/// Rockafellar-Uryasev CVaR minimization, solved exactly as a linear program.
CvarResult cvar_optimize(const CvarProblem& problem);

Eigen::VectorXd map_expected_return(const SensitivityMatrix& s,
                                    const Eigen::VectorXd& driver_forecast);
CovEstimate map_covariance(const SensitivityMatrix& s, const Eigen::MatrixXd& driver_cov,
                           const Eigen::VectorXd& residual_var);
Eigen::VectorXd map_volatility(const SensitivityMatrix& s, const Eigen::MatrixXd& driver_cov);
Eigen::VectorXd directional_attribution(const SensitivityMatrix& s, const WeightVector& w,
                                        const Eigen::VectorXd& driver_vols);

struct CopulaInputs {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;
    Eigen::MatrixXd correlation;
};

struct CopulaVarResult {
    double var = 0.0;
    double sample_mean = 0.0;
    double sample_std = 0.0;
    int n_samples = 0;
};

/// Gaussian-copula Monte Carlo VaR with normal marginals, deterministic for a
/// fixed seed. VaR_alpha is minus the (1-alpha) quantile of simulated
/// portfolio returns.
CopulaVarResult copula_var(const CopulaInputs& inputs, const Eigen::VectorXd& w, double alpha,
                           int n_samples, std::uint64_t seed);

/// Correlation distance sqrt(0.5 (1 - rho)) used by the HRP benchmark.
DistanceMatrix correlation_distance(const ReturnPanel& assets, int window);

}  // namespace hsp
