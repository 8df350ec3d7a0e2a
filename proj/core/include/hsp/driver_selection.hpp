#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "hsp/market_data.hpp"

namespace hsp {

enum class SelectionMode { rccp_rank, rccp_threshold, greedy_gs, dp_gs, max_likelihood };

struct SelectionConfig {
    int m = 1;                 // drivers to select
    double epsilon = 0.5;      // relevance threshold on |corr|
    double t0 = 0.0;           // lag-0 threshold (threshold mode)
    double t1 = 0.0;           // lag-1 threshold (threshold mode)
    SelectionMode mode = SelectionMode::rccp_rank;
    std::vector<std::string> exclude;
    bool collinearity_screen = true;
    double collinearity_limit = 0.999;
    bool exhaustive_ml = false;  // exhaustive subset search for max_likelihood, K <= 15
    double sccs_bound = std::numeric_limits<double>::quiet_NaN();  // reported, never enforced
};

/// Per-candidate evidence and the resulting ranking.
///
/// In rank mode: relevance(k,i) = 1 iff |corr(k,i)| >= epsilon,
/// repeatedness(k) = sum_i relevance(k,i), strength(k) = sum_i |corr|*relevance.
/// In threshold mode relevance additionally requires the lag-1 correlation to
/// clear t1 (corr_lag1 is filled in that mode only).
struct SelectionScorecard {
    SelectionMode mode = SelectionMode::rccp_rank;
    std::vector<std::string> candidates;
    std::vector<std::string> assets;
    Eigen::MatrixXd corr;       // K x n, lag 0
    Eigen::MatrixXd corr_lag1;  // K x n, threshold mode only (otherwise 0x0)
    Eigen::MatrixXi relevance;  // K x n in {0,1}
    Eigen::VectorXi repeatedness;
    Eigen::VectorXd strength;
    std::vector<std::string> ranking;   // all candidates, best first
    std::vector<std::string> selected;  // top m after exclusions
    double objective = std::numeric_limits<double>::quiet_NaN();  // G(S) when computed
    double constraint_bound = std::numeric_limits<double>::quiet_NaN();  // |S| * epsilon
    bool constraint_satisfied = true;
    std::vector<std::string> flagged_collinear;
};

/// Rank-mode scorecard straight from a candidate-by-asset correlation matrix.
SelectionScorecard scorecard_from_correlations(const Eigen::MatrixXd& corr,
                                               const std::vector<std::string>& candidates,
                                               const std::vector<std::string>& assets,
                                               const SelectionConfig& cfg);

SelectionScorecard select_rccp_rank(const ReturnPanel& assets, const ReturnPanel& candidates,
                                    const SelectionConfig& cfg);

SelectionScorecard select_rccp_threshold(const ReturnPanel& assets, const ReturnPanel& candidates,
                                         const SelectionConfig& cfg);

/// Screen-off objective G(S): sum over ordered asset pairs of
/// |E[Yi Yj | S] - E[Yi | S] E[Yj | S]| with the conditional expectations
/// estimated by ridge regression on the drivers in `subset`. Under the linear
/// estimator this equals the (population) covariance of fitted values per
/// pair, summed in absolute value.
double score_gs(const ReturnPanel& assets, const std::vector<std::string>& subset,
                const ReturnPanel& candidates);

/// Companion diagnostic: total |covariance of regression residuals| over
/// ordered asset pairs. Small when `subset` screens off the co-movement.
double residual_dependence(const ReturnPanel& assets, const std::vector<std::string>& subset,
                           const ReturnPanel& candidates);

SelectionScorecard select_greedy_gs(const ReturnPanel& assets, const ReturnPanel& candidates,
                                    const SelectionConfig& cfg);

SelectionScorecard select_dp_gs(const ReturnPanel& assets, const ReturnPanel& candidates,
                                const SelectionConfig& cfg);

/// Linear common-cause model fitted for one candidate subset.
struct MlCauseModel {
    std::vector<std::string> causes;
    Eigen::MatrixXd alpha;        // n_assets x n_causes
    Eigen::VectorXd noise_var;    // per asset
    Eigen::VectorXd cause_var;    // per cause
    Eigen::VectorXd cause_mean;   // per cause
    Eigen::VectorXd asset_var;    // implied sigma_X^2
    Eigen::MatrixXd implied_corr; // n x n from shared causes
    double log_likelihood = 0.0;
};

MlCauseModel fit_ml_cause_model(const ReturnPanel& assets, const ReturnPanel& candidates,
                                const std::vector<std::string>& subset);

/// Log-likelihood of the asset observations under a fitted model, means
/// conditioned on the observed cause paths.
double ml_log_likelihood(const MlCauseModel& model, const Eigen::MatrixXd& asset_rows,
                         const Eigen::MatrixXd& cause_rows);

SelectionScorecard select_max_likelihood(const ReturnPanel& assets, const ReturnPanel& candidates,
                                         const SelectionConfig& cfg);

/// Dispatch on cfg.mode.
SelectionScorecard select_drivers(const ReturnPanel& assets, const ReturnPanel& candidates,
                                  const SelectionConfig& cfg);

}  // namespace hsp
