#pragma once

#include <Eigen/Dense>

namespace hsp {

/// Pearson correlation. Throws degenerate_series if either input has zero
/// variance; `label` names the offending series in the error.
double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
               const char* label_x = "x", const char* label_y = "y");

struct OlsFit {
    Eigen::VectorXd coef;     // intercept first when with_intercept
    Eigen::VectorXd fitted;
    Eigen::VectorXd residuals;
    double residual_variance;  // mean squared residual
};

/// Least squares with a ridge term on the normal equations.
OlsFit ridge_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                 double ridge, bool with_intercept);

/// Sample covariance (divides by T-1) of panel columns.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows);

/// Population covariance of two equal-length vectors: E[xy] - E[x]E[y].
double population_covariance(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

}  // namespace hsp
