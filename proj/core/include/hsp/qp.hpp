#pragma once

#include <Eigen/Dense>

namespace hsp {

/// Euclidean projection onto { x : sum x = 1, lower <= x <= upper }.
/// Throws infeasible when the box cannot reach the simplex.
Eigen::VectorXd project_simplex_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                                    const Eigen::VectorXd& upper);

struct QpOptions {
    double kkt_tol = 1e-6;
    int max_iterations = 100000;
};

struct QpResult {
    Eigen::VectorXd x;
    double objective = 0.0;      // x' M x + q' x
    double kkt_residual = 0.0;
    int iterations = 0;
};

/// minimize x' M x + q' x  subject to  sum x = 1, lower <= x <= upper.
/// Accelerated projected gradient with restart; stops at the KKT tolerance.
QpResult solve_qp_simplex_box(const Eigen::MatrixXd& m, const Eigen::VectorXd& q,
                              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const QpOptions& options = {});

/// Same objective with one extra linear equality a' x = target, handled by
/// Dykstra alternation between the box-simplex set and the hyperplane.
QpResult solve_qp_simplex_box_target(const Eigen::MatrixXd& m, const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                     const Eigen::VectorXd& a, double target,
                                     const QpOptions& options = {});

/// Stationary point of x' M x on { sum x = 1 } via the bordered KKT system.
Eigen::VectorXd qp_stationary_point(const Eigen::MatrixXd& m);

}  // namespace hsp
