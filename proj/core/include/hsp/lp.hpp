#pragma once

#include <Eigen/Dense>

namespace hsp {

/// Dense linear program
///   minimize c'x  subject to  a_eq x = b_eq, a_ub x <= b_ub, lower <= x <= upper.
/// Infinite bounds are allowed (free variables use +-inf).
struct LpProblem {
    Eigen::MatrixXd a_eq;   // may have 0 rows
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd a_ub;   // may have 0 rows
    Eigen::VectorXd b_ub;
    Eigen::VectorXd c;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
};

struct LpSolution {
    Eigen::VectorXd x;
    double objective = 0.0;
    Eigen::VectorXd duals_eq;  // one per equality row
    Eigen::VectorXd duals_ub;  // one per inequality row
    int iterations = 0;
};

/// Two-phase bounded-variable revised simplex. Throws infeasible /
/// singular_matrix on pathological inputs; unbounded problems throw
/// config_invalid.
LpSolution solve_lp(const LpProblem& problem, double tol = 1e-9);

}  // namespace hsp
