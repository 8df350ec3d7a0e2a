#include "hsp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsp/errors.hpp"

namespace hsp {
namespace {

double clamp_sum(const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                 const Eigen::VectorXd& upper, double tau, Eigen::VectorXd* out) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double x = std::clamp(v(i) - tau, lower(i), upper(i));
        if (out) (*out)(i) = x;
        sum += x;
    }
    return sum;
}

/// KKT residual for min x'Mx + q'x on the box-simplex set.
double kkt_residual(const Eigen::MatrixXd& m, const Eigen::VectorXd& q, const Eigen::VectorXd& x,
                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    const Eigen::VectorXd g = 2.0 * (m * x) + q;
    const double scale = 1.0 + g.cwiseAbs().maxCoeff();
    const double active_tol = 1e-10 * scale;

    double lambda = 0.0;
    int free_count = 0;
    double min_lower_g = std::numeric_limits<double>::infinity();
    double max_upper_g = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const bool at_lower = x(i) <= lower(i) + active_tol;
        const bool at_upper = x(i) >= upper(i) - active_tol;
        if (!at_lower && !at_upper) {
            lambda += g(i);
            ++free_count;
        } else if (at_lower) {
            min_lower_g = std::min(min_lower_g, g(i));
        } else {
            max_upper_g = std::max(max_upper_g, g(i));
        }
    }
    if (free_count > 0) {
        lambda /= free_count;
    } else {
        lambda = 0.5 * (std::min(min_lower_g, max_upper_g) + std::max(min_lower_g, max_upper_g));
    }

    double residual = std::abs(x.sum() - 1.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const bool at_lower = x(i) <= lower(i) + active_tol;
        const bool at_upper = x(i) >= upper(i) - active_tol;
        if (!at_lower && !at_upper)
            residual = std::max(residual, std::abs(g(i) - lambda));
        else if (at_lower)
            residual = std::max(residual, std::max(0.0, lambda - g(i)));
        else
            residual = std::max(residual, std::max(0.0, g(i) - lambda));
    }
    return residual;
}

double lipschitz_bound(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
    const double radius = eig.eigenvalues().cwiseAbs().maxCoeff();
    return std::max(2.0 * radius, 1e-12);
}

}  // namespace

Eigen::VectorXd project_simplex_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lower,
                                    const Eigen::VectorXd& upper) {
    if (v.size() != lower.size() || v.size() != upper.size())
        fail(errc::shape_mismatch, "projection: bound vectors must match x");
    if (!lower.allFinite())
        fail(errc::config_invalid, "projection needs finite lower bounds");
    // On the simplex no coordinate can exceed 1 - sum of the other lower
    // bounds, so an infinite upper bound can be capped without changing the
    // feasible set.
    Eigen::VectorXd capped_upper = upper;
    const double lower_sum = lower.sum();
    for (Eigen::Index i = 0; i < capped_upper.size(); ++i)
        if (!std::isfinite(capped_upper(i)))
            capped_upper(i) = 1.0 - (lower_sum - lower(i));
    if (lower.sum() > 1.0 + 1e-12 || capped_upper.sum() < 1.0 - 1e-12)
        fail(errc::infeasible, "bounds cannot reach the simplex",
             {{"sum_lower", std::to_string(lower.sum())},
              {"sum_upper", std::to_string(capped_upper.sum())}});
    const Eigen::VectorXd& upper_ref = capped_upper;

    // x(tau) = clamp(v - tau); sum is non-increasing in tau -> bisection.
    double tau_low = (v - upper_ref).minCoeff() - 1.0;
    double tau_high = (v - lower).maxCoeff() + 1.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double tau = 0.5 * (tau_low + tau_high);
        if (clamp_sum(v, lower, upper_ref, tau, nullptr) > 1.0)
            tau_low = tau;
        else
            tau_high = tau;
    }
    Eigen::VectorXd x(v.size());
    clamp_sum(v, lower, upper_ref, 0.5 * (tau_low + tau_high), &x);
    // Absorb the last bisection gap into a free coordinate.
    const double gap = 1.0 - x.sum();
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double adjusted = x(i) + gap;
        if (adjusted >= lower(i) && adjusted <= upper_ref(i)) {
            x(i) = adjusted;
            break;
        }
    }
    return x;
}

QpResult solve_qp_simplex_box(const Eigen::MatrixXd& m_raw, const Eigen::VectorXd& q_raw,
                              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const QpOptions& options) {
    const Eigen::Index n = m_raw.rows();
    if (m_raw.cols() != n || q_raw.size() != n)
        fail(errc::shape_mismatch, "qp: M must be square and match q");

    // Normalize by the spectral radius so the KKT tolerance acts relative to
    // the problem scale (covariance matrices are often ~1e-4).
    const double scale = 0.5 * lipschitz_bound(m_raw);
    const Eigen::MatrixXd m = m_raw / scale;
    const Eigen::VectorXd q = q_raw / scale;

    const double step = 1.0 / lipschitz_bound(m);
    Eigen::VectorXd x = project_simplex_box(Eigen::VectorXd::Constant(n, 1.0 / n), lower, upper);
    Eigen::VectorXd y = x;
    Eigen::VectorXd x_prev = x;
    double momentum = 1.0;

    QpResult result;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const Eigen::VectorXd grad = 2.0 * (m * y) + q;
        x = project_simplex_box(y - step * grad, lower, upper);

        const double f_new = x.dot(m * x) + q.dot(x);
        const double f_old = x_prev.dot(m * x_prev) + q.dot(x_prev);
        if (f_new > f_old) {  // restart the momentum when it overshoots
            y = x;
            momentum = 1.0;
        } else {
            const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            y = x + ((momentum - 1.0) / next) * (x - x_prev);
            momentum = next;
        }
        x_prev = x;

        if ((iter & 15) == 0 || iter + 1 == options.max_iterations) {
            result.kkt_residual = kkt_residual(m, q, x, lower, upper);
            if (result.kkt_residual < options.kkt_tol) {
                result.iterations = iter + 1;
                break;
            }
        }
        result.iterations = iter + 1;
    }
    result.kkt_residual = kkt_residual(m, q, x, lower, upper);
    result.x = x;
    result.objective = x.dot(m_raw * x) + q_raw.dot(x);
    return result;
}

QpResult solve_qp_simplex_box_target(const Eigen::MatrixXd& m, const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                     const Eigen::VectorXd& a, double target,
                                     const QpOptions& options) {
    const Eigen::Index n = m.rows();
    const double step = 1.0 / lipschitz_bound(m);

    if (a.squaredNorm() < 1e-24) {
        // Degenerate direction: the extra equality is vacuous (or infeasible).
        if (std::abs(target) > 1e-12)
            fail(errc::infeasible, "target unreachable along a zero direction");
        return solve_qp_simplex_box(m, q, lower, upper, options);
    }

    // Dykstra projection onto {box-simplex} intersect {a'x = target}.
    auto project = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd x = v;
        Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
        for (int sweep = 0; sweep < 400; ++sweep) {
            const Eigen::VectorXd y = project_simplex_box(x + p, lower, upper);
            p = x + p - y;
            const Eigen::VectorXd z = y + r - ((a.dot(y + r) - target) / a.squaredNorm()) * a;
            r = y + r - z;
            if ((z - x).norm() < 1e-14 && std::abs(a.dot(z) - target) < 1e-12 &&
                std::abs(z.sum() - 1.0) < 1e-12) {
                x = z;
                break;
            }
            x = z;
        }
        return x;
    };

    Eigen::VectorXd x = project(Eigen::VectorXd::Constant(n, 1.0 / n));
    QpResult result;
    Eigen::VectorXd x_prev = x;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        const Eigen::VectorXd grad = 2.0 * (m * x) + q;
        x = project(x - step * grad);
        result.iterations = iter + 1;
        if ((iter & 15) == 0 && (x - x_prev).norm() < 1e-12) break;
        x_prev = x;
    }
    result.x = x;
    result.objective = x.dot(m * x) + q.dot(x);
    result.kkt_residual = (x - project(x - step * (2.0 * (m * x) + q))).norm();
    return result;
}

Eigen::VectorXd qp_stationary_point(const Eigen::MatrixXd& m) {
    const Eigen::Index n = m.rows();
    Eigen::MatrixXd kkt(n + 1, n + 1);
    kkt.setZero();
    kkt.topLeftCorner(n, n) = 2.0 * m;
    kkt.topRightCorner(n, 1).setConstant(-1.0);
    kkt.bottomLeftCorner(1, n).setConstant(1.0);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(kkt);
    const Eigen::VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite() || (kkt * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm()))
        fail(errc::singular_matrix, "KKT system is singular");
    return sol.head(n);
}

}  // namespace hsp
