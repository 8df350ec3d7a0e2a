#include "hsp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hsp/errors.hpp"

namespace hsp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarState { basic, at_lower, at_upper, free_zero };

/// Bounded-variable revised simplex over min c'x, Ax = b, l <= x <= u.
/// The basis is refactorized with a dense LU every iteration; problem sizes
/// here are small enough that simplicity wins.
class Simplex {
public:
    Simplex(Eigen::MatrixXd a, Eigen::VectorXd b, Eigen::VectorXd lower, Eigen::VectorXd upper,
            double tol)
        : a_(std::move(a)),
          b_(std::move(b)),
          lower_(std::move(lower)),
          upper_(std::move(upper)),
          tol_(tol),
          m_(a_.rows()),
          n_(a_.cols()) {}

    /// Phase 1: minimize the sum of artificial infeasibilities.
    void initialize() {
        state_.assign(static_cast<std::size_t>(n_), VarState::at_lower);
        for (Eigen::Index j = 0; j < n_; ++j) {
            if (std::isfinite(lower_(j)))
                state_[static_cast<std::size_t>(j)] = VarState::at_lower;
            else if (std::isfinite(upper_(j)))
                state_[static_cast<std::size_t>(j)] = VarState::at_upper;
            else
                state_[static_cast<std::size_t>(j)] = VarState::free_zero;
        }

        const Eigen::VectorXd residual = b_ - a_ * nonbasic_values();

        // Extend with artificial columns carrying the residual sign.
        Eigen::MatrixXd full(m_, n_ + m_);
        full.leftCols(n_) = a_;
        full.rightCols(m_).setZero();
        Eigen::VectorXd lo(n_ + m_), hi(n_ + m_);
        lo.head(n_) = lower_;
        hi.head(n_) = upper_;
        for (Eigen::Index i = 0; i < m_; ++i) {
            full(i, n_ + i) = residual(i) >= 0.0 ? 1.0 : -1.0;
            lo(n_ + i) = 0.0;
            hi(n_ + i) = kInf;
        }
        a_ = std::move(full);
        lower_ = std::move(lo);
        upper_ = std::move(hi);
        structural_ = n_;
        n_ += m_;

        basis_.resize(static_cast<std::size_t>(m_));
        state_.resize(static_cast<std::size_t>(n_), VarState::basic);
        for (Eigen::Index i = 0; i < m_; ++i) {
            basis_[static_cast<std::size_t>(i)] = static_cast<int>(structural_ + i);
            state_[static_cast<std::size_t>(structural_ + i)] = VarState::basic;
        }

        Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n_);
        phase1_cost.tail(m_).setOnes();
        run(phase1_cost);
        if (objective(phase1_cost) > 1e-7)
            fail(errc::infeasible, "LP has no feasible point",
                 {{"phase1", std::to_string(objective(phase1_cost))}});
        // Pin artificials to zero for phase 2.
        for (Eigen::Index i = 0; i < m_; ++i) upper_(structural_ + i) = 0.0;
    }

    void optimize(const Eigen::VectorXd& cost) {
        Eigen::VectorXd full_cost = Eigen::VectorXd::Zero(n_);
        full_cost.head(structural_) = cost;
        run(full_cost);
        final_cost_ = full_cost;
    }

    Eigen::VectorXd solution() const {
        Eigen::VectorXd x = nonbasic_values();
        const Eigen::VectorXd xb = basic_values(x);
        for (Eigen::Index i = 0; i < m_; ++i) x(basis_[static_cast<std::size_t>(i)]) = xb(i);
        return x.head(structural_);
    }

    Eigen::VectorXd duals() const {
        Eigen::VectorXd cb(m_);
        for (Eigen::Index i = 0; i < m_; ++i)
            cb(i) = final_cost_(basis_[static_cast<std::size_t>(i)]);
        return basis_lu().transpose().solve(cb);
    }

    int iterations() const { return iterations_; }

private:
    Eigen::VectorXd nonbasic_values() const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
        for (Eigen::Index j = 0; j < n_; ++j) {
            switch (state_[static_cast<std::size_t>(j)]) {
                case VarState::at_lower: x(j) = lower_(j); break;
                case VarState::at_upper: x(j) = upper_(j); break;
                default: x(j) = 0.0; break;
            }
        }
        return x;
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> basis_lu() const {
        Eigen::MatrixXd bmat(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i)
            bmat.col(i) = a_.col(basis_[static_cast<std::size_t>(i)]);
        return Eigen::PartialPivLU<Eigen::MatrixXd>(bmat);
    }

    Eigen::VectorXd basic_values(const Eigen::VectorXd& x_nonbasic) const {
        Eigen::VectorXd rhs = b_;
        for (Eigen::Index j = 0; j < n_; ++j)
            if (state_[static_cast<std::size_t>(j)] != VarState::basic && x_nonbasic(j) != 0.0)
                rhs -= a_.col(j) * x_nonbasic(j);
        return basis_lu().solve(rhs);
    }

    double objective(const Eigen::VectorXd& cost) const {
        Eigen::VectorXd x = nonbasic_values();
        const Eigen::VectorXd xb = basic_values(x);
        for (Eigen::Index i = 0; i < m_; ++i) x(basis_[static_cast<std::size_t>(i)]) = xb(i);
        return cost.dot(x);
    }

    void run(const Eigen::VectorXd& cost) {
        const int max_iterations = 20000 + 60 * static_cast<int>(m_ + n_);
        int degenerate_streak = 0;

        for (int iter = 0; iter < max_iterations; ++iter) {
            ++iterations_;
            const auto lu = basis_lu();
            Eigen::VectorXd cb(m_);
            for (Eigen::Index i = 0; i < m_; ++i)
                cb(i) = cost(basis_[static_cast<std::size_t>(i)]);
            const Eigen::VectorXd pi = lu.transpose().solve(cb);

            const bool bland = degenerate_streak > 2 * static_cast<int>(m_) + 20;
            int entering = -1;
            double entering_dir = 0.0;
            double best_violation = tol_;
            for (Eigen::Index j = 0; j < n_; ++j) {
                const VarState st = state_[static_cast<std::size_t>(j)];
                if (st == VarState::basic) continue;
                if (j >= structural_) continue;  // artificials never re-enter
                if (lower_(j) == upper_(j) && st != VarState::free_zero) continue;
                const double d = cost(j) - pi.dot(a_.col(j));
                double violation = 0.0;
                double dir = 0.0;
                if (st == VarState::at_lower && d < -tol_) {
                    violation = -d;
                    dir = 1.0;
                } else if (st == VarState::at_upper && d > tol_) {
                    violation = d;
                    dir = -1.0;
                } else if (st == VarState::free_zero && std::abs(d) > tol_) {
                    violation = std::abs(d);
                    dir = d < 0.0 ? 1.0 : -1.0;
                } else {
                    continue;
                }
                if (bland) {
                    entering = static_cast<int>(j);
                    entering_dir = dir;
                    break;
                }
                if (violation > best_violation) {
                    best_violation = violation;
                    entering = static_cast<int>(j);
                    entering_dir = dir;
                }
            }
            if (entering < 0) return;  // optimal for this cost

            const Eigen::VectorXd x_nonbasic = nonbasic_values();
            const Eigen::VectorXd xb = basic_values(x_nonbasic);
            const Eigen::VectorXd w = lu.solve(a_.col(entering));

            // Ratio test: basic variables hit a bound, or the entering
            // variable flips to its opposite bound.
            double best_t = kInf;
            int leaving = -1;   // basis position
            bool leaving_to_upper = false;
            const double range = upper_(entering) - lower_(entering);
            if (std::isfinite(range)) best_t = range;

            for (Eigen::Index i = 0; i < m_; ++i) {
                const double rate = entering_dir * w(i);
                const int var = basis_[static_cast<std::size_t>(i)];
                double t;
                bool to_upper;
                if (rate > 1e-11) {
                    if (!std::isfinite(lower_(var))) continue;
                    t = (xb(i) - lower_(var)) / rate;
                    to_upper = false;
                } else if (rate < -1e-11) {
                    if (!std::isfinite(upper_(var))) continue;
                    t = (upper_(var) - xb(i)) / (-rate);
                    to_upper = true;
                } else {
                    continue;
                }
                bool take = t < best_t - 1e-12;
                if (!take && t < best_t + 1e-12 && leaving >= 0) {
                    // Ties: smallest variable index under Bland, largest pivot
                    // magnitude otherwise.
                    take = bland ? var < basis_[static_cast<std::size_t>(leaving)]
                                 : std::abs(w(i)) > std::abs(w(leaving));
                }
                if (take) {
                    best_t = std::max(t, 0.0);
                    leaving = static_cast<int>(i);
                    leaving_to_upper = to_upper;
                }
            }

            if (!std::isfinite(best_t))
                fail(errc::config_invalid, "LP is unbounded");
            degenerate_streak = best_t < 1e-10 ? degenerate_streak + 1 : 0;

            if (leaving < 0) {
                // Bound flip: entering moves across its whole range.
                state_[static_cast<std::size_t>(entering)] =
                    state_[static_cast<std::size_t>(entering)] == VarState::at_lower
                        ? VarState::at_upper
                        : VarState::at_lower;
                continue;
            }

            const int leaving_var = basis_[static_cast<std::size_t>(leaving)];
            state_[static_cast<std::size_t>(leaving_var)] =
                leaving_to_upper ? VarState::at_upper : VarState::at_lower;
            basis_[static_cast<std::size_t>(leaving)] = entering;
            state_[static_cast<std::size_t>(entering)] = VarState::basic;
        }
        fail(errc::config_invalid, "simplex iteration limit reached");
    }

    Eigen::MatrixXd a_;
    Eigen::VectorXd b_;
    Eigen::VectorXd lower_, upper_;
    double tol_;
    Eigen::Index m_, n_;
    Eigen::Index structural_ = 0;
    std::vector<int> basis_;
    std::vector<VarState> state_;
    Eigen::VectorXd final_cost_;
    int iterations_ = 0;
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem, double tol) {
    const Eigen::Index n = problem.c.size();
    const Eigen::Index m_eq = problem.a_eq.rows();
    const Eigen::Index m_ub = problem.a_ub.rows();
    if ((m_eq > 0 && problem.a_eq.cols() != n) || (m_ub > 0 && problem.a_ub.cols() != n))
        fail(errc::shape_mismatch, "LP constraint matrices do not match c");
    if (problem.lower.size() != n || problem.upper.size() != n)
        fail(errc::shape_mismatch, "LP bounds do not match c");

    // Slack variables turn inequality rows into equalities.
    const Eigen::Index total = n + m_ub;
    Eigen::MatrixXd a(m_eq + m_ub, total);
    a.setZero();
    Eigen::VectorXd b(m_eq + m_ub);
    if (m_eq > 0) {
        a.topLeftCorner(m_eq, n) = problem.a_eq;
        b.head(m_eq) = problem.b_eq;
    }
    if (m_ub > 0) {
        a.bottomLeftCorner(m_ub, n) = problem.a_ub;
        a.bottomRightCorner(m_ub, m_ub).setIdentity();
        b.tail(m_ub) = problem.b_ub;
    }
    Eigen::VectorXd lower(total), upper(total);
    lower.head(n) = problem.lower;
    upper.head(n) = problem.upper;
    lower.tail(m_ub).setZero();
    upper.tail(m_ub).setConstant(kInf);

    Simplex simplex(a, b, lower, upper, tol);
    simplex.initialize();
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
    cost.head(n) = problem.c;
    simplex.optimize(cost);

    LpSolution solution;
    const Eigen::VectorXd x = simplex.solution();
    solution.x = x.head(n);
    solution.objective = problem.c.dot(solution.x);
    const Eigen::VectorXd pi = simplex.duals();
    solution.duals_eq = pi.head(m_eq);
    solution.duals_ub = pi.tail(m_ub);
    solution.iterations = simplex.iterations();
    return solution;
}

}  // namespace hsp
