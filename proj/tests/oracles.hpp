#pragma once

// Test-side reference implementations, kept independent of the library code
// paths they check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace oracles {

/// Cyclic Jacobi eigendecomposition for symmetric matrices; returns
/// (eigenvalues, eigenvectors as columns). Deliberately not Eigen's solver.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a,
                                                                int sweeps = 100) {
    const Eigen::Index n = a.rows();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                Eigen::MatrixXd rot = Eigen::MatrixXd::Identity(n, n);
                rot(p, p) = c;
                rot(q, q) = c;
                rot(p, q) = s;
                rot(q, p) = -s;
                a = rot.transpose() * a * rot;
                v = v * rot;
            }
    }
    return {a.diagonal(), v};
}

/// Eigenvalue-clip PSD projection built on the Jacobi decomposition.
inline Eigen::MatrixXd clip_psd(const Eigen::MatrixXd& sym) {
    auto [values, vectors] = jacobi_eigen(sym);
    Eigen::VectorXd clipped = values.cwiseMax(0.0);
    Eigen::MatrixXd out = vectors * clipped.asDiagonal() * vectors.transpose();
    return 0.5 * (out + out.transpose());
}

/// Lexicographic (repeatedness desc, strength desc, name asc) ranking by
/// explicit tuple sort.
inline std::vector<std::string> rank_tuples(const std::vector<std::string>& names,
                                            const std::vector<int>& repeatedness,
                                            const std::vector<double>& strength) {
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (repeatedness[a] != repeatedness[b]) return repeatedness[a] > repeatedness[b];
        if (strength[a] != strength[b]) return strength[a] > strength[b];
        return names[a] < names[b];
    });
    std::vector<std::string> out;
    for (std::size_t i : order) out.push_back(names[i]);
    return out;
}

/// Population covariance of two columns, the direct way.
inline double pop_cov(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    const double mx = x.mean();
    const double my = y.mean();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) acc += (x(i) - mx) * (y(i) - my);
    return acc / static_cast<double>(x.size());
}

/// Grid search oracle for min w'Mw over { sum w = 1, lo <= w <= hi } with
/// weights restricted to lo + k*step. Multi-start exchange descent with
/// shrinking move sizes; returns the best objective found.
inline double qp_grid_search(const Eigen::MatrixXd& m, double lo, double hi, double step,
                             std::uint64_t seed = 1) {
    const Eigen::Index n = m.rows();
    const long cap = std::lround((hi - lo) / step);           // units per coordinate
    const long budget = std::lround((1.0 - n * lo) / step);   // units to distribute

    auto objective = [&](const std::vector<long>& units) {
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i)
            w(i) = lo + step * static_cast<double>(units[static_cast<std::size_t>(i)]);
        return w.dot(m * w);
    };

    auto descend = [&](std::vector<long> units) {
        double best = objective(units);
        for (long move : {16L, 8L, 4L, 2L, 1L}) {
            bool improved = true;
            while (improved) {
                improved = false;
                for (Eigen::Index a = 0; a < n; ++a)
                    for (Eigen::Index b = 0; b < n; ++b) {
                        if (a == b) continue;
                        auto& ua = units[static_cast<std::size_t>(a)];
                        auto& ub = units[static_cast<std::size_t>(b)];
                        if (ua - move < 0 || ub + move > cap) continue;
                        ua -= move;
                        ub += move;
                        const double trial = objective(units);
                        if (trial < best - 1e-15) {
                            best = trial;
                            improved = true;
                        } else {
                            ua += move;
                            ub -= move;
                        }
                    }
            }
        }
        return best;
    };

    // Deterministic spread of feasible integer starts.
    std::vector<std::vector<long>> starts;
    {
        std::vector<long> equal(static_cast<std::size_t>(n), 0);
        long rem = budget;
        for (Eigen::Index i = 0; rem > 0; i = (i + 1) % n) {
            const std::size_t idx = static_cast<std::size_t>(i);
            if (equal[idx] < cap) {
                ++equal[idx];
                --rem;
            }
        }
        starts.push_back(equal);
        std::uint64_t state = seed;
        for (int extra = 0; extra < 3; ++extra) {
            std::vector<long> units(static_cast<std::size_t>(n), 0);
            long left = budget;
            while (left > 0) {
                state = state * 6364136223846793005ULL + 1442695040888963407ULL;
                const std::size_t idx = static_cast<std::size_t>((state >> 33) % n);
                if (units[idx] < cap) {
                    ++units[idx];
                    --left;
                }
            }
            starts.push_back(units);
        }
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& start : starts) best = std::min(best, descend(start));
    return best;
}

/// All k-subsets of {0..n-1}.
inline std::vector<std::vector<int>> subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> pick(static_cast<std::size_t>(k));
    const std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == k) {
            out.push_back(pick);
            return;
        }
        for (int i = start; i < n; ++i) {
            pick[static_cast<std::size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return out;
}

}  // namespace oracles
