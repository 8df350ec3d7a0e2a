#include "hsp/sensitivity_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsp/errors.hpp"

namespace hsp {
namespace {

void check_square_symmetric(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) fail(errc::shape_mismatch, "matrix must be square");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-12 * std::max(1.0, std::abs(m(i, j))))
                fail(errc::shape_mismatch, "matrix must be symmetric");
}

}  // namespace

DistanceMatrix make_distance_matrix(std::vector<std::string> names, Eigen::MatrixXd values) {
    if (values.rows() != static_cast<Eigen::Index>(names.size()))
        fail(errc::shape_mismatch, "distance matrix does not match name list");
    check_square_symmetric(values);
    DistanceMatrix d;
    d.names = std::move(names);
    d.values = std::move(values);
    return d;
}

DistanceMatrix sensitivity_distance(const SensitivityMatrix& sens) {
    if (!sens.values.allFinite())
        fail(errc::config_invalid, "sensitivity matrix has non-finite entries");
    const Eigen::Index n = sens.values.rows();
    DistanceMatrix d;
    d.names = sens.assets;
    d.values.setZero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dist = (sens.values.row(i) - sens.values.row(j)).norm();
            d.values(i, j) = dist;
            d.values(j, i) = dist;
        }
    return d;
}

Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& symmetric, double tol) {
    check_square_symmetric(symmetric);
    const Eigen::MatrixXd sym = 0.5 * (symmetric + symmetric.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    if (eig.info() != Eigen::Success)
        fail(errc::eigen_failure, "eigendecomposition did not converge");
    if (eig.eigenvalues().minCoeff() >= -tol) return symmetric;  // already PSD
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    Eigen::MatrixXd repaired =
        eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    repaired = (0.5 * (repaired + repaired.transpose())).eval();
    return repaired;
}

DistanceMatrix nearest_psd(const DistanceMatrix& d, double tol) {
    DistanceMatrix out = d;
    out.values = nearest_psd(d.values, tol);
    return out;
}

LinkageTree single_linkage(const DistanceMatrix& d) {
    const int n = static_cast<int>(d.size());
    if (n < 2) fail(errc::too_short, "single_linkage needs >= 2 items");
    check_square_symmetric(d.values);

    LinkageTree tree;
    tree.n = n;

    // Active cluster list with current pairwise minima; O(n^3) scan is fine
    // at portfolio sizes.
    struct Cluster {
        int id;
        int min_leaf;
        int size;
        std::vector<int> members;
    };
    std::vector<Cluster> active;
    for (int i = 0; i < n; ++i) active.push_back({i, i, 1, {i}});

    std::vector<std::pair<int, int>> children(static_cast<std::size_t>(n - 1));

    auto cluster_distance = [&](const Cluster& a, const Cluster& b) {
        double best = std::numeric_limits<double>::infinity();
        for (int x : a.members)
            for (int y : b.members) best = std::min(best, d.values(x, y));
        return best;
    };

    for (int merge = 0; merge < n - 1; ++merge) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < active.size(); ++i)
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                const double dist = cluster_distance(active[i], active[j]);
                if (dist < best) {
                    best = dist;
                    bi = i;
                    bj = j;
                }
            }
        Cluster merged;
        merged.id = n + merge;
        // Children ordered by smaller minimum original index.
        const Cluster& a = active[bi];
        const Cluster& b = active[bj];
        const bool a_first = a.min_leaf < b.min_leaf;
        children[static_cast<std::size_t>(merge)] = {a_first ? a.id : b.id,
                                                     a_first ? b.id : a.id};
        merged.min_leaf = std::min(a.min_leaf, b.min_leaf);
        merged.size = a.size + b.size;
        merged.members = a.members;
        merged.members.insert(merged.members.end(), b.members.begin(), b.members.end());
        tree.merges.push_back({children[static_cast<std::size_t>(merge)].first,
                               children[static_cast<std::size_t>(merge)].second, best,
                               merged.size});
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
        active.push_back(std::move(merged));
    }

    // Quasi-diagonalization: expand the root depth-first.
    std::vector<int> stack = {2 * n - 2};
    while (!stack.empty()) {
        const int node = stack.back();
        stack.pop_back();
        if (node < n) {
            tree.leaf_order.push_back(node);
        } else {
            const auto& pair = children[static_cast<std::size_t>(node - n)];
            stack.push_back(pair.second);  // right expanded after left
            stack.push_back(pair.first);
        }
    }
    return tree;
}

DistanceMatrix aggregate_trajectory(const std::vector<DistanceMatrix>& steps,
                                    TrajectoryAggregate mode) {
    if (steps.empty()) fail(errc::too_short, "aggregate_trajectory: empty list");
    DistanceMatrix out = steps.front();
    for (std::size_t k = 1; k < steps.size(); ++k) {
        if (steps[k].names != out.names || steps[k].values.rows() != out.values.rows())
            fail(errc::shape_mismatch, "trajectory matrices differ in shape or names");
        out.values += steps[k].values;
    }
    if (mode == TrajectoryAggregate::mean)
        out.values /= static_cast<double>(steps.size());
    return out;
}

DistanceMatrix kernelize(const DistanceMatrix& d, double sigma) {
    if (!(sigma > 0.0)) fail(errc::config_invalid, "kernel sigma must be positive");
    DistanceMatrix out;
    out.names = d.names;
    out.metric = DistanceMetric::kernel;
    out.kernel_sigma = sigma;
    out.values =
        (-d.values.array().square() / (2.0 * sigma * sigma)).exp().matrix();
    return out;
}

}  // namespace hsp
