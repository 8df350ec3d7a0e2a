#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "hsp/sensitivity_models.hpp"

namespace hsp {

enum class DistanceMetric { euclidean, kernel };

/// Symmetric pairwise structure over named assets. With the euclidean metric
/// this is a hollow distance matrix; kernelize() returns the same shape
/// tagged kernel, holding Gaussian similarities (unit diagonal).
struct DistanceMatrix {
    std::vector<std::string> names;
    Eigen::MatrixXd values;
    DistanceMetric metric = DistanceMetric::euclidean;
    double kernel_sigma = 0.0;

    Eigen::Index size() const { return values.rows(); }
};

DistanceMatrix make_distance_matrix(std::vector<std::string> names, Eigen::MatrixXd values);

/// Pairwise Euclidean distances between sensitivity rows.
DistanceMatrix sensitivity_distance(const SensitivityMatrix& sens);

/// Higham projection onto the PSD cone: eigendecompose, clip negative
/// eigenvalues to zero, reconstruct, re-symmetrize. Returns the input
/// untouched when its smallest eigenvalue is already >= -tol.
Eigen::MatrixXd nearest_psd(const Eigen::MatrixXd& symmetric, double tol = 1e-12);
DistanceMatrix nearest_psd(const DistanceMatrix& d, double tol = 1e-12);

struct LinkageMerge {
    int left;       // cluster id (< n: leaf, >= n: merge n + index)
    int right;
    double height;
    int size;
};

struct LinkageTree {
    int n = 0;
    std::vector<LinkageMerge> merges;  // n - 1 entries, heights non-decreasing
    std::vector<int> leaf_order;       // quasi-diagonalization order
};

/// Agglomerative single linkage: D(X,Y) = min over cross pairs. The leaf
/// order comes from a depth-first walk where each node's children are
/// visited smaller-minimum-original-index first.
LinkageTree single_linkage(const DistanceMatrix& d);

enum class TrajectoryAggregate { mean, cumulative };

/// Elementwise mean or sum of a list of same-shape matrices.
DistanceMatrix aggregate_trajectory(const std::vector<DistanceMatrix>& steps,
                                    TrajectoryAggregate mode);

/// Gaussian kernel transform K_ij = exp(-D_ij^2 / (2 sigma^2)).
DistanceMatrix kernelize(const DistanceMatrix& d, double sigma);

}  // namespace hsp
