#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hsp/errors.hpp"
#include "hsp/rng.hpp"
#include "hsp/sensitivity_geometry.hpp"
#include "oracles.hpp"

using namespace hsp;

namespace {

SensitivityMatrix sens_of(const Eigen::MatrixXd& values) {
    SensitivityMatrix s;
    s.values = values;
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        s.assets.push_back("A" + std::to_string(i + 1));
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        s.drivers.push_back("D" + std::to_string(j + 1));
    return s;
}

Eigen::MatrixXd random_sens(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
    CounterRng rng(seed, CounterRng::stream_of("geometry-test"));
    Eigen::MatrixXd values(n, m);
    for (Eigen::Index i = 0; i < values.size(); ++i) values(i) = rng.next_normal();
    return values;
}

DistanceMatrix named(const Eigen::MatrixXd& values) {
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < values.rows(); ++i) names.push_back("A" + std::to_string(i + 1));
    return make_distance_matrix(names, values);
}

}  // namespace

TEST_CASE("3-4-5 distance") {
    Eigen::MatrixXd values(2, 2);
    values << 0, 0, 3, 4;
    const DistanceMatrix d = sensitivity_distance(sens_of(values));
    CHECK(d.values(0, 1) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(d.values(1, 0) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(d.values(0, 0) == 0.0);
}

TEST_CASE("identical rows are at distance zero") {
    Eigen::MatrixXd values(3, 2);
    values << 1, 2, 1, 2, 4, 6;
    const DistanceMatrix d = sensitivity_distance(sens_of(values));
    CHECK(d.values(0, 1) == 0.0);
    CHECK(d.values(0, 2) > 0.0);
}

TEST_CASE("distance matrix equals the double-loop oracle") {
    const Eigen::MatrixXd values = random_sens(5, 3, 2);
    const DistanceMatrix d = sensitivity_distance(sens_of(values));
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) {
                const double diff = values(i, k) - values(j, k);
                acc += diff * diff;
            }
            CHECK(d.values(i, j) == doctest::Approx(std::sqrt(acc)).epsilon(1e-12));
        }
}

TEST_CASE("triangle inequality holds on all triples up to n = 20") {
    const Eigen::MatrixXd values = random_sens(20, 4, 3);
    const DistanceMatrix d = sensitivity_distance(sens_of(values));
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
            for (int k = 0; k < 20; ++k)
                CHECK(d.values(i, j) <= d.values(i, k) + d.values(k, j) + 1e-12);
}

TEST_CASE("nearest_psd returns PSD inputs unchanged") {
    const Eigen::MatrixXd values = random_sens(4, 4, 4);
    const Eigen::MatrixXd psd = values * values.transpose();
    CHECK((nearest_psd(psd) - psd).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("clipping a single negative eigenvalue changes Frobenius norm by its size") {
    // Build Q diag(2, 1, -0.1) Q' with a known orthogonal Q.
    const Eigen::MatrixXd base = random_sens(3, 3, 5);
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(base);
    const Eigen::MatrixXd q = qr.householderQ();
    Eigen::VectorXd eigs(3);
    eigs << 2.0, 1.0, -0.1;
    const Eigen::MatrixXd input = q * eigs.asDiagonal() * q.transpose();

    const Eigen::MatrixXd repaired = nearest_psd(input, 1e-14);
    const auto [values, vectors] = oracles::jacobi_eigen(repaired);
    CHECK(values.minCoeff() >= -1e-10);
    CHECK((repaired - input).norm() == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("nearest_psd of the zero matrix is zero") {
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 3);
    CHECK(nearest_psd(zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nearest_psd is idempotent and matches the eigen-clip oracle") {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        const Eigen::MatrixXd raw = random_sens(6, 6, seed);
        const Eigen::MatrixXd sym = 0.5 * (raw + raw.transpose());
        const Eigen::MatrixXd once = nearest_psd(sym, 1e-14);
        const Eigen::MatrixXd twice = nearest_psd(once, 1e-14);
        CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-10);

        const Eigen::MatrixXd oracle = oracles::clip_psd(sym);
        CHECK((sym - once).norm() <= (sym - oracle).norm() + 1e-9);
        CHECK((once - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("single linkage on the worked 3-point example") {
    Eigen::MatrixXd values(3, 3);
    values << 0, 1, 5, 1, 0, 4, 5, 4, 0;
    const LinkageTree tree = single_linkage(named(values));
    REQUIRE(tree.merges.size() == 2);
    CHECK(tree.merges[0].left == 0);
    CHECK(tree.merges[0].right == 1);
    CHECK(tree.merges[0].height == 1.0);
    CHECK(tree.merges[0].size == 2);
    CHECK(tree.merges[1].height == 4.0);  // min(d(1,3), d(2,3)) = 4
    CHECK(tree.merges[1].size == 3);
    CHECK(tree.leaf_order == std::vector<int>{0, 1, 2});
}

TEST_CASE("two points merge at their distance") {
    Eigen::MatrixXd values(2, 2);
    values << 0, 7, 7, 0;
    const LinkageTree tree = single_linkage(named(values));
    REQUIRE(tree.merges.size() == 1);
    CHECK(tree.merges[0].height == 7.0);
    CHECK(tree.leaf_order == std::vector<int>{0, 1});
}

TEST_CASE("positive rescaling preserves merges and leaf order") {
    const Eigen::MatrixXd sens = random_sens(8, 3, 6);
    const DistanceMatrix d = sensitivity_distance(sens_of(sens));
    DistanceMatrix scaled = d;
    scaled.values *= 3.75;
    const LinkageTree a = single_linkage(d);
    const LinkageTree b = single_linkage(scaled);
    CHECK(a.leaf_order == b.leaf_order);
    for (std::size_t k = 0; k < a.merges.size(); ++k) {
        CHECK(a.merges[k].left == b.merges[k].left);
        CHECK(a.merges[k].right == b.merges[k].right);
        CHECK(b.merges[k].height == doctest::Approx(3.75 * a.merges[k].height).epsilon(1e-12));
    }
}

TEST_CASE("heights are non-decreasing and clusters are contiguous in leaf order") {
    const Eigen::MatrixXd sens = random_sens(12, 4, 7);
    const LinkageTree tree = single_linkage(sensitivity_distance(sens_of(sens)));
    for (std::size_t k = 1; k < tree.merges.size(); ++k)
        CHECK(tree.merges[k].height >= tree.merges[k - 1].height - 1e-15);

    // Rebuild each merge's member set and check contiguity in leaf order.
    std::vector<int> position(12);
    for (int i = 0; i < 12; ++i)
        position[static_cast<std::size_t>(tree.leaf_order[static_cast<std::size_t>(i)])] = i;
    std::vector<std::vector<int>> members(12 + tree.merges.size());
    for (int i = 0; i < 12; ++i) members[static_cast<std::size_t>(i)] = {i};
    for (std::size_t k = 0; k < tree.merges.size(); ++k) {
        auto merged = members[static_cast<std::size_t>(tree.merges[k].left)];
        const auto& right = members[static_cast<std::size_t>(tree.merges[k].right)];
        merged.insert(merged.end(), right.begin(), right.end());
        int lo = 12, hi = -1;
        for (int leaf : merged) {
            lo = std::min(lo, position[static_cast<std::size_t>(leaf)]);
            hi = std::max(hi, position[static_cast<std::size_t>(leaf)]);
        }
        CHECK(hi - lo + 1 == static_cast<int>(merged.size()));
        members[12 + k] = std::move(merged);
    }
}

TEST_CASE("permuting labels permutes the merge structure") {
    const Eigen::MatrixXd sens = random_sens(7, 3, 8);
    const DistanceMatrix d = sensitivity_distance(sens_of(sens));
    std::vector<int> perm = {3, 0, 6, 1, 5, 2, 4};
    DistanceMatrix permuted = d;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j)
            permuted.values(i, j) = d.values(perm[static_cast<std::size_t>(i)],
                                             perm[static_cast<std::size_t>(j)]);

    const LinkageTree a = single_linkage(d);
    const LinkageTree b = single_linkage(permuted);

    // Same merge heights, and each merged leaf set maps through the
    // permutation onto a merged leaf set of the original.
    auto leaf_sets = [](const LinkageTree& tree, int n) {
        std::vector<std::vector<int>> members(static_cast<std::size_t>(n) + tree.merges.size());
        for (int i = 0; i < n; ++i) members[static_cast<std::size_t>(i)] = {i};
        std::vector<std::vector<int>> sets;
        for (std::size_t k = 0; k < tree.merges.size(); ++k) {
            auto merged = members[static_cast<std::size_t>(tree.merges[k].left)];
            const auto& right = members[static_cast<std::size_t>(tree.merges[k].right)];
            merged.insert(merged.end(), right.begin(), right.end());
            std::sort(merged.begin(), merged.end());
            sets.push_back(merged);
            members[static_cast<std::size_t>(n) + k] = merged;
        }
        return sets;
    };
    const auto sets_a = leaf_sets(a, 7);
    auto sets_b = leaf_sets(b, 7);
    REQUIRE(sets_a.size() == sets_b.size());
    for (std::size_t k = 0; k < sets_b.size(); ++k) {
        CHECK(a.merges[k].height == doctest::Approx(b.merges[k].height).epsilon(1e-12));
        std::vector<int> mapped;
        for (int leaf : sets_b[k]) mapped.push_back(perm[static_cast<std::size_t>(leaf)]);
        std::sort(mapped.begin(), mapped.end());
        CHECK(mapped == sets_a[k]);
    }
}

TEST_CASE("trajectory aggregation: identity, linearity, exactness") {
    const Eigen::MatrixXd sens = random_sens(5, 2, 9);
    const DistanceMatrix step = sensitivity_distance(sens_of(sens));

    const DistanceMatrix singleton = aggregate_trajectory({step}, TrajectoryAggregate::mean);
    CHECK((singleton.values - step.values).cwiseAbs().maxCoeff() == 0.0);

    // Power-of-two count: cumulative == T * mean holds bit-exactly.
    const std::vector<DistanceMatrix> steps(8, step);
    const DistanceMatrix mean = aggregate_trajectory(steps, TrajectoryAggregate::mean);
    const DistanceMatrix cumulative = aggregate_trajectory(steps, TrajectoryAggregate::cumulative);
    CHECK((cumulative.values - 8.0 * mean.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((cumulative.values - 8.0 * step.values).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mean and cumulative aggregates cluster identically") {
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
        std::vector<DistanceMatrix> steps;
        for (int t = 0; t < 6; ++t)
            steps.push_back(sensitivity_distance(sens_of(random_sens(6, 3, seed * 100 + t))));
        const LinkageTree mean_tree =
            single_linkage(aggregate_trajectory(steps, TrajectoryAggregate::mean));
        const LinkageTree cum_tree =
            single_linkage(aggregate_trajectory(steps, TrajectoryAggregate::cumulative));
        CHECK(mean_tree.leaf_order == cum_tree.leaf_order);
    }
}

TEST_CASE("aggregation rejects mismatched shapes") {
    const DistanceMatrix a = sensitivity_distance(sens_of(random_sens(4, 2, 50)));
    const DistanceMatrix b = sensitivity_distance(sens_of(random_sens(5, 2, 51)));
    CHECK_THROWS_AS(aggregate_trajectory({a, b}, TrajectoryAggregate::mean), Error);
}

TEST_CASE("kernelize: zero distance gives unit similarity; large sigma flattens") {
    const DistanceMatrix d = sensitivity_distance(sens_of(random_sens(4, 2, 60) * 0.1));
    const DistanceMatrix k = kernelize(d, 1.0);
    for (int i = 0; i < 4; ++i) CHECK(k.values(i, i) == 1.0);

    const DistanceMatrix flat = kernelize(d, 1e6);
    CHECK((flat.values.array() - 1.0).abs().maxCoeff() < 1e-9);
}

TEST_CASE("the Gaussian kernel of distinct points is positive definite") {
    const DistanceMatrix d = sensitivity_distance(sens_of(random_sens(4, 3, 61)));
    const DistanceMatrix k = kernelize(d, 0.8);
    const auto [values, vectors] = oracles::jacobi_eigen(k.values);
    CHECK(values.minCoeff() > 0.0);
}
