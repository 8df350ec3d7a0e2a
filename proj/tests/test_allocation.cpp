#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hsp/allocation.hpp"
#include "hsp/errors.hpp"
#include "hsp/lp.hpp"
#include "hsp/qp.hpp"
#include "hsp/rng.hpp"
#include "hsp/synth.hpp"
#include "oracles.hpp"

using namespace hsp;

namespace {

DistanceMatrix named(const Eigen::MatrixXd& values) {
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < values.rows(); ++i) names.push_back("A" + std::to_string(i + 1));
    return make_distance_matrix(names, values);
}

Eigen::MatrixXd random_psd(Eigen::Index n, std::uint64_t seed, double scale = 1.0) {
    CounterRng rng(seed, CounterRng::stream_of("alloc-test"));
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.next_normal();
    Eigen::MatrixXd psd = scale * (a * a.transpose()) / static_cast<double>(n);
    return psd;
}

Eigen::MatrixXd random_hollow(Eigen::Index n, std::uint64_t seed) {
    CounterRng rng(seed, CounterRng::stream_of("alloc-hollow"));
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = 0.5 + rng.next_uniform();
            d(i, j) = v;
            d(j, i) = v;
        }
    return d;
}

/// Independent scripted recursion (the HRP-lineage reference): same split
/// convention, written as a plain recursive function over index slices.
void scripted_bisection(const Eigen::MatrixXd& cov, const std::vector<int>& order,
                        std::size_t first, std::size_t last, double mass,
                        Eigen::VectorXd& out) {
    if (last - first == 1) {
        out(order[first]) = mass;
        return;
    }
    const std::size_t mid = first + (last - first) / 2;
    auto sigma = [&](std::size_t a, std::size_t b) {
        Eigen::VectorXd ivp(b - a);
        for (std::size_t k = a; k < b; ++k) ivp(k - a) = 1.0 / cov(order[k], order[k]);
        ivp /= ivp.sum();
        double s = 0.0;
        for (std::size_t r = a; r < b; ++r)
            for (std::size_t c = a; c < b; ++c)
                s += ivp(r - a) * cov(order[r], order[c]) * ivp(c - a);
        return s;
    };
    const double s1 = sigma(first, mid);
    const double s2 = sigma(mid, last);
    const double a1 = 1.0 - s1 / (s1 + s2);
    scripted_bisection(cov, order, first, mid, mass * a1, out);
    scripted_bisection(cov, order, mid, last, mass * (1.0 - a1), out);
}

}  // namespace

TEST_CASE("recursive bisection: diag(1,3) gives (0.75, 0.25)") {
    Eigen::MatrixXd cov(2, 2);
    cov << 1, 0, 0, 3;
    const Eigen::VectorXd w = recursive_bisection_weights(cov, {0, 1});
    CHECK(w(0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(w(1) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("recursive bisection: identical assets get equal weights") {
    const Eigen::MatrixXd cov = 0.04 * Eigen::MatrixXd::Identity(8, 8);
    const Eigen::VectorXd w = recursive_bisection_weights(cov, {0, 1, 2, 3, 4, 5, 6, 7});
    for (int i = 0; i < 8; ++i) CHECK(w(i) == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("recursive bisection matches the scripted oracle") {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(4, 4);
    cov.diagonal() << 1.0, 2.0, 0.5, 4.0;
    const std::vector<int> order = {2, 0, 3, 1};
    const Eigen::VectorXd w = recursive_bisection_weights(cov, order);
    Eigen::VectorXd expected(4);
    scripted_bisection(cov, order, 0, 4, 1.0, expected);
    CHECK((w - expected).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));

    // Odd sizes and dense covariances agree too.
    for (std::uint64_t seed = 5; seed < 8; ++seed) {
        const Eigen::MatrixXd dense = random_psd(7, seed) + Eigen::MatrixXd::Identity(7, 7);
        std::vector<int> perm = {3, 1, 6, 0, 5, 2, 4};
        const Eigen::VectorXd got = recursive_bisection_weights(dense, perm);
        Eigen::VectorXd want(7);
        scripted_bisection(dense, perm, 0, 7, 1.0, want);
        CHECK((got - want).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("two assets reduce to inverse-variance for any diagonal") {
    for (double v2 : {0.5, 1.0, 7.3}) {
        Eigen::MatrixXd cov(2, 2);
        cov << 2.0, 0, 0, v2;
        const Eigen::VectorXd w = recursive_bisection_weights(cov, {0, 1});
        const double iv0 = 1.0 / 2.0, iv1 = 1.0 / v2;
        CHECK(w(0) == doctest::Approx(iv0 / (iv0 + iv1)).epsilon(1e-12));
    }
}

TEST_CASE("zero variance on the diagonal raises") {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
    cov(0, 0) = 1.0;
    CHECK_THROWS_AS(recursive_bisection_weights(cov, {0, 1}), Error);
}

TEST_CASE("bound clipping lands inside bounds and sums to one") {
    Eigen::VectorXd raw(5);
    raw << 0.5, 0.3, 0.1, 0.06, 0.04;
    const Bounds bounds = Bounds::uniform(5, 0.05, 0.30);
    const Eigen::VectorXd clipped = clip_to_bounds(raw, bounds);
    CHECK(clipped.sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (int i = 0; i < 5; ++i) {
        CHECK(clipped(i) >= 0.05 - 1e-9);
        CHECK(clipped(i) <= 0.30 + 1e-9);
    }
}

TEST_CASE("closed-form distance weights: symmetric cases") {
    Eigen::MatrixXd two(2, 2);
    two << 0, 3.7, 3.7, 0;
    const WeightVector w2 = closed_form_distance_weights(named(two));
    CHECK(w2.weights(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(w2.weights(1) == doctest::Approx(0.5).epsilon(1e-12));

    Eigen::MatrixXd three = Eigen::MatrixXd::Constant(3, 3, 2.0);
    three.diagonal().setZero();
    const WeightVector w3 = closed_form_distance_weights(named(three));
    for (int i = 0; i < 3; ++i) CHECK(w3.weights(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("closed-form weights satisfy stationarity 2Dw = lambda 1") {
    const Eigen::MatrixXd d = random_hollow(4, 11);
    const WeightVector w = closed_form_distance_weights(named(d));
    const Eigen::VectorXd g = 2.0 * d * w.weights;
    CHECK((g.array() - g.mean()).abs().maxCoeff() < 1e-8);
    CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("qp: identity objective gives equal weights") {
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(5, 5);
    const QpResult qp = solve_qp_simplex_box(m, Eigen::VectorXd::Zero(5),
                                             Eigen::VectorXd::Zero(5), Eigen::VectorXd::Ones(5));
    for (int i = 0; i < 5; ++i) CHECK(qp.x(i) == doctest::Approx(0.2).epsilon(1e-6));
    CHECK(qp.kkt_residual < 1e-6);
}

TEST_CASE("qp: diagonal objective without upper bound follows 1/M_ii") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
    m.diagonal() << 1.0, 2.0, 4.0;
    const Eigen::VectorXd lower = Eigen::VectorXd::Zero(3);
    const Eigen::VectorXd upper =
        Eigen::VectorXd::Constant(3, std::numeric_limits<double>::infinity());
    const QpResult qp = solve_qp_simplex_box(m, Eigen::VectorXd::Zero(3), lower, upper);
    const double scale = 1.0 / (1.0 + 0.5 + 0.25);
    CHECK(qp.x(0) == doctest::Approx(scale).epsilon(1e-5));
    CHECK(qp.x(1) == doctest::Approx(0.5 * scale).epsilon(1e-5));
    CHECK(qp.x(2) == doctest::Approx(0.25 * scale).epsilon(1e-5));
}

TEST_CASE("qp matches a multi-start grid search at n = 14") {
    const Eigen::Index n = 14;
    const Eigen::MatrixXd m = random_psd(n, 21) + 0.05 * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, 0.03);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, 0.10);
    const QpResult qp = solve_qp_simplex_box(m, Eigen::VectorXd::Zero(n), lower, upper);
    CHECK(qp.kkt_residual < 1e-6);

    const double grid_best = oracles::qp_grid_search(m, 0.03, 0.10, 0.005);
    CHECK(std::abs(qp.objective - grid_best) < 1e-4);
    CHECK(qp.objective <= grid_best + 1e-9);
}

TEST_CASE("qp_distance_weights without bounds equals the closed form") {
    for (std::uint64_t seed = 30; seed < 35; ++seed) {
        const Eigen::MatrixXd d = random_hollow(5, seed);
        const DistanceMatrix dm = named(d);
        const WeightVector closed = closed_form_distance_weights(dm);
        const QpWeightsResult qp = qp_distance_weights(dm, std::nullopt, 0.0, nullptr);
        CHECK((qp.w.weights - closed.weights).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("qp_distance_weights with lambda 0 and a covariance is plain min-variance") {
    const Eigen::Index n = 6;
    CovEstimate cov;
    cov.matrix = random_psd(n, 41) + 0.1 * Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) cov.names.push_back("A" + std::to_string(i + 1));
    const DistanceMatrix d = named(random_hollow(n, 42));
    const Bounds bounds = Bounds::uniform(n, 0.0, 1.0);
    const QpWeightsResult qp = qp_distance_weights(d, bounds, 0.0, &cov);
    const QpResult direct = solve_qp_simplex_box(cov.matrix, Eigen::VectorXd::Zero(n),
                                                 bounds.lower, bounds.upper);
    CHECK((qp.w.weights - direct.x).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("regularize_distance basics") {
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 3);
    const DistanceMatrix reg = regularize_distance(named(zero), 1.0);
    CHECK((reg.values - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd hollow(2, 2);
    hollow << 0, 1, 1, 0;
    const DistanceMatrix reg2 = regularize_distance(named(hollow), 2.0);
    const auto [values, vectors] = oracles::jacobi_eigen(reg2.values);
    std::vector<double> eigs = {values(0), values(1)};
    std::sort(eigs.begin(), eigs.end());
    CHECK(eigs[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eigs[1] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("singular distances become solvable after regularization or pseudoinverse") {
    // Duplicate rows make the hollow matrix singular.
    Eigen::MatrixXd sens(3, 2);
    sens << 1, 2, 1, 2, 5, 6;
    SensitivityMatrix s;
    s.values = sens;
    s.assets = {"A1", "A2", "A3"};
    s.drivers = {"D1", "D2"};
    const DistanceMatrix d = sensitivity_distance(s);
    CHECK_THROWS_AS(closed_form_distance_weights(d), Error);
    const WeightVector reg = closed_form_distance_weights(regularize_distance(d, 0.5));
    CHECK(std::isfinite(reg.weights.sum()));
    CHECK(reg.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
    const WeightVector pinv = closed_form_distance_weights(d, /*pseudoinverse=*/true);
    CHECK(std::isfinite(pinv.weights.sum()));
}

TEST_CASE("cvar: single asset matches the empirical tail oracle") {
    const int t = 200;
    CounterRng rng(51, CounterRng::stream_of("cvar-single"));
    Eigen::MatrixXd scenarios(t, 1);
    for (int s = 0; s < t; ++s) scenarios(s, 0) = 0.01 * rng.next_normal();

    CvarProblem problem;
    problem.names = {"A1"};
    problem.scenarios = scenarios;
    problem.alpha = 0.95;
    problem.bounds = Bounds::uniform(1, 0.0, 1.0);
    const CvarResult result = cvar_optimize(problem);
    CHECK(result.w.weights(0) == doctest::Approx(1.0).epsilon(1e-9));

    // Oracle: losses sorted; VaR at ceil(alpha T), CVaR as threshold plus
    // scaled excess.
    std::vector<double> losses(static_cast<std::size_t>(t));
    for (int s = 0; s < t; ++s) losses[static_cast<std::size_t>(s)] = -scenarios(s, 0);
    std::sort(losses.begin(), losses.end());
    const double var = losses[static_cast<std::size_t>(std::ceil(0.95 * t)) - 1];
    double excess = 0.0;
    for (double l : losses) excess += std::max(0.0, l - var);
    const double cvar = var + excess / ((1.0 - 0.95) * t);
    CHECK(result.var_threshold == doctest::Approx(var).epsilon(1e-9));
    CHECK(result.cvar == doctest::Approx(cvar).epsilon(1e-9));
    CHECK(result.optimality_gap < 1e-7);
}

TEST_CASE("cvar: a dominating asset takes all the weight") {
    Eigen::MatrixXd scenarios(6, 2);
    scenarios << 0.02, -0.01, 0.01, -0.02, 0.03, 0.00, 0.015, -0.005, 0.025, 0.01, 0.01, -0.03;
    CvarProblem problem;
    problem.names = {"G", "B"};
    problem.scenarios = scenarios;
    problem.alpha = 0.8;
    problem.bounds = Bounds::uniform(2, 0.0, 1.0);
    const CvarResult result = cvar_optimize(problem);
    CHECK(result.w.weights(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(result.w.weights(1) == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("cvar LP optimum beats the weight-grid oracle on seeded problems") {
    for (std::uint64_t seed = 60; seed < 70; ++seed) {
        CounterRng rng(seed, CounterRng::stream_of("cvar-grid"));
        const int t = 50;
        Eigen::MatrixXd scenarios(t, 3);
        for (Eigen::Index i = 0; i < scenarios.size(); ++i)
            scenarios(i) = 0.01 * rng.next_normal();

        CvarProblem problem;
        problem.names = {"A", "B", "C"};
        problem.scenarios = scenarios;
        problem.alpha = 0.95;
        problem.bounds = Bounds::uniform(3, 0.0, 1.0);
        const CvarResult result = cvar_optimize(problem);
        CHECK(result.optimality_gap < 1e-7);

        // Empirical CVaR of a fixed weight vector at level alpha.
        auto empirical_cvar = [&](const Eigen::VectorXd& w) {
            std::vector<double> losses(static_cast<std::size_t>(t));
            for (int s = 0; s < t; ++s) losses[static_cast<std::size_t>(s)] = -scenarios.row(s).dot(w);
            std::sort(losses.begin(), losses.end());
            const double var = losses[static_cast<std::size_t>(std::ceil(0.95 * t)) - 1];
            double excess = 0.0;
            for (double l : losses) excess += std::max(0.0, l - var);
            return var + excess / ((1.0 - 0.95) * t);
        };
        for (int a = 0; a <= 50; ++a)
            for (int b = 0; b <= 50 - a; ++b) {
                Eigen::VectorXd w(3);
                w << 0.02 * a, 0.02 * b, 1.0 - 0.02 * a - 0.02 * b;
                CHECK(result.cvar <= empirical_cvar(w) + 1e-9);
            }
    }
}

TEST_CASE("cvar is invariant under scenario permutation") {
    CounterRng rng(71, CounterRng::stream_of("cvar-perm"));
    Eigen::MatrixXd scenarios(40, 3);
    for (Eigen::Index i = 0; i < scenarios.size(); ++i) scenarios(i) = 0.01 * rng.next_normal();
    CvarProblem problem;
    problem.names = {"A", "B", "C"};
    problem.scenarios = scenarios;
    problem.alpha = 0.9;
    problem.bounds = Bounds::uniform(3, 0.0, 1.0);
    const CvarResult base = cvar_optimize(problem);

    // Reverse the scenario order.
    CvarProblem permuted = problem;
    for (int s = 0; s < 40; ++s) permuted.scenarios.row(s) = scenarios.row(39 - s);
    const CvarResult flipped = cvar_optimize(permuted);
    CHECK(flipped.cvar == doctest::Approx(base.cvar).epsilon(1e-10));
    CHECK((flipped.w.weights - base.w.weights).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("cvar dual route agrees with a directly assembled primal LP") {
    CounterRng rng(73, CounterRng::stream_of("cvar-primal"));
    const int t = 30, n = 3;
    Eigen::MatrixXd scenarios(t, n);
    for (Eigen::Index i = 0; i < scenarios.size(); ++i) scenarios(i) = 0.01 * rng.next_normal();
    CvarProblem problem;
    problem.names = {"A", "B", "C"};
    problem.scenarios = scenarios;
    problem.alpha = 0.9;
    problem.bounds = Bounds::uniform(n, 0.0, 1.0);
    const CvarResult dual_route = cvar_optimize(problem);

    // Primal: variables (w, zeta, z). Constraints -z_t - r_t'w - zeta <= 0.
    const double q = 1.0 / ((1.0 - problem.alpha) * t);
    LpProblem primal;
    const Eigen::Index vars = n + 1 + t;
    primal.c = Eigen::VectorXd::Zero(vars);
    primal.c(n) = 1.0;
    primal.c.tail(t).setConstant(q);
    primal.lower = Eigen::VectorXd::Constant(vars, 0.0);
    primal.upper = Eigen::VectorXd::Constant(vars, std::numeric_limits<double>::infinity());
    primal.lower(n) = -std::numeric_limits<double>::infinity();  // zeta free
    primal.upper.head(n).setOnes();
    primal.a_eq.setZero(1, vars);
    primal.a_eq.leftCols(n).setOnes();
    primal.b_eq = Eigen::VectorXd::Ones(1);
    primal.a_ub.setZero(t, vars);
    primal.b_ub = Eigen::VectorXd::Zero(t);
    for (int s = 0; s < t; ++s) {
        primal.a_ub.row(s).head(n) = -scenarios.row(s);
        primal.a_ub(s, n) = -1.0;
        primal.a_ub(s, n + 1 + s) = -1.0;
    }
    const LpSolution lp = solve_lp(primal);
    CHECK(dual_route.cvar == doctest::Approx(lp.objective).epsilon(1e-9));
}

TEST_CASE("risk mappings: expected return") {
    SensitivityMatrix s;
    s.assets = {"A1", "A2"};
    s.drivers = {"D1", "D2", "D3"};
    s.values = Eigen::MatrixXd::Zero(2, 3);
    s.values << 1, 0, 0, 0, 1, 0;

    CHECK(map_expected_return(s, Eigen::VectorXd::Zero(3)).cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd basis = Eigen::VectorXd::Zero(3);
    basis(1) = 1.0;
    const Eigen::VectorXd picked = map_expected_return(s, basis);
    CHECK(picked(0) == 0.0);
    CHECK(picked(1) == 1.0);

    // Loop oracle on a random fixture.
    CounterRng rng(81, CounterRng::stream_of("map-test"));
    SensitivityMatrix r;
    r.assets = {"A1", "A2", "A3", "A4"};
    r.drivers = {"D1", "D2"};
    r.values.resize(4, 2);
    for (Eigen::Index i = 0; i < r.values.size(); ++i) r.values(i) = rng.next_normal();
    Eigen::VectorXd forecast(2);
    forecast << rng.next_normal(), rng.next_normal();
    const Eigen::VectorXd mapped = map_expected_return(r, forecast);
    for (int i = 0; i < 4; ++i) {
        double acc = 0.0;
        for (int j = 0; j < 2; ++j) acc += r.values(i, j) * forecast(j);
        CHECK(mapped(i) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("risk mappings: covariance, volatility, attribution") {
    CounterRng rng(83, CounterRng::stream_of("map-cov"));
    SensitivityMatrix s;
    s.assets = {"A1", "A2", "A3", "A4", "A5"};
    s.drivers = {"D1", "D2"};
    s.values.resize(5, 2);
    for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values(i) = rng.next_normal();

    // Sigma_D = I, zero residual -> Gram matrix of rows.
    const CovEstimate gram =
        map_covariance(s, Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(5));
    CHECK((gram.matrix - s.values * s.values.transpose()).cwiseAbs().maxCoeff() < 1e-12);

    // B = 0 -> diag(residual).
    SensitivityMatrix zero = s;
    zero.values.setZero();
    Eigen::VectorXd resid(5);
    resid << 1, 2, 3, 4, 5;
    const CovEstimate diag = map_covariance(zero, Eigen::MatrixXd::Identity(2, 2), resid);
    CHECK((diag.matrix - resid.asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() == 0.0);

    // PSD and low rank plus diagonal.
    const Eigen::MatrixXd driver_cov = random_psd(2, 85) + 0.1 * Eigen::MatrixXd::Identity(2, 2);
    const CovEstimate cov = map_covariance(s, driver_cov, 0.01 * Eigen::VectorXd::Ones(5));
    const auto [eigs, vecs] = oracles::jacobi_eigen(cov.matrix);
    CHECK(eigs.minCoeff() >= -1e-10);
    const Eigen::MatrixXd factor_part = cov.matrix - 0.01 * Eigen::MatrixXd::Identity(5, 5);
    const auto [feigs, fvecs] = oracles::jacobi_eigen(factor_part);
    int positive = 0;
    for (int i = 0; i < 5; ++i)
        if (std::abs(feigs(i)) > 1e-10) ++positive;
    CHECK(positive <= 2);  // rank at most the driver count

    // Volatility equals the square root of the covariance diagonal.
    const Eigen::VectorXd vol = map_volatility(s, driver_cov);
    const CovEstimate no_resid = map_covariance(s, driver_cov, Eigen::VectorXd::Zero(5));
    for (int i = 0; i < 5; ++i)
        CHECK(vol(i) == doctest::Approx(std::sqrt(no_resid.matrix(i, i))).epsilon(1e-12));

    // beta = e1 with Sigma_D = diag(4, x) -> sigma = 2.
    SensitivityMatrix e1 = s;
    e1.values.setZero();
    e1.values(0, 0) = 1.0;
    Eigen::MatrixXd diag_cov = Eigen::MatrixXd::Zero(2, 2);
    diag_cov.diagonal() << 4.0, 9.0;
    CHECK(map_volatility(e1, diag_cov)(0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(map_volatility(e1, diag_cov)(1) == 0.0);

    // Directional attribution: w = e1 picks row 1 scaled by driver vols.
    WeightVector w;
    w.names = s.assets;
    w.weights = Eigen::VectorXd::Zero(5);
    w.weights(0) = 1.0;
    Eigen::VectorXd driver_vols(2);
    driver_vols << 0.5, 2.0;
    const Eigen::VectorXd attribution = directional_attribution(s, w, driver_vols);
    CHECK(attribution(0) == doctest::Approx(s.values(0, 0) * 0.5).epsilon(1e-12));
    CHECK(attribution(1) == doctest::Approx(s.values(0, 1) * 2.0).epsilon(1e-12));
    CHECK(directional_attribution(s, w, Eigen::VectorXd::Zero(2)).cwiseAbs().maxCoeff() == 0.0);

    // Random fixture loop oracle.
    WeightVector wr;
    wr.names = s.assets;
    wr.weights.resize(5);
    for (int i = 0; i < 5; ++i) wr.weights(i) = rng.next_uniform();
    wr.weights /= wr.weights.sum();
    const Eigen::VectorXd attr = directional_attribution(s, wr, driver_vols);
    for (int j = 0; j < 2; ++j) {
        double acc = 0.0;
        for (int i = 0; i < 5; ++i) acc += wr.weights(i) * s.values(i, j) * driver_vols(j);
        CHECK(attr(j) == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("copula VaR: standard normal single asset") {
    CopulaInputs inputs;
    inputs.mean = Eigen::VectorXd::Zero(1);
    inputs.stddev = Eigen::VectorXd::Ones(1);
    inputs.correlation = Eigen::MatrixXd::Identity(1, 1);
    const CopulaVarResult result =
        copula_var(inputs, Eigen::VectorXd::Ones(1), 0.95, 400000, 7);
    CHECK(result.var == doctest::Approx(1.6449).epsilon(0.02 / 1.6449));
}

TEST_CASE("copula VaR: zero weights give zero VaR") {
    CopulaInputs inputs;
    inputs.mean = Eigen::VectorXd::Zero(2);
    inputs.stddev = Eigen::VectorXd::Ones(2);
    inputs.correlation = Eigen::MatrixXd::Identity(2, 2);
    const CopulaVarResult result =
        copula_var(inputs, Eigen::VectorXd::Zero(2), 0.95, 1000, 3);
    CHECK(result.var == 0.0);
}

TEST_CASE("copula VaR: perfectly correlated pair collapses to one asset") {
    CopulaInputs pair;
    pair.mean = Eigen::VectorXd::Zero(2);
    pair.stddev = Eigen::VectorXd::Ones(2);
    pair.correlation = Eigen::MatrixXd::Ones(2, 2);
    Eigen::VectorXd half(2);
    half << 0.5, 0.5;
    const CopulaVarResult two = copula_var(pair, half, 0.95, 400000, 11);

    CopulaInputs single;
    single.mean = Eigen::VectorXd::Zero(1);
    single.stddev = Eigen::VectorXd::Ones(1);
    single.correlation = Eigen::MatrixXd::Identity(1, 1);
    const CopulaVarResult one = copula_var(single, Eigen::VectorXd::Ones(1), 0.95, 400000, 11);
    CHECK(two.var == doctest::Approx(one.var).epsilon(0.02));
}

TEST_CASE("copula VaR is deterministic per seed") {
    CopulaInputs inputs;
    inputs.mean = Eigen::VectorXd::Zero(3);
    inputs.stddev = Eigen::VectorXd::Ones(3);
    inputs.correlation = Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(3, 1.0 / 3);
    const CopulaVarResult a = copula_var(inputs, w, 0.9, 5000, 17);
    const CopulaVarResult b = copula_var(inputs, w, 0.9, 5000, 17);
    CHECK(a.var == b.var);
}

TEST_CASE("hsp with an injected correlation distance equals the HRP path") {
    SynthConfig synth_cfg;
    synth_cfg.rows = 300;
    synth_cfg.n_assets = 6;
    const SynthData data = make_synthetic_market(synth_cfg);

    const DistanceMatrix corr_dist = correlation_distance(data.assets, 63);
    HspConfig cfg;
    cfg.distance_override = corr_dist;
    cfg.psd_repair = false;
    cfg.covariance_window = 63;
    cfg.bounds = Bounds::uniform(6, 0.0, 1.0);
    const WeightVector via_hsp = hsp_weights(data.assets, data.candidates, cfg);
    const WeightVector via_hrp =
        allocate_from_distance(corr_dist, data.assets, 63, false, cfg.bounds);
    CHECK((via_hsp.weights - via_hrp.weights).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hsp on two assets is the inverse-variance split") {
    SynthConfig synth_cfg;
    synth_cfg.rows = 400;
    synth_cfg.n_assets = 2;
    synth_cfg.n_clusters = 2;
    const SynthData data = make_synthetic_market(synth_cfg);

    HspConfig cfg;
    cfg.selection.m = 2;
    cfg.selection.epsilon = 0.2;
    cfg.sensitivity.model = SensitivityModelKind::linear;
    cfg.selection_window = 126;
    cfg.sensitivity_window = 63;
    cfg.covariance_window = 63;
    const WeightVector w = hsp_weights(data.assets, data.candidates, cfg);

    const CovEstimate cov = covariance_of(data.assets, 63);
    const double iv0 = 1.0 / cov.matrix(0, 0), iv1 = 1.0 / cov.matrix(1, 1);
    CHECK(w.weights(0) == doctest::Approx(iv0 / (iv0 + iv1)).epsilon(1e-9));
}

TEST_CASE("hsp groups the planted clusters and respects bounds") {
    SynthConfig synth_cfg;
    synth_cfg.rows = 400;
    synth_cfg.n_assets = 8;
    synth_cfg.seed = 5;
    const SynthData data = make_synthetic_market(synth_cfg);

    HspConfig cfg;
    cfg.selection.m = 2;
    cfg.selection.epsilon = 0.2;
    cfg.sensitivity.model = SensitivityModelKind::linear;
    cfg.bounds = Bounds::uniform(8, 0.03, 0.30);
    const WeightVector w = hsp_weights(data.assets, data.candidates, cfg);
    CHECK(w.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (int i = 0; i < 8; ++i) {
        CHECK(w.weights(i) >= 0.03 - 1e-9);
        CHECK(w.weights(i) <= 0.30 + 1e-9);
    }
}
