#include "hsp/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsp/errors.hpp"
#include "hsp/lp.hpp"
#include "hsp/qp.hpp"
#include "hsp/rng.hpp"
#include "hsp/stats.hpp"

namespace hsp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ReturnPanel tail_rows(const ReturnPanel& panel, Eigen::Index rows) {
    if (panel.rows() < rows)
        fail(errc::insufficient_history,
             "need " + std::to_string(rows) + " rows, have " + std::to_string(panel.rows()),
             {{"needed", std::to_string(rows)}, {"available", std::to_string(panel.rows())}});
    ReturnPanel out;
    out.names = panel.names;
    out.dates.assign(panel.dates.end() - rows, panel.dates.end());
    out.values = panel.values.bottomRows(rows);
    out.missing = panel.missing.bottomRows(rows);
    return out;
}

void check_names_match(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       const char* what) {
    if (a != b) fail(errc::shape_mismatch, std::string(what) + ": name lists differ");
}

}  // namespace

Bounds Bounds::uniform(Eigen::Index n, double lo, double hi) {
    if (lo > hi) fail(errc::config_invalid, "bounds: lower > upper");
    Bounds b;
    b.lower = Eigen::VectorXd::Constant(n, lo);
    b.upper = Eigen::VectorXd::Constant(n, hi);
    return b;
}

Bounds Bounds::unbounded(Eigen::Index n) {
    Bounds b;
    b.lower = Eigen::VectorXd::Constant(n, -kInf);
    b.upper = Eigen::VectorXd::Constant(n, kInf);
    return b;
}

bool Bounds::finite() const { return lower.allFinite() && upper.allFinite(); }

CovEstimate covariance_of(const ReturnPanel& panel, int window) {
    const ReturnPanel tail = tail_rows(panel, window);
    if (tail.has_missing()) fail(errc::missing_data, "covariance window has missing values");
    CovEstimate cov;
    cov.names = panel.names;
    cov.matrix = sample_covariance(tail.values);
    cov.window = window;
    return cov;
}

Eigen::VectorXd recursive_bisection_weights(const Eigen::MatrixXd& cov,
                                            const std::vector<int>& leaf_order) {
    const Eigen::Index n = cov.rows();
    if (cov.cols() != n) fail(errc::shape_mismatch, "covariance must be square");
    if (static_cast<Eigen::Index>(leaf_order.size()) != n)
        fail(errc::shape_mismatch, "leaf order must be a permutation of all assets");
    {
        std::vector<int> check = leaf_order;
        std::sort(check.begin(), check.end());
        for (Eigen::Index i = 0; i < n; ++i)
            if (check[static_cast<std::size_t>(i)] != i)
                fail(errc::shape_mismatch, "leaf order is not a permutation");
    }
    for (Eigen::Index i = 0; i < n; ++i)
        if (cov(i, i) <= 0.0)
            fail(errc::zero_variance, "zero variance on the covariance diagonal",
                 {{"index", std::to_string(i)}});

    // Inverse-variance weights within a cluster, sigma = w'Vw.
    auto cluster_variance = [&](const std::vector<int>& members) {
        Eigen::VectorXd ivp(members.size());
        for (std::size_t k = 0; k < members.size(); ++k) ivp(k) = 1.0 / cov(members[k], members[k]);
        ivp /= ivp.sum();
        double sigma = 0.0;
        for (std::size_t r = 0; r < members.size(); ++r)
            for (std::size_t c = 0; c < members.size(); ++c)
                sigma += ivp(r) * cov(members[r], members[c]) * ivp(c);
        return sigma;
    };

    Eigen::VectorXd weights = Eigen::VectorXd::Ones(n);
    std::vector<std::vector<int>> stack = {leaf_order};
    while (!stack.empty()) {
        const std::vector<int> segment = std::move(stack.back());
        stack.pop_back();
        if (segment.size() < 2) continue;
        const std::size_t half = segment.size() / 2;
        std::vector<int> left(segment.begin(), segment.begin() + half);
        std::vector<int> right(segment.begin() + half, segment.end());
        const double sigma_left = cluster_variance(left);
        const double sigma_right = cluster_variance(right);
        const double alpha_left = 1.0 - sigma_left / (sigma_left + sigma_right);
        for (int i : left) weights(i) *= alpha_left;
        for (int i : right) weights(i) *= 1.0 - alpha_left;
        stack.push_back(std::move(left));
        stack.push_back(std::move(right));
    }
    return weights;
}

Eigen::VectorXd clip_to_bounds(const Eigen::VectorXd& weights, const Bounds& bounds) {
    const Eigen::Index n = weights.size();
    if (bounds.lower.sum() > 1.0 + 1e-12 || bounds.upper.sum() < 1.0 - 1e-12)
        fail(errc::infeasible, "bounds cannot hold a fully invested portfolio");
    Eigen::VectorXd w = weights;
    for (int pass = 0; pass < 4 * static_cast<int>(n) + 4; ++pass) {
        for (Eigen::Index i = 0; i < n; ++i) w(i) = std::clamp(w(i), bounds.lower(i), bounds.upper(i));
        const double gap = 1.0 - w.sum();
        if (std::abs(gap) < 1e-14) return w;
        double free_mass = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool can_move = gap > 0.0 ? w(i) < bounds.upper(i) - 1e-14
                                            : w(i) > bounds.lower(i) + 1e-14;
            if (can_move) free_mass += std::abs(w(i));
        }
        if (free_mass <= 0.0) break;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool can_move = gap > 0.0 ? w(i) < bounds.upper(i) - 1e-14
                                            : w(i) > bounds.lower(i) + 1e-14;
            if (can_move) w(i) += gap * std::abs(w(i)) / free_mass;
        }
    }
    if (std::abs(w.sum() - 1.0) > 1e-9)
        fail(errc::infeasible, "bound clipping did not reach a fully invested portfolio");
    for (Eigen::Index i = 0; i < n; ++i) w(i) = std::clamp(w(i), bounds.lower(i), bounds.upper(i));
    return w;
}

WeightVector recursive_bisection(const CovEstimate& cov, const std::vector<int>& leaf_order,
                                 const std::optional<Bounds>& bounds) {
    WeightVector out;
    out.names = cov.names;
    out.weights = recursive_bisection_weights(cov.matrix, leaf_order);
    out.bounds = bounds ? *bounds : Bounds::unbounded(out.weights.size());
    if (bounds) out.weights = clip_to_bounds(out.weights, *bounds);
    return out;
}

WeightVector allocate_from_distance(const DistanceMatrix& distance, const ReturnPanel& assets,
                                    int covariance_window, bool psd_repair,
                                    const std::optional<Bounds>& bounds) {
    check_names_match(distance.names, assets.names, "allocate_from_distance");
    const DistanceMatrix clustered = psd_repair ? nearest_psd(distance) : distance;
    const LinkageTree tree = single_linkage(clustered);
    const CovEstimate cov = covariance_of(assets, covariance_window);
    return recursive_bisection(cov, tree.leaf_order, bounds);
}

WeightVector hsp_weights(const ReturnPanel& assets, const ReturnPanel& drivers,
                         const HspConfig& cfg,
                         const std::optional<std::vector<std::string>>& fixed_drivers) {
    if (cfg.distance_override) {
        return allocate_from_distance(*cfg.distance_override, assets, cfg.covariance_window,
                                      cfg.psd_repair, cfg.bounds);
    }

    std::vector<std::string> selected;
    if (fixed_drivers) {
        selected = *fixed_drivers;
    } else {
        const ReturnPanel sel_assets = tail_rows(assets, cfg.selection_window);
        const ReturnPanel sel_candidates = tail_rows(drivers, cfg.selection_window);
        selected = select_drivers(sel_assets, sel_candidates, cfg.selection).selected;
    }
    if (selected.empty()) fail(errc::empty_selection, "no common drivers selected");

    const int fit_rows = cfg.sensitivity_window + cfg.sensitivity.lag;
    const ReturnPanel fit_assets = tail_rows(assets, fit_rows);
    const ReturnPanel fit_drivers = tail_rows(drivers, fit_rows).select_columns(selected);
    const SensitivityMatrix sens = fit_sensitivities(fit_assets, fit_drivers, cfg.sensitivity);
    const DistanceMatrix distance = sensitivity_distance(sens);
    return allocate_from_distance(distance, assets, cfg.covariance_window, cfg.psd_repair,
                                  cfg.bounds);
}

WeightVector closed_form_distance_weights(const DistanceMatrix& d, bool pseudoinverse) {
    const Eigen::Index n = d.size();
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd solved;
    if (pseudoinverse) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.values);
        if (eig.info() != Eigen::Success) fail(errc::eigen_failure, "eigendecomposition failed");
        const double cutoff = 1e-10 * eig.eigenvalues().cwiseAbs().maxCoeff();
        Eigen::VectorXd inv = eig.eigenvalues();
        for (Eigen::Index i = 0; i < n; ++i)
            inv(i) = std::abs(inv(i)) > cutoff ? 1.0 / inv(i) : 0.0;
        solved = eig.eigenvectors() * inv.asDiagonal() * (eig.eigenvectors().transpose() * ones);
    } else {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(d.values);
        if (!lu.isInvertible())
            fail(errc::singular_matrix,
                 "distance matrix is singular; regularize or use the pseudoinverse");
        solved = lu.solve(ones);
        if (!solved.allFinite())
            fail(errc::singular_matrix,
                 "distance matrix is singular; regularize or use the pseudoinverse");
    }
    const double denom = ones.dot(solved);
    if (std::abs(denom) < 1e-14)
        fail(errc::singular_matrix, "1' D^-1 1 is numerically zero");
    WeightVector w;
    w.names = d.names;
    w.weights = solved / denom;
    w.bounds = Bounds::unbounded(n);
    return w;
}

QpWeightsResult qp_distance_weights(const DistanceMatrix& d, const std::optional<Bounds>& bounds,
                                    double lambda, const CovEstimate* cov) {
    const Eigen::Index n = d.size();
    Eigen::MatrixXd m;
    if (cov) {
        check_names_match(d.names, cov->names, "qp_distance_weights");
        m = cov->matrix + lambda * d.values;
    } else {
        m = d.values;
    }

    QpWeightsResult result;
    result.w.names = d.names;
    if (!bounds || !bounds->finite()) {
        // Unconstrained stationary point of w'Mw on the simplex:
        // 2Mw = lambda 1, so the gradient must be constant across assets.
        result.w.weights = qp_stationary_point(m);
        result.w.bounds = Bounds::unbounded(n);
        result.objective = result.w.weights.dot(m * result.w.weights);
        const Eigen::VectorXd g = 2.0 * (m * result.w.weights);
        result.kkt_residual = (g.array() - g.mean()).abs().maxCoeff();
        return result;
    }

    const QpResult qp = solve_qp_simplex_box(m, Eigen::VectorXd::Zero(n), bounds->lower,
                                             bounds->upper);
    result.w.weights = qp.x;
    result.w.bounds = *bounds;
    result.objective = qp.objective;
    result.kkt_residual = qp.kkt_residual;
    result.iterations = qp.iterations;
    return result;
}

DistanceMatrix regularize_distance(const DistanceMatrix& d, double lambda_reg) {
    if (!(lambda_reg > 0.0)) fail(errc::config_invalid, "lambda_reg must be positive");
    DistanceMatrix out = d;
    out.values.diagonal().array() += lambda_reg;
    return out;
}

CvarResult cvar_optimize(const CvarProblem& problem) {
    const Eigen::Index t = problem.scenarios.rows();
    const Eigen::Index n = problem.scenarios.cols();
    if (t < 1) fail(errc::too_short, "cvar: need at least one scenario");
    if (!(problem.alpha > 0.0 && problem.alpha < 1.0))
        fail(errc::config_invalid, "cvar: alpha must lie in (0,1)");
    if (!problem.scenarios.allFinite())
        fail(errc::config_invalid, "cvar: scenarios must be finite");
    if (problem.bounds.lower.size() != n || problem.bounds.upper.size() != n)
        fail(errc::shape_mismatch, "cvar: bounds do not match the scenario width");
    if (problem.bounds.lower.sum() > 1.0 + 1e-12 || problem.bounds.upper.sum() < 1.0 - 1e-12)
        fail(errc::infeasible, "cvar: bounds cannot hold a fully invested portfolio");

    const double q = 1.0 / ((1.0 - problem.alpha) * static_cast<double>(t));

    // Dual LP over tail probabilities p in [0, q], sum p = 1:
    //   max  lambda + sum_i y_i
    //   s.t. y_i + bound * (R' p)_i + bound * lambda <= 0  for both bounds.
    // Row multipliers recover the primal weights and zeta.
    const Eigen::Index vars = t + 1 + n;  // p, lambda, y
    LpProblem dual;
    dual.c = Eigen::VectorXd::Zero(vars);
    dual.c(t) = -1.0;                                   // maximize lambda
    dual.c.tail(n).setConstant(-1.0);                   // maximize sum y
    dual.lower = Eigen::VectorXd::Constant(vars, -kInf);
    dual.upper = Eigen::VectorXd::Constant(vars, kInf);
    dual.lower.head(t).setZero();
    dual.upper.head(t).setConstant(q);

    dual.a_eq.setZero(1, vars);
    dual.a_eq.leftCols(t).setOnes();
    dual.b_eq = Eigen::VectorXd::Ones(1);

    dual.a_ub.setZero(2 * n, vars);
    dual.b_ub = Eigen::VectorXd::Zero(2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lo = problem.bounds.lower(i);
        const double hi = problem.bounds.upper(i);
        for (Eigen::Index s = 0; s < t; ++s) {
            dual.a_ub(i, s) = lo * problem.scenarios(s, i);
            dual.a_ub(n + i, s) = hi * problem.scenarios(s, i);
        }
        dual.a_ub(i, t) = lo;
        dual.a_ub(n + i, t) = hi;
        dual.a_ub(i, t + 1 + i) = 1.0;
        dual.a_ub(n + i, t + 1 + i) = 1.0;
    }

    const LpSolution lp = solve_lp(dual);

    // a_i + b_i = 1 with a, b >= 0; w_i = lo a_i + hi b_i lies in the box.
    CvarResult result;
    result.w.names = problem.names;
    result.w.bounds = problem.bounds;
    result.w.weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double a = -lp.duals_ub(i);
        const double b = -lp.duals_ub(n + i);
        double w = problem.bounds.lower(i) * a + problem.bounds.upper(i) * b;
        result.w.weights(i) = std::clamp(w, problem.bounds.lower(i), problem.bounds.upper(i));
    }
    result.var_threshold = -lp.duals_eq(0);
    result.lp_objective = -lp.objective;  // dual was solved as a minimization

    // Recompute the primal objective at (w, zeta): optimal z_t are explicit.
    const Eigen::VectorXd portfolio = problem.scenarios * result.w.weights;
    double tail = 0.0;
    for (Eigen::Index s = 0; s < t; ++s)
        tail += std::max(0.0, -portfolio(s) - result.var_threshold);
    result.cvar = result.var_threshold + q * tail;
    result.optimality_gap = std::abs(result.cvar - result.lp_objective);
    result.iterations = lp.iterations;
    return result;
}

Eigen::VectorXd map_expected_return(const SensitivityMatrix& s,
                                    const Eigen::VectorXd& driver_forecast) {
    if (driver_forecast.size() != s.values.cols())
        fail(errc::shape_mismatch, "driver forecast does not match the sensitivity width");
    return s.values * driver_forecast;
}

CovEstimate map_covariance(const SensitivityMatrix& s, const Eigen::MatrixXd& driver_cov,
                           const Eigen::VectorXd& residual_var) {
    if (driver_cov.rows() != s.values.cols() || driver_cov.cols() != s.values.cols())
        fail(errc::shape_mismatch, "driver covariance does not match the sensitivity width");
    if (residual_var.size() != s.values.rows())
        fail(errc::shape_mismatch, "residual variance does not match the asset count");
    CovEstimate cov;
    cov.names = s.assets;
    cov.matrix = s.values * driver_cov * s.values.transpose();
    cov.matrix += residual_var.asDiagonal();
    cov.matrix = (0.5 * (cov.matrix + cov.matrix.transpose())).eval();
    return cov;
}

Eigen::VectorXd map_volatility(const SensitivityMatrix& s, const Eigen::MatrixXd& driver_cov) {
    if (driver_cov.rows() != s.values.cols() || driver_cov.cols() != s.values.cols())
        fail(errc::shape_mismatch, "driver covariance does not match the sensitivity width");
    Eigen::VectorXd vol(s.values.rows());
    for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
        const double quad = s.values.row(i) * driver_cov * s.values.row(i).transpose();
        if (quad < -1e-12)
            fail(errc::negative_quadratic_form, "driver covariance is not PSD",
                 {{"asset", s.assets[static_cast<std::size_t>(i)]}});
        vol(i) = std::sqrt(std::max(quad, 0.0));
    }
    return vol;
}

Eigen::VectorXd directional_attribution(const SensitivityMatrix& s, const WeightVector& w,
                                        const Eigen::VectorXd& driver_vols) {
    check_names_match(s.assets, w.names, "directional_attribution");
    if (driver_vols.size() != s.values.cols())
        fail(errc::shape_mismatch, "driver vols do not match the sensitivity width");
    return (s.values.transpose() * w.weights).cwiseProduct(driver_vols);
}

CopulaVarResult copula_var(const CopulaInputs& inputs, const Eigen::VectorXd& w, double alpha,
                           int n_samples, std::uint64_t seed) {
    const Eigen::Index n = inputs.mean.size();
    if (inputs.stddev.size() != n || inputs.correlation.rows() != n ||
        inputs.correlation.cols() != n || w.size() != n)
        fail(errc::shape_mismatch, "copula inputs disagree on the asset count");
    if (!(alpha > 0.0 && alpha < 1.0)) fail(errc::config_invalid, "alpha must lie in (0,1)");
    if (n_samples < 2) fail(errc::config_invalid, "need at least 2 samples");

    Eigen::LLT<Eigen::MatrixXd> llt(inputs.correlation);
    if (llt.info() != Eigen::Success) {
        const Eigen::MatrixXd repaired = nearest_psd(inputs.correlation, 1e-12);
        Eigen::MatrixXd bumped = repaired;
        bumped.diagonal().array() += 1e-12;
        llt.compute(bumped);
        if (llt.info() != Eigen::Success)
            fail(errc::non_psd_correlation, "correlation matrix not PSD after repair");
    }
    const Eigen::MatrixXd chol = llt.matrixL();

    CounterRng rng(seed, CounterRng::stream_of("copula-var"));
    std::vector<double> portfolio(static_cast<std::size_t>(n_samples));
    double sum = 0.0, sum_sq = 0.0;
    Eigen::VectorXd g(n);
    for (int k = 0; k < n_samples; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) g(i) = rng.next_normal();
        const Eigen::VectorXd z = chol * g;
        const Eigen::VectorXd sample = inputs.mean + inputs.stddev.cwiseProduct(z);
        const double r = w.dot(sample);
        portfolio[static_cast<std::size_t>(k)] = r;
        sum += r;
        sum_sq += r * r;
    }
    std::sort(portfolio.begin(), portfolio.end());

    // Linear-interpolation quantile at level 1 - alpha.
    const double pos = (1.0 - alpha) * static_cast<double>(n_samples - 1);
    const std::size_t idx = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - std::floor(pos);
    const double quantile =
        idx + 1 < portfolio.size()
            ? portfolio[idx] * (1.0 - frac) + portfolio[idx + 1] * frac
            : portfolio[idx];

    CopulaVarResult result;
    result.var = -quantile;
    result.sample_mean = sum / n_samples;
    result.sample_std =
        std::sqrt(std::max(0.0, sum_sq / n_samples - result.sample_mean * result.sample_mean));
    result.n_samples = n_samples;
    return result;
}

DistanceMatrix correlation_distance(const ReturnPanel& assets, int window) {
    const ReturnPanel tail = tail_rows(assets, window);
    const Eigen::Index n = assets.cols();
    DistanceMatrix d;
    d.names = assets.names;
    d.values.setZero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double rho =
                pearson(tail.values.col(i), tail.values.col(j),
                        assets.names[static_cast<std::size_t>(i)].c_str(),
                        assets.names[static_cast<std::size_t>(j)].c_str());
            const double dist = std::sqrt(std::max(0.0, 0.5 * (1.0 - rho)));
            d.values(i, j) = dist;
            d.values(j, i) = dist;
        }
    return d;
}

}  // namespace hsp
