#include "hsp/driver_selection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <set>

#include "hsp/errors.hpp"
#include "hsp/stats.hpp"

namespace hsp {

double pearson(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const char* label_x,
               const char* label_y) {
    if (x.size() != y.size() || x.size() < 2)
        fail(errc::shape_mismatch, "pearson: inputs must share length >= 2");
    const double n = static_cast<double>(x.size());
    const Eigen::VectorXd xc = x.array() - x.mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double sx = xc.squaredNorm();
    const double sy = yc.squaredNorm();
    if (sx <= 0.0)
        fail(errc::degenerate_series, std::string("zero variance in '") + label_x + "'",
             {{"name", label_x}});
    if (sy <= 0.0)
        fail(errc::degenerate_series, std::string("zero variance in '") + label_y + "'",
             {{"name", label_y}});
    (void)n;
    return xc.dot(yc) / std::sqrt(sx * sy);
}

OlsFit ridge_ols(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, double ridge,
                 bool with_intercept) {
    Eigen::MatrixXd x;
    if (with_intercept) {
        x.resize(design.rows(), design.cols() + 1);
        x.col(0).setOnes();
        x.rightCols(design.cols()) = design;
    } else {
        x = design;
    }
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += ridge;
    const Eigen::LDLT<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success)
        fail(errc::singular_design, "normal equations not solvable");
    OlsFit fit;
    fit.coef = solver.solve(x.transpose() * target);
    fit.fitted = x * fit.coef;
    fit.residuals = target - fit.fitted;
    fit.residual_variance = fit.residuals.squaredNorm() / static_cast<double>(target.size());
    return fit;
}

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows) {
    if (rows.rows() < 2) fail(errc::too_short, "covariance needs >= 2 rows");
    const Eigen::MatrixXd centered = rows.rowwise() - rows.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
}

double population_covariance(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size() || x.size() == 0)
        fail(errc::shape_mismatch, "covariance: inputs must share a non-zero length");
    return x.dot(y) / static_cast<double>(x.size()) - x.mean() * y.mean();
}

namespace {

constexpr double kGsRidge = 1e-8;

void check_aligned(const ReturnPanel& assets, const ReturnPanel& candidates) {
    if (assets.dates != candidates.dates)
        fail(errc::shape_mismatch, "asset and candidate panels must share the date index");
    if (assets.has_missing() || candidates.has_missing())
        fail(errc::missing_data, "selection panels must not contain missing values");
}

/// Candidate-by-asset Pearson matrix; rows lagged by `lag` (candidate at t-lag
/// against asset at t).
Eigen::MatrixXd correlation_matrix(const ReturnPanel& assets, const ReturnPanel& candidates,
                                   int lag) {
    const Eigen::Index t = assets.rows();
    if (t - lag < 2) fail(errc::too_short, "not enough rows for lagged correlations");
    Eigen::MatrixXd corr(candidates.cols(), assets.cols());
    for (Eigen::Index k = 0; k < candidates.cols(); ++k) {
        const Eigen::VectorXd xk = candidates.values.col(k).head(t - lag);
        for (Eigen::Index i = 0; i < assets.cols(); ++i) {
            const Eigen::VectorXd yi = assets.values.col(i).tail(t - lag);
            corr(k, i) = pearson(xk, yi, candidates.names[static_cast<std::size_t>(k)].c_str(),
                                 assets.names[static_cast<std::size_t>(i)].c_str());
        }
    }
    return corr;
}

std::set<std::string> exclusion_set(const ReturnPanel& candidates, const SelectionConfig& cfg,
                                    const Eigen::MatrixXd& corr,
                                    std::vector<std::string>* flagged) {
    std::set<std::string> excluded(cfg.exclude.begin(), cfg.exclude.end());
    if (cfg.collinearity_screen) {
        for (Eigen::Index k = 0; k < corr.rows(); ++k) {
            if (corr.row(k).cwiseAbs().maxCoeff() > cfg.collinearity_limit) {
                const auto& name = candidates.names[static_cast<std::size_t>(k)];
                if (flagged) flagged->push_back(name);
                excluded.insert(name);
            }
        }
    }
    return excluded;
}

/// Ranking: repeatedness desc, strength desc, identifier asc.
std::vector<int> ranked_indices(const Eigen::VectorXi& repeatedness,
                                const Eigen::VectorXd& strength,
                                const std::vector<std::string>& names) {
    std::vector<int> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (repeatedness(a) != repeatedness(b)) return repeatedness(a) > repeatedness(b);
        if (strength(a) != strength(b)) return strength(a) > strength(b);
        return names[static_cast<std::size_t>(a)] < names[static_cast<std::size_t>(b)];
    });
    return order;
}

void fill_selection(SelectionScorecard& card, const std::set<std::string>& excluded, int m,
                    bool require_relevance) {
    const auto order = ranked_indices(card.repeatedness, card.strength, card.candidates);
    card.ranking.clear();
    card.selected.clear();
    for (int idx : order) card.ranking.push_back(card.candidates[static_cast<std::size_t>(idx)]);
    for (int idx : order) {
        if (static_cast<int>(card.selected.size()) == m) break;
        const auto& name = card.candidates[static_cast<std::size_t>(idx)];
        if (excluded.count(name)) continue;
        if (require_relevance && card.repeatedness(idx) == 0) continue;
        card.selected.push_back(name);
    }
}

std::vector<Eigen::Index> subset_columns(const ReturnPanel& candidates,
                                         const std::vector<std::string>& subset) {
    std::vector<Eigen::Index> cols;
    cols.reserve(subset.size());
    for (const auto& name : subset) cols.push_back(candidates.column(name));
    return cols;
}

Eigen::MatrixXd gather_columns(const ReturnPanel& panel, const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(panel.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) =
        panel.values.col(cols[j]);
    return out;
}

/// Fitted values of every asset regressed on the given driver columns.
Eigen::MatrixXd fitted_on_subset(const ReturnPanel& assets, const Eigen::MatrixXd& design) {
    Eigen::MatrixXd fitted(assets.rows(), assets.cols());
    for (Eigen::Index i = 0; i < assets.cols(); ++i)
        fitted.col(i) = ridge_ols(design, assets.values.col(i), kGsRidge, true).fitted;
    return fitted;
}

double gs_from_design(const ReturnPanel& assets, const Eigen::MatrixXd& design) {
    const Eigen::MatrixXd fitted = fitted_on_subset(assets, design);
    double total = 0.0;
    for (Eigen::Index i = 0; i < fitted.cols(); ++i)
        for (Eigen::Index j = 0; j < fitted.cols(); ++j) {
            if (i == j) continue;
            // E[Yi Yj | S] - E[Yi | S] E[Yj | S], both moments over the window.
            total += std::abs(population_covariance(fitted.col(i), fitted.col(j)));
        }
    if (!std::isfinite(total)) fail(errc::singular_design, "screen-off objective is non-finite");
    return total;
}

SelectionScorecard gs_scorecard(const ReturnPanel& assets, const ReturnPanel& candidates,
                                const SelectionConfig& cfg, std::vector<std::string> selected,
                                double objective, SelectionMode mode) {
    SelectionScorecard card = scorecard_from_correlations(
        correlation_matrix(assets, candidates, 0), candidates.names, assets.names, cfg);
    card.mode = mode;
    card.selected = std::move(selected);
    card.objective = objective;
    card.constraint_bound = static_cast<double>(card.selected.size()) * cfg.epsilon;
    card.constraint_satisfied = objective <= card.constraint_bound;
    // Ranking from the scorecard stays correlation-based; the selected set is
    // the optimizer's output.
    return card;
}

}  // namespace

SelectionScorecard scorecard_from_correlations(const Eigen::MatrixXd& corr,
                                               const std::vector<std::string>& candidates,
                                               const std::vector<std::string>& assets,
                                               const SelectionConfig& cfg) {
    if (corr.rows() != static_cast<Eigen::Index>(candidates.size()) ||
        corr.cols() != static_cast<Eigen::Index>(assets.size()))
        fail(errc::shape_mismatch, "correlation matrix does not match name lists");
    if (cfg.m < 1 || cfg.m > static_cast<int>(candidates.size()))
        fail(errc::config_invalid, "m must be in [1, candidate count]");
    if (cfg.epsilon < 0.0 || cfg.epsilon > 1.0)
        fail(errc::config_invalid, "epsilon must lie in [0, 1]");

    SelectionScorecard card;
    card.mode = SelectionMode::rccp_rank;
    card.candidates = candidates;
    card.assets = assets;
    card.corr = corr;
    card.relevance = (corr.cwiseAbs().array() >= cfg.epsilon).cast<int>().matrix();
    card.repeatedness = card.relevance.rowwise().sum();
    card.strength = (corr.cwiseAbs().array() * card.relevance.cast<double>().array())
                        .matrix()
                        .rowwise()
                        .sum();

    std::set<std::string> excluded(cfg.exclude.begin(), cfg.exclude.end());
    fill_selection(card, excluded, cfg.m, /*require_relevance=*/false);
    return card;
}

SelectionScorecard select_rccp_rank(const ReturnPanel& assets, const ReturnPanel& candidates,
                                    const SelectionConfig& cfg) {
    check_aligned(assets, candidates);
    const Eigen::MatrixXd corr = correlation_matrix(assets, candidates, 0);
    SelectionScorecard card =
        scorecard_from_correlations(corr, candidates.names, assets.names, cfg);
    const auto excluded = exclusion_set(candidates, cfg, corr, &card.flagged_collinear);
    fill_selection(card, excluded, cfg.m, /*require_relevance=*/false);
    return card;
}

SelectionScorecard select_rccp_threshold(const ReturnPanel& assets, const ReturnPanel& candidates,
                                         const SelectionConfig& cfg) {
    check_aligned(assets, candidates);
    SelectionScorecard card;
    card.mode = SelectionMode::rccp_threshold;
    card.candidates = candidates.names;
    card.assets = assets.names;
    card.corr = correlation_matrix(assets, candidates, 0);
    card.corr_lag1 = correlation_matrix(assets, candidates, 1);

    // A candidate is specific for an asset when it clears both lag thresholds.
    card.relevance = ((card.corr.array() > cfg.t0) && (card.corr_lag1.array() > cfg.t1))
                         .cast<int>()
                         .matrix();
    card.repeatedness = card.relevance.rowwise().sum();
    card.strength = (card.corr.cwiseAbs().array() * card.relevance.cast<double>().array())
                        .matrix()
                        .rowwise()
                        .sum();

    const auto excluded = exclusion_set(candidates, cfg, card.corr, &card.flagged_collinear);
    fill_selection(card, excluded, cfg.m, /*require_relevance=*/true);
    if (card.selected.empty())
        fail(errc::empty_selection, "no candidate clears both thresholds",
             {{"t0", std::to_string(cfg.t0)}, {"t1", std::to_string(cfg.t1)}});
    return card;
}

double score_gs(const ReturnPanel& assets, const std::vector<std::string>& subset,
                const ReturnPanel& candidates) {
    check_aligned(assets, candidates);
    if (subset.empty()) fail(errc::config_invalid, "score_gs: empty subset");
    return gs_from_design(assets, gather_columns(candidates, subset_columns(candidates, subset)));
}

double residual_dependence(const ReturnPanel& assets, const std::vector<std::string>& subset,
                           const ReturnPanel& candidates) {
    check_aligned(assets, candidates);
    if (subset.empty()) fail(errc::config_invalid, "residual_dependence: empty subset");
    const Eigen::MatrixXd design =
        gather_columns(candidates, subset_columns(candidates, subset));
    Eigen::MatrixXd resid(assets.rows(), assets.cols());
    for (Eigen::Index i = 0; i < assets.cols(); ++i)
        resid.col(i) = ridge_ols(design, assets.values.col(i), kGsRidge, true).residuals;
    double total = 0.0;
    for (Eigen::Index i = 0; i < resid.cols(); ++i)
        for (Eigen::Index j = 0; j < resid.cols(); ++j)
            if (i != j) total += std::abs(population_covariance(resid.col(i), resid.col(j)));
    return total;
}

SelectionScorecard select_greedy_gs(const ReturnPanel& assets, const ReturnPanel& candidates,
                                    const SelectionConfig& cfg) {
    check_aligned(assets, candidates);
    const Eigen::MatrixXd corr = correlation_matrix(assets, candidates, 0);
    std::vector<std::string> flagged;
    const auto excluded = exclusion_set(candidates, cfg, corr, &flagged);

    std::vector<std::string> pool;
    for (const auto& name : candidates.names)
        if (!excluded.count(name)) pool.push_back(name);
    if (pool.empty()) fail(errc::empty_selection, "all candidates excluded");

    std::vector<std::string> chosen;
    double current = std::numeric_limits<double>::infinity();  // G of the empty set
    while (static_cast<int>(chosen.size()) < cfg.m) {
        std::string best;
        double best_value = std::numeric_limits<double>::infinity();
        for (const auto& name : pool) {
            if (std::find(chosen.begin(), chosen.end(), name) != chosen.end()) continue;
            std::vector<std::string> trial = chosen;
            trial.push_back(name);
            const double value = score_gs(assets, trial, candidates);
            if (value < best_value) {
                best_value = value;
                best = name;
            }
        }
        if (best.empty() || best_value >= current) break;  // no addition decreases G
        chosen.push_back(best);
        current = best_value;
    }
    if (chosen.empty()) fail(errc::empty_selection, "greedy selection found no driver");

    SelectionScorecard card =
        gs_scorecard(assets, candidates, cfg, chosen, current, SelectionMode::greedy_gs);
    card.flagged_collinear = flagged;
    return card;
}

SelectionScorecard select_dp_gs(const ReturnPanel& assets, const ReturnPanel& candidates,
                                const SelectionConfig& cfg) {
    check_aligned(assets, candidates);
    const Eigen::Index k_count = candidates.cols();
    if (static_cast<long long>(k_count) * cfg.m > 1000000LL)
        fail(errc::table_too_large, "DP table K*m exceeds 10^6 entries");

    const Eigen::MatrixXd corr = correlation_matrix(assets, candidates, 0);
    std::vector<std::string> flagged;
    const auto excluded = exclusion_set(candidates, cfg, corr, &flagged);

    // Context-free marginal cost of each candidate.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> delta(static_cast<std::size_t>(k_count), inf);
    for (Eigen::Index k = 0; k < k_count; ++k) {
        const auto& name = candidates.names[static_cast<std::size_t>(k)];
        if (excluded.count(name)) continue;
        delta[static_cast<std::size_t>(k)] = score_gs(assets, {name}, candidates);
    }

    // F(k, m') = min(F(k-1, m'), F(k-1, m'-1) + delta(k)), F(*, 0) = 0.
    const int m = cfg.m;
    Eigen::MatrixXd table(k_count + 1, m + 1);
    table.setConstant(inf);
    table.col(0).setZero();
    for (Eigen::Index k = 1; k <= k_count; ++k)
        for (int j = 1; j <= m; ++j) {
            const double skip = table(k - 1, j);
            const double take = table(k - 1, j - 1) + delta[static_cast<std::size_t>(k - 1)];
            table(k, j) = std::min(skip, take);
        }

    if (!std::isfinite(table(k_count, m)))
        fail(errc::empty_selection, "DP found no feasible subset of size m");

    std::vector<std::string> chosen;
    int j = m;
    for (Eigen::Index k = k_count; k >= 1 && j > 0; --k) {
        const double take = table(k - 1, j - 1) + delta[static_cast<std::size_t>(k - 1)];
        if (take <= table(k - 1, j)) {
            chosen.push_back(candidates.names[static_cast<std::size_t>(k - 1)]);
            --j;
        }
    }
    std::reverse(chosen.begin(), chosen.end());

    SelectionScorecard card = gs_scorecard(assets, candidates, cfg, chosen,
                                           score_gs(assets, chosen, candidates),
                                           SelectionMode::dp_gs);
    card.flagged_collinear = flagged;
    return card;
}

MlCauseModel fit_ml_cause_model(const ReturnPanel& assets, const ReturnPanel& candidates,
                                const std::vector<std::string>& subset) {
    check_aligned(assets, candidates);
    if (subset.empty()) fail(errc::config_invalid, "empty cause subset");
    const auto cols = subset_columns(candidates, subset);
    const Eigen::MatrixXd causes = gather_columns(candidates, cols);
    const Eigen::Index n = assets.cols();
    const Eigen::Index m = causes.cols();

    MlCauseModel model;
    model.causes = subset;
    model.alpha.resize(n, m);
    model.noise_var.resize(n);
    model.cause_var.resize(m);
    model.cause_mean.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        model.cause_mean(k) = causes.col(k).mean();
        const Eigen::VectorXd centered = causes.col(k).array() - model.cause_mean(k);
        model.cause_var(k) = centered.squaredNorm() / static_cast<double>(causes.rows() - 1);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const OlsFit fit = ridge_ols(causes, assets.values.col(i), kGsRidge, false);
        model.alpha.row(i) = fit.coef.transpose();
        model.noise_var(i) = std::max(fit.residual_variance, 1e-12);
    }

    // sigma_X^2 = sum_k alpha^2 Var(Z_k) + sigma_eps^2; shared-cause covariance
    // sum_k alpha_ik alpha_jk Var(Z_k).
    model.asset_var.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        model.asset_var(i) =
            (model.alpha.row(i).array().square() * model.cause_var.transpose().array()).sum() +
            model.noise_var(i);
    model.implied_corr.setIdentity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const double cov =
                (model.alpha.row(i).array() * model.alpha.row(j).array() *
                 model.cause_var.transpose().array())
                    .sum();
            model.implied_corr(i, j) =
                cov / std::sqrt(model.asset_var(i) * model.asset_var(j));
        }

    model.log_likelihood = ml_log_likelihood(model, assets.values, causes);
    return model;
}

double ml_log_likelihood(const MlCauseModel& model, const Eigen::MatrixXd& asset_rows,
                         const Eigen::MatrixXd& cause_rows) {
    const Eigen::Index n = asset_rows.cols();
    const Eigen::Index t = asset_rows.rows();
    if (cause_rows.rows() != t || cause_rows.cols() != model.alpha.cols())
        fail(errc::shape_mismatch, "likelihood inputs do not match the model");

    // Sigma_ij = rho_ij sigma_i sigma_j with unit diagonal scaled by asset_var.
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            cov(i, j) = model.implied_corr(i, j) *
                        std::sqrt(model.asset_var(i) * model.asset_var(j));

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        // Shrink off-diagonals toward the diagonal until the matrix factors.
        Eigen::MatrixXd shrunk = cov;
        double factor = 0.99;
        bool ok = false;
        for (int iter = 0; iter < 100 && !ok; ++iter) {
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    if (i != j) shrunk(i, j) = cov(i, j) * factor;
            llt.compute(shrunk);
            ok = llt.info() == Eigen::Success;
            factor *= 0.99;
        }
        if (!ok)
            fail(errc::singular_covariance,
                 "implied covariance is not positive definite after shrinkage");
    }

    const Eigen::MatrixXd l = llt.matrixL();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(l(i, i));

    const Eigen::MatrixXd means = cause_rows * model.alpha.transpose();  // t x n
    double quad = 0.0;
    for (Eigen::Index r = 0; r < t; ++r) {
        const Eigen::VectorXd diff = asset_rows.row(r).transpose() - means.row(r).transpose();
        quad += llt.matrixL().solve(diff).squaredNorm();
    }
    const double log2pi = std::log(2.0 * std::numbers::pi);
    return -0.5 * (static_cast<double>(t) * (static_cast<double>(n) * log2pi + log_det) + quad);
}

SelectionScorecard select_max_likelihood(const ReturnPanel& assets, const ReturnPanel& candidates,
                                         const SelectionConfig& cfg) {
    check_aligned(assets, candidates);
    const Eigen::MatrixXd corr = correlation_matrix(assets, candidates, 0);
    std::vector<std::string> flagged;
    const auto excluded = exclusion_set(candidates, cfg, corr, &flagged);

    std::vector<std::string> pool;
    for (const auto& name : candidates.names)
        if (!excluded.count(name)) pool.push_back(name);
    if (pool.empty()) fail(errc::empty_selection, "all candidates excluded");
    const int m = std::min<int>(cfg.m, static_cast<int>(pool.size()));

    std::vector<std::string> chosen;
    double best_ll = -std::numeric_limits<double>::infinity();
    if (cfg.exhaustive_ml) {
        if (pool.size() > 15)
            fail(errc::table_too_large, "exhaustive ML search limited to K <= 15");
        std::vector<int> pick(static_cast<std::size_t>(m));
        std::function<void(std::size_t, int)> recurse = [&](std::size_t start, int depth) {
            if (depth == m) {
                std::vector<std::string> trial;
                for (int idx : pick) trial.push_back(pool[static_cast<std::size_t>(idx)]);
                const double ll = fit_ml_cause_model(assets, candidates, trial).log_likelihood;
                if (ll > best_ll) {
                    best_ll = ll;
                    chosen = trial;
                }
                return;
            }
            for (std::size_t i = start; i < pool.size(); ++i) {
                pick[static_cast<std::size_t>(depth)] = static_cast<int>(i);
                recurse(i + 1, depth + 1);
            }
        };
        recurse(0, 0);
    } else {
        while (static_cast<int>(chosen.size()) < m) {
            std::string best;
            double best_value = -std::numeric_limits<double>::infinity();
            for (const auto& name : pool) {
                if (std::find(chosen.begin(), chosen.end(), name) != chosen.end()) continue;
                std::vector<std::string> trial = chosen;
                trial.push_back(name);
                const double ll = fit_ml_cause_model(assets, candidates, trial).log_likelihood;
                if (ll > best_value) {
                    best_value = ll;
                    best = name;
                }
            }
            chosen.push_back(best);
            best_ll = best_value;
        }
    }

    SelectionScorecard card =
        gs_scorecard(assets, candidates, cfg, chosen, std::numeric_limits<double>::quiet_NaN(),
                     SelectionMode::max_likelihood);
    card.objective = best_ll;  // log-likelihood, larger is better
    card.constraint_bound = std::numeric_limits<double>::quiet_NaN();
    card.constraint_satisfied = true;
    card.flagged_collinear = flagged;
    return card;
}

SelectionScorecard select_drivers(const ReturnPanel& assets, const ReturnPanel& candidates,
                                  const SelectionConfig& cfg) {
    switch (cfg.mode) {
        case SelectionMode::rccp_rank: return select_rccp_rank(assets, candidates, cfg);
        case SelectionMode::rccp_threshold: return select_rccp_threshold(assets, candidates, cfg);
        case SelectionMode::greedy_gs: return select_greedy_gs(assets, candidates, cfg);
        case SelectionMode::dp_gs: return select_dp_gs(assets, candidates, cfg);
        case SelectionMode::max_likelihood:
            return select_max_likelihood(assets, candidates, cfg);
    }
    fail(errc::config_invalid, "unknown selection mode");
}

}  // namespace hsp
