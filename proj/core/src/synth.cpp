#include "hsp/synth.hpp"

#include <cmath>
#include <cstdio>

#include "hsp/errors.hpp"
#include "hsp/rng.hpp"

namespace hsp {
namespace {

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static const int table[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && leap(y) ? 29 : table[m - 1];
}

// Sakamoto's day-of-week; 0 = Sunday.
int day_of_week(int y, int m, int d) {
    static const int offsets[12] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
    if (m < 3) y -= 1;
    return (y + y / 4 - y / 100 + y / 400 + offsets[m - 1] + d) % 7;
}

}  // namespace

std::vector<std::string> weekday_dates(const std::string& start, int count) {
    int y = 0, m = 0, d = 0;
    if (std::sscanf(start.c_str(), "%d-%d-%d", &y, &m, &d) != 3)
        fail(errc::config_invalid, "start date must be ISO-8601 (YYYY-MM-DD)");
    std::vector<std::string> dates;
    dates.reserve(static_cast<std::size_t>(count));
    while (static_cast<int>(dates.size()) < count) {
        const int dow = day_of_week(y, m, d);
        if (dow != 0 && dow != 6) {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
            dates.emplace_back(buf);
        }
        if (++d > days_in_month(y, m)) {
            d = 1;
            if (++m > 12) {
                m = 1;
                ++y;
            }
        }
    }
    return dates;
}

SynthData make_synthetic_market(const SynthConfig& cfg) {
    if (cfg.n_clusters < 1 || cfg.n_assets < cfg.n_clusters)
        fail(errc::config_invalid, "need at least one asset per cluster");
    if (cfg.n_candidates < cfg.n_clusters)
        fail(errc::config_invalid, "candidate pool must include the true drivers");
    if (cfg.rows < 2) fail(errc::too_short, "need at least 2 rows");

    const auto dates = weekday_dates(cfg.start_date, cfg.rows);
    CounterRng rng(cfg.seed, CounterRng::stream_of("synthetic-market"));

    Eigen::MatrixXd factors(cfg.rows, cfg.n_clusters);
    for (Eigen::Index r = 0; r < factors.rows(); ++r)
        for (Eigen::Index c = 0; c < factors.cols(); ++c)
            factors(r, c) = cfg.driver_vol * rng.next_normal();

    SynthData data;
    data.cluster_of.resize(static_cast<std::size_t>(cfg.n_assets));

    Eigen::MatrixXd asset_values(cfg.rows, cfg.n_assets);
    std::vector<std::string> asset_names;
    for (int i = 0; i < cfg.n_assets; ++i) {
        const int cluster = i % cfg.n_clusters;
        data.cluster_of[static_cast<std::size_t>(i)] = cluster;
        const double loading = 0.8 + 0.4 * rng.next_uniform();
        for (int r = 0; r < cfg.rows; ++r)
            asset_values(r, i) = loading * factors(r, cluster) + cfg.noise_vol * rng.next_normal();
        asset_names.push_back("A" + std::to_string(i + 1));
    }
    data.assets = make_panel(dates, asset_names, asset_values);

    Eigen::MatrixXd cand_values(cfg.rows, cfg.n_candidates);
    std::vector<std::string> cand_names;
    for (int k = 0; k < cfg.n_candidates; ++k) {
        if (k < cfg.n_clusters) {
            cand_values.col(k) = factors.col(k);  // a true driver
            cand_names.push_back("D" + std::to_string(k + 1));
        } else if (k < 2 * cfg.n_clusters) {
            const int base = k - cfg.n_clusters;
            for (int r = 0; r < cfg.rows; ++r)
                cand_values(r, k) =
                    factors(r, base) + 0.5 * cfg.driver_vol * rng.next_normal();
            cand_names.push_back("D" + std::to_string(base + 1) + "noisy");
        } else {
            for (int r = 0; r < cfg.rows; ++r)
                cand_values(r, k) = cfg.driver_vol * rng.next_normal();
            cand_names.push_back("N" + std::to_string(k - 2 * cfg.n_clusters + 1));
        }
    }
    data.candidates = make_panel(dates, cand_names, cand_values);
    return data;
}

std::pair<ReturnPanel, ReturnPanel> make_correlation_fixture(const Eigen::MatrixXd& cross_corr,
                                                             int rows, std::uint64_t seed) {
    const Eigen::Index k = cross_corr.rows();
    const Eigen::Index n = cross_corr.cols();
    if (rows < static_cast<int>(n + k) + 2)
        fail(errc::too_short, "fixture needs rows > assets + candidates + 1");

    // Assets share a uniform correlation rho; pick the smallest rho that keeps
    // every candidate's unit-variance decomposition feasible.
    Eigen::MatrixXd gram;
    Eigen::MatrixXd loadings(k, n);
    Eigen::VectorXd idio(k);
    bool found = false;
    for (int step = 0; step <= 90 && !found; ++step) {
        const double rho = 0.01 * step;
        gram = Eigen::MatrixXd::Constant(n, n, rho);
        gram.diagonal().setOnes();
        const Eigen::LLT<Eigen::MatrixXd> llt(gram);
        if (llt.info() != Eigen::Success) continue;
        found = true;
        for (Eigen::Index row = 0; row < k; ++row) {
            const Eigen::VectorXd c = cross_corr.row(row).transpose();
            const Eigen::VectorXd b = llt.solve(c);
            const double explained = c.dot(b);
            if (explained > 1.0 - 1e-3) {
                found = false;
                break;
            }
            loadings.row(row) = b.transpose();
            idio(row) = std::sqrt(1.0 - explained);
        }
    }
    if (!found)
        fail(errc::config_invalid, "no feasible asset correlation for this fixture");

    // Orthonormal, exactly zero-mean basis: QR of [1 | random].
    CounterRng rng(seed, CounterRng::stream_of("correlation-fixture"));
    Eigen::MatrixXd raw(rows, n + k + 1);
    raw.col(0).setOnes();
    for (Eigen::Index r = 0; r < raw.rows(); ++r)
        for (Eigen::Index c = 1; c < raw.cols(); ++c) raw(r, c) = rng.next_normal();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    const Eigen::MatrixXd q =
        qr.householderQ() * Eigen::MatrixXd::Identity(rows, n + k + 1);
    const Eigen::MatrixXd basis = q.rightCols(n + k);  // orthogonal to the ones vector

    const double unit = std::sqrt(static_cast<double>(rows - 1));
    const Eigen::MatrixXd asset_basis = basis.leftCols(n) * unit;   // unit sample variance
    const Eigen::MatrixXd extra_basis = basis.rightCols(k) * unit;

    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(gram).matrixL();
    const Eigen::MatrixXd assets_unit = asset_basis * chol.transpose();  // Gram = gram

    Eigen::MatrixXd cands_unit(rows, k);
    for (Eigen::Index row = 0; row < k; ++row)
        cands_unit.col(row) =
            assets_unit * loadings.row(row).transpose() + idio(row) * extra_basis.col(row);

    const double vol = 0.02;  // returns-like scale; correlations unaffected
    const auto dates = weekday_dates("2020-01-01", rows);
    std::vector<std::string> asset_names, cand_names;
    for (Eigen::Index i = 0; i < n; ++i) asset_names.push_back("Y" + std::to_string(i + 1));
    for (Eigen::Index i = 0; i < k; ++i) cand_names.push_back("X" + std::to_string(i + 1));
    return {make_panel(dates, asset_names, vol * assets_unit),
            make_panel(dates, cand_names, vol * cands_unit)};
}

}  // namespace hsp
