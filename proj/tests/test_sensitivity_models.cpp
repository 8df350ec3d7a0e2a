#include <doctest.h>

#include <cmath>

#include "hsp/errors.hpp"
#include "hsp/driver_selection.hpp"
#include "hsp/rng.hpp"
#include "hsp/sensitivity_models.hpp"
#include "hsp/stats.hpp"

using namespace hsp;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                              double scale = 1.0) {
    CounterRng rng(seed, CounterRng::stream_of("sens-test"));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = scale * rng.next_normal();
    return m;
}

ReturnPanel panel_of(const Eigen::MatrixXd& values, const std::string& prefix) {
    std::vector<std::string> dates, names;
    for (Eigen::Index i = 0; i < values.rows(); ++i)
        dates.push_back("d" + std::to_string(1000 + i));
    for (Eigen::Index j = 0; j < values.cols(); ++j)
        names.push_back(prefix + std::to_string(j + 1));
    return make_panel(dates, names, values);
}

}  // namespace

TEST_CASE("fit_linear recovers exact linear data") {
    const Eigen::MatrixXd drivers = random_matrix(50, 2, 1);
    const Eigen::VectorXd y = 2.0 * drivers.col(0) - 3.0 * drivers.col(1);
    const LinearSensitivityModel model = fit_linear(y, drivers, 0);
    CHECK(model.betas(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(model.betas(1) == doctest::Approx(-3.0).epsilon(1e-10));
    CHECK(model.residual_variance == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("fit_linear on independent noise shrinks to zero") {
    const int rows = 4000;
    const Eigen::MatrixXd drivers = random_matrix(rows, 1, 2);
    CounterRng rng(3, CounterRng::stream_of("noise-target"));
    Eigen::VectorXd y(rows);
    for (int t = 0; t < rows; ++t) y(t) = rng.next_normal();
    const LinearSensitivityModel model = fit_linear(y, drivers, 0);
    // Standard error of the slope on independent data.
    const double se = std::sqrt(model.residual_variance / drivers.col(0).squaredNorm() *
                                static_cast<double>(rows) / (rows - 2.0));
    CHECK(std::abs(model.betas(0)) < 3.0 * se);
}

TEST_CASE("fit_linear lag bookkeeping") {
    const int rows = 60;
    const Eigen::MatrixXd drivers = random_matrix(rows, 1, 4);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(rows);
    for (int t = 1; t < rows; ++t) y(t) = drivers(t - 1, 0);
    const LinearSensitivityModel model = fit_linear(y, drivers, 1);
    CHECK(model.betas(0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(model.residual_variance == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("identity-activation network reaches the OLS optimum on linear data") {
    const int rows = 80;
    const Eigen::MatrixXd drivers = random_matrix(rows, 2, 5, 0.01);
    const Eigen::VectorXd y = 2.0 * drivers.col(0) - 3.0 * drivers.col(1);

    NetworkSpec spec;
    spec.hidden = {8};
    spec.activation = Activation::identity;
    spec.seed = 7;
    spec.epochs = 6000;
    spec.learning_rate = 0.05;
    spec.validation_fraction = 0.0;
    const Network net = train_network(y, drivers, spec);

    const LinearSensitivityModel ols = fit_linear(y, drivers, 0);
    double ols_sq = 0.0;
    for (int t = 0; t < rows; ++t) {
        const double fit = ols.intercept + ols.betas.dot(drivers.row(t).transpose());
        ols_sq += (fit - y(t)) * (fit - y(t));
    }
    const double ols_rmse = std::sqrt(ols_sq / rows);
    CHECK(net.train_rmse() <= ols_rmse + 1e-6);
}

TEST_CASE("constant target is learned to 1e-4") {
    const int rows = 40;
    const Eigen::MatrixXd drivers = random_matrix(rows, 2, 6, 0.01);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(rows, 0.37);
    NetworkSpec spec;
    spec.hidden = {8};
    spec.seed = 11;
    spec.epochs = 3000;
    spec.learning_rate = 0.05;
    spec.validation_fraction = 0.0;
    const Network net = train_network(y, drivers, spec);
    CHECK(net.train_rmse() == doctest::Approx(0.0).epsilon(1e-4));
    CHECK(std::abs(net.predict(drivers.row(0).transpose()) - 0.37) < 1e-4);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const Eigen::MatrixXd drivers = random_matrix(60, 3, 8, 0.01);
    const Eigen::VectorXd y = drivers.col(0) - 0.5 * drivers.col(2);
    NetworkSpec spec;
    spec.hidden = {8, 8};
    spec.seed = 21;
    spec.epochs = 50;
    const Network a = train_network(y, drivers, spec);
    const Network b = train_network(y, drivers, spec);
    for (std::size_t l = 0; l < a.weights_.size(); ++l) {
        CHECK((a.weights_[l] - b.weights_[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.biases_[l] - b.biases_[l]).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("hand chain rule on a 1-hidden-layer tanh network") {
    // y = w2 . tanh(W1 x + b1) + b2, gradient = W1' (w2 * tanh'(z)).
    Eigen::MatrixXd w1(2, 2);
    w1 << 0.5, -0.25, 0.75, 0.1;
    Eigen::VectorXd b1(2);
    b1 << 0.1, -0.2;
    Eigen::MatrixXd w2(1, 2);
    w2 << 1.5, -0.8;
    Eigen::VectorXd b2(1);
    b2 << 0.05;
    const Network net = make_network({w1, w2}, {b1, b2}, Activation::tanh_fn);

    Eigen::VectorXd x(2);
    x << 0.3, -0.6;
    const Eigen::VectorXd z = w1 * x + b1;
    Eigen::VectorXd expected(2);
    for (int j = 0; j < 2; ++j) {
        expected(j) = 0.0;
        for (int h = 0; h < 2; ++h) {
            const double th = std::tanh(z(h));
            expected(j) += w2(0, h) * (1.0 - th * th) * w1(h, j);
        }
    }
    const Eigen::VectorXd grad = net.input_gradient(x);
    CHECK((grad - expected).cwiseAbs().maxCoeff() < 1e-12);

    const double f = net.predict(x);
    CHECK(f == doctest::Approx((w2 * z.array().tanh().matrix())(0) + b2(0)).epsilon(1e-12));
}

TEST_CASE("identity network has a unit gradient pattern") {
    const Eigen::MatrixXd w1 = Eigen::MatrixXd::Identity(3, 3);
    Eigen::MatrixXd w2(1, 3);
    w2.setOnes();
    const Network net = make_network({w1, w2}, {Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(1)},
                                     Activation::identity);
    const Eigen::VectorXd grad = net.input_gradient(Eigen::VectorXd::Random(3));
    CHECK((grad - Eigen::VectorXd::Ones(3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("reverse-mode gradients match central finite differences on the grid") {
    // Unit-scale inputs keep the h^2 truncation error of the probe far below
    // the 1e-5 relative target.
    const Eigen::MatrixXd drivers = random_matrix(60, 3, 9, 1.0);
    const Eigen::VectorXd y = drivers.col(0) + drivers.col(1).cwiseProduct(drivers.col(2)) * 0.1;
    NetworkSpec base;
    base.seed = 3;
    base.epochs = 40;
    CounterRng point_rng(17, CounterRng::stream_of("fd-points"));
    const double h = 1e-5;
    for (const NetworkSpec& spec : architecture_grid(base)) {
        const Network net = train_network(y, drivers, spec);
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd x(3);
            for (int j = 0; j < 3; ++j) x(j) = point_rng.next_normal();
            const Eigen::VectorXd grad = net.input_gradient(x);
            for (int j = 0; j < 3; ++j) {
                Eigen::VectorXd hi = x, lo = x;
                hi(j) += h;
                lo(j) -= h;
                const double fd = (net.predict(hi) - net.predict(lo)) / (2.0 * h);
                const double scale =
                    std::max({std::abs(grad(j)), std::abs(fd), 1e-4 * grad.cwiseAbs().maxCoeff(),
                              1e-8});
                CHECK(std::abs(grad(j) - fd) / scale < 1e-5);
            }
        }
    }
}

TEST_CASE("input gradients of a linear model equal the betas on every row") {
    const Eigen::MatrixXd drivers = random_matrix(50, 2, 10, 0.01);
    const Eigen::VectorXd y = 1.5 * drivers.col(0) + 0.25 * drivers.col(1);
    const LinearSensitivityModel ols = fit_linear(y, drivers, 0);

    // A linear network (identity activation) trained to convergence carries
    // the same constant gradient.
    NetworkSpec spec;
    spec.hidden = {4};
    spec.activation = Activation::identity;
    spec.seed = 5;
    spec.epochs = 6000;
    spec.learning_rate = 0.05;
    spec.validation_fraction = 0.0;
    const Network net = train_network(y, drivers, spec);
    const Eigen::MatrixXd grads = input_gradients(net, drivers);
    for (Eigen::Index r = 0; r < grads.rows(); ++r) {
        CHECK(grads(r, 0) == doctest::Approx(ols.betas(0)).epsilon(1e-4));
        CHECK(grads(r, 1) == doctest::Approx(ols.betas(1)).epsilon(1e-4));
    }
    // Constant across rows.
    for (Eigen::Index r = 1; r < grads.rows(); ++r)
        CHECK((grads.row(r) - grads.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("aggregation: mean and median basics") {
    Eigen::MatrixXd rows(2, 2);
    rows << 1, 2, 3, 4;
    const Eigen::VectorXd mean = aggregate_rows(rows, Aggregation::mean);
    CHECK(mean(0) == 2.0);
    CHECK(mean(1) == 3.0);

    Eigen::MatrixXd one(1, 2);
    one << 7, 9;
    const Eigen::VectorXd single = aggregate_rows(one, Aggregation::median);
    CHECK(single(0) == 7.0);
    CHECK(single(1) == 9.0);
}

TEST_CASE("median is stable on heavy-tailed rows while the mean wanders") {
    // Cauchy-like draws: ratio of independent normals.
    CounterRng rng(23, CounterRng::stream_of("heavy-tail"));
    const int n = 4001;
    Eigen::MatrixXd rows(n, 1);
    for (int i = 0; i < n; ++i) {
        double denom = rng.next_normal();
        if (std::abs(denom) < 1e-3) denom = 1e-3;
        rows(i, 0) = rng.next_normal() / denom;
    }
    const Eigen::MatrixXd first = rows.topRows(n / 2);
    const Eigen::MatrixXd second = rows.bottomRows(n / 2);
    const double med_gap = std::abs(aggregate_rows(first, Aggregation::median)(0) -
                                    aggregate_rows(second, Aggregation::median)(0));
    const double mean_gap = std::abs(aggregate_rows(first, Aggregation::mean)(0) -
                                     aggregate_rows(second, Aggregation::mean)(0));
    CHECK(med_gap < 0.2);
    CHECK(med_gap < mean_gap);
}

TEST_CASE("fit_sensitivities: shape, order, and determinism") {
    const Eigen::MatrixXd asset_values = random_matrix(80, 3, 31, 0.01);
    const Eigen::MatrixXd driver_values = random_matrix(80, 2, 32, 0.01);
    const ReturnPanel assets = panel_of(asset_values, "A");
    const ReturnPanel drivers = panel_of(driver_values, "D");

    SensitivityConfig cfg;
    cfg.model = SensitivityModelKind::network;
    cfg.network.seed = 13;
    cfg.network.epochs = 30;
    std::vector<AssetModelReport> reports;
    const SensitivityMatrix a = fit_sensitivities(assets, drivers, cfg, &reports);
    const SensitivityMatrix b = fit_sensitivities(assets, drivers, cfg);
    CHECK(a.values.rows() == 3);
    CHECK(a.values.cols() == 2);
    CHECK(a.assets == assets.names);
    CHECK(a.drivers == drivers.names);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(reports.size() == 3);

    // Linear path: rows are exactly the OLS betas.
    SensitivityConfig lin;
    lin.model = SensitivityModelKind::linear;
    const SensitivityMatrix l = fit_sensitivities(assets, drivers, lin);
    for (int i = 0; i < 3; ++i) {
        const LinearSensitivityModel m = fit_linear(asset_values.col(i), driver_values, 0);
        CHECK((l.values.row(i).transpose() - m.betas).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("network training rejects too-short windows") {
    const Eigen::MatrixXd drivers = random_matrix(8, 2, 41, 0.01);
    const Eigen::VectorXd y = drivers.col(0);
    NetworkSpec spec;
    CHECK_THROWS_AS(train_network(y, drivers, spec), Error);
}
