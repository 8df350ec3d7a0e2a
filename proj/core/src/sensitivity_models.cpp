#include "hsp/sensitivity_models.hpp"

#include <algorithm>
#include <cmath>

#include "hsp/errors.hpp"
#include "hsp/rng.hpp"
#include "hsp/stats.hpp"

namespace hsp {
namespace {

double activate(Activation a, double z) {
    switch (a) {
        case Activation::tanh_fn: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::identity: return z;
    }
    return z;
}

double activate_grad(Activation a, double z) {
    switch (a) {
        case Activation::tanh_fn: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

struct ForwardCache {
    std::vector<Eigen::VectorXd> pre;   // z per layer
    std::vector<Eigen::VectorXd> post;  // activations, post[0] = input
};

ForwardCache forward(const std::vector<Eigen::MatrixXd>& weights,
                     const std::vector<Eigen::VectorXd>& biases, Activation act,
                     const Eigen::VectorXd& x) {
    ForwardCache cache;
    cache.post.push_back(x);
    const std::size_t layers = weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        Eigen::VectorXd z = weights[l] * cache.post.back() + biases[l];
        cache.pre.push_back(z);
        if (l + 1 == layers) {
            cache.post.push_back(z);  // identity output
        } else {
            Eigen::VectorXd a(z.size());
            for (Eigen::Index i = 0; i < z.size(); ++i) a(i) = activate(act, z(i));
            cache.post.push_back(std::move(a));
        }
    }
    return cache;
}

}  // namespace

LinearSensitivityModel fit_linear(const Eigen::VectorXd& asset, const Eigen::MatrixXd& drivers,
                                  int lag) {
    if (asset.size() != drivers.rows())
        fail(errc::shape_mismatch, "fit_linear: asset and driver rows differ");
    if (lag < 0) fail(errc::config_invalid, "fit_linear: negative lag");
    const Eigen::Index t = asset.size() - lag;
    if (t < drivers.cols() + 2)
        fail(errc::too_short, "fit_linear: need at least m + 2 paired observations");

    const Eigen::MatrixXd x = drivers.topRows(t);
    const Eigen::VectorXd y = asset.tail(t);

    // Plain OLS first; fall back to a tiny ridge before declaring the design
    // rank-deficient.
    Eigen::MatrixXd design(t, drivers.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(drivers.cols()) = x;
    const Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::VectorXd rhs = design.transpose() * y;
    Eigen::VectorXd coef = gram.ldlt().solve(rhs);
    if (!coef.allFinite() || (gram * coef - rhs).norm() > 1e-6 * (1.0 + rhs.norm())) {
        Eigen::MatrixXd ridged = gram;
        ridged.diagonal().array() += 1e-10;
        coef = ridged.ldlt().solve(rhs);
        if (!coef.allFinite() || (ridged * coef - rhs).norm() > 1e-6 * (1.0 + rhs.norm()))
            fail(errc::rank_deficient, "fit_linear: design matrix is rank deficient");
    }

    LinearSensitivityModel model;
    model.intercept = coef(0);
    model.betas = coef.tail(drivers.cols());
    model.residual_variance =
        (y - design * coef).squaredNorm() / static_cast<double>(t);
    return model;
}

double Network::predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd xs = (x - input_mean_).cwiseQuotient(input_scale_);
    return forward(weights_, biases_, spec_.activation, xs).post.back()(0);
}

Eigen::VectorXd Network::input_gradient(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd xs = (x - input_mean_).cwiseQuotient(input_scale_);
    const ForwardCache cache = forward(weights_, biases_, spec_.activation, xs);
    const std::size_t layers = weights_.size();
    // Backward sweep: start from the scalar identity output.
    Eigen::VectorXd delta = Eigen::VectorXd::Ones(1);
    for (std::size_t l = layers; l-- > 0;) {
        Eigen::VectorXd upstream = weights_[l].transpose() * delta;
        if (l > 0) {
            const Eigen::VectorXd& z = cache.pre[l - 1];
            for (Eigen::Index i = 0; i < upstream.size(); ++i)
                upstream(i) *= activate_grad(spec_.activation, z(i));
        }
        delta = std::move(upstream);
    }
    // Undo input standardization.
    return delta.cwiseQuotient(input_scale_);
}

Network make_network(std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases,
                     Activation activation) {
    Network net;
    net.weights_ = std::move(weights);
    net.biases_ = std::move(biases);
    net.spec_.activation = activation;
    net.spec_.hidden.clear();
    for (std::size_t l = 0; l + 1 < net.weights_.size(); ++l)
        net.spec_.hidden.push_back(static_cast<int>(net.weights_[l].rows()));
    const Eigen::Index m = net.weights_.front().cols();
    net.input_mean_ = Eigen::VectorXd::Zero(m);
    net.input_scale_ = Eigen::VectorXd::Ones(m);
    return net;
}

Network train_network(const Eigen::VectorXd& asset, const Eigen::MatrixXd& drivers,
                      const NetworkSpec& spec) {
    if (asset.size() != drivers.rows())
        fail(errc::shape_mismatch, "train_network: asset and driver rows differ");
    if (drivers.rows() < 10) fail(errc::too_short, "train_network: need at least 10 rows");
    if (spec.hidden.empty()) fail(errc::config_invalid, "network needs >= 1 hidden layer");

    const Eigen::Index t = drivers.rows();
    const Eigen::Index m = drivers.cols();

    Network net;
    net.spec_ = spec;
    net.input_mean_ = drivers.colwise().mean();
    net.input_scale_.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double sd = std::sqrt((drivers.col(j).array() - net.input_mean_(j)).square().sum() /
                                    static_cast<double>(t));
        net.input_scale_(j) = sd > 1e-12 ? sd : 1.0;
    }
    const Eigen::MatrixXd x =
        (drivers.rowwise() - net.input_mean_.transpose()).array().rowwise() /
        net.input_scale_.transpose().array();

    std::vector<int> widths;
    widths.push_back(static_cast<int>(m));
    for (int w : spec.hidden) widths.push_back(w);
    widths.push_back(1);

    CounterRng rng(spec.seed, CounterRng::stream_of("network-init"));
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        const bool output_layer = l + 2 == widths.size();
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                w(r, c) = output_layer ? 0.0 : limit * (2.0 * rng.next_uniform() - 1.0);
        net.weights_.push_back(std::move(w));
        net.biases_.push_back(Eigen::VectorXd::Zero(fan_out));
    }

    // Chronological split: validation is the tail of the window.
    Eigen::Index val_rows = static_cast<Eigen::Index>(
        std::floor(spec.validation_fraction * static_cast<double>(t)));
    val_rows = std::clamp<Eigen::Index>(val_rows, 0, t - 2);
    const Eigen::Index train_rows = t - val_rows;

    const std::size_t layers = net.weights_.size();
    std::vector<Eigen::MatrixXd> grad_w(layers);
    std::vector<Eigen::VectorXd> grad_b(layers);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(train_rows));
    for (Eigen::Index i = 0; i < train_rows; ++i) order[static_cast<std::size_t>(i)] = i;
    CounterRng shuffle_rng(spec.seed, CounterRng::stream_of("network-shuffle"));

    const Eigen::Index batch =
        spec.batch_size > 0 ? std::min<Eigen::Index>(spec.batch_size, train_rows) : train_rows;

    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        if (batch < train_rows) {
            for (std::size_t i = order.size(); i > 1; --i) {
                const std::size_t j =
                    static_cast<std::size_t>(shuffle_rng.next_u64() % i);
                std::swap(order[i - 1], order[j]);
            }
        }
        for (Eigen::Index start = 0; start < train_rows; start += batch) {
            const Eigen::Index stop = std::min(start + batch, train_rows);
            for (std::size_t l = 0; l < layers; ++l) {
                grad_w[l].setZero(net.weights_[l].rows(), net.weights_[l].cols());
                grad_b[l].setZero(net.biases_[l].size());
            }
            for (Eigen::Index pos = start; pos < stop; ++pos) {
                const Eigen::Index row = order[static_cast<std::size_t>(pos)];
                const ForwardCache cache =
                    forward(net.weights_, net.biases_, spec.activation, x.row(row).transpose());
                const double err = cache.post.back()(0) - asset(row);
                if (!std::isfinite(err))
                    fail(errc::nonfinite_loss, "training diverged (non-finite loss)",
                         {{"hidden", std::to_string(spec.hidden.size())},
                          {"epoch", std::to_string(epoch)}});
                Eigen::VectorXd delta(1);
                delta(0) = 2.0 * err / static_cast<double>(stop - start);
                for (std::size_t l = layers; l-- > 0;) {
                    grad_w[l] += delta * cache.post[l].transpose();
                    grad_b[l] += delta;
                    if (l == 0) break;
                    Eigen::VectorXd upstream = net.weights_[l].transpose() * delta;
                    const Eigen::VectorXd& z = cache.pre[l - 1];
                    for (Eigen::Index i = 0; i < upstream.size(); ++i)
                        upstream(i) *= activate_grad(spec.activation, z(i));
                    delta = std::move(upstream);
                }
            }
            for (std::size_t l = 0; l < layers; ++l) {
                net.weights_[l] -= spec.learning_rate * grad_w[l];
                net.biases_[l] -= spec.learning_rate * grad_b[l];
            }
        }
    }

    auto rmse_over = [&](Eigen::Index first, Eigen::Index count) {
        if (count <= 0) return 0.0;
        double sum = 0.0;
        for (Eigen::Index i = first; i < first + count; ++i) {
            const double pred =
                forward(net.weights_, net.biases_, spec.activation, x.row(i).transpose())
                    .post.back()(0);
            sum += (pred - asset(i)) * (pred - asset(i));
        }
        return std::sqrt(sum / static_cast<double>(count));
    };
    net.train_rmse_ = rmse_over(0, train_rows);
    net.validation_rmse_ = val_rows > 0 ? rmse_over(train_rows, val_rows) : net.train_rmse_;
    return net;
}

std::vector<NetworkSpec> architecture_grid(const NetworkSpec& base) {
    std::vector<NetworkSpec> grid;
    for (int depth : {1, 2}) {
        for (int width : {8, 16, 32}) {
            NetworkSpec spec = base;
            spec.hidden.assign(static_cast<std::size_t>(depth), width);
            grid.push_back(spec);
        }
    }
    return grid;
}

Network fit_network(const Eigen::VectorXd& asset, const Eigen::MatrixXd& drivers,
                    const NetworkSpec& base) {
    Network best;
    double best_rmse = std::numeric_limits<double>::infinity();
    bool have = false;
    for (const NetworkSpec& spec : architecture_grid(base)) {
        Network net = train_network(asset, drivers, spec);
        if (!have || net.validation_rmse() < best_rmse) {
            best_rmse = net.validation_rmse();
            best = std::move(net);
            have = true;
        }
    }
    return best;
}

Eigen::MatrixXd input_gradients(const Network& model, const Eigen::MatrixXd& inputs) {
    if (inputs.cols() != model.input_dim())
        fail(errc::shape_mismatch, "input_gradients: wrong input width");
    if (!inputs.allFinite()) fail(errc::config_invalid, "input_gradients: non-finite inputs");
    Eigen::MatrixXd grads(inputs.rows(), inputs.cols());
    for (Eigen::Index r = 0; r < inputs.rows(); ++r)
        grads.row(r) = model.input_gradient(inputs.row(r).transpose()).transpose();
    return grads;
}

Eigen::VectorXd aggregate_rows(const Eigen::MatrixXd& rows, Aggregation how) {
    if (rows.rows() < 1) fail(errc::too_short, "aggregate: need >= 1 row");
    if (how == Aggregation::mean) return rows.colwise().mean();
    Eigen::VectorXd out(rows.cols());
    std::vector<double> column(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
        for (Eigen::Index i = 0; i < rows.rows(); ++i)
            column[static_cast<std::size_t>(i)] = rows(i, j);
        std::sort(column.begin(), column.end());
        const std::size_t n = column.size();
        out(j) = n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }
    return out;
}

SensitivityMatrix fit_sensitivities(const ReturnPanel& assets, const ReturnPanel& drivers,
                                    const SensitivityConfig& cfg,
                                    std::vector<AssetModelReport>* reports) {
    if (assets.dates != drivers.dates)
        fail(errc::shape_mismatch, "asset and driver panels must share the date index");
    if (assets.has_missing() || drivers.has_missing())
        fail(errc::missing_data, "sensitivity panels must not contain missing values");

    const Eigen::Index t = assets.rows() - cfg.lag;
    if (t < 2) fail(errc::too_short, "not enough rows after lag alignment");
    const Eigen::MatrixXd driver_rows = drivers.values.topRows(t);

    SensitivityMatrix out;
    out.assets = assets.names;
    out.drivers = drivers.names;
    out.aggregation = cfg.aggregation;
    out.source = cfg.model;
    out.values.resize(assets.cols(), drivers.cols());

    for (Eigen::Index i = 0; i < assets.cols(); ++i) {
        if (cfg.model == SensitivityModelKind::linear) {
            const LinearSensitivityModel model =
                fit_linear(assets.values.col(i), drivers.values, cfg.lag);
            out.values.row(i) = model.betas.transpose();
            if (reports)
                reports->push_back({assets.names[static_cast<std::size_t>(i)],
                                    std::sqrt(model.residual_variance), "linear"});
        } else {
            const Eigen::VectorXd target = assets.values.col(i).tail(t);
            const Network net = fit_network(target, driver_rows, cfg.network);
            // Same chronological split as train_network.
            Eigen::Index val_rows = static_cast<Eigen::Index>(
                std::floor(cfg.network.validation_fraction * static_cast<double>(t)));
            val_rows = std::clamp<Eigen::Index>(val_rows, 0, t - 2);
            Eigen::Index first = 0, count = t - val_rows;
            if (cfg.scope == GradientScope::out_of_sample && val_rows > 0) {
                first = t - val_rows;
                count = val_rows;
            }
            const Eigen::MatrixXd grads =
                input_gradients(net, driver_rows.middleRows(first, count));
            out.values.row(i) = aggregate_rows(grads, cfg.aggregation).transpose();
            if (reports) {
                std::string desc = "network hidden=";
                for (std::size_t l = 0; l < net.spec().hidden.size(); ++l) {
                    if (l) desc += "x";
                    desc += std::to_string(net.spec().hidden[l]);
                }
                desc += cfg.network.activation == Activation::relu ? " act=relu" : " act=tanh";
                desc += " lag=" + std::to_string(cfg.lag);
                reports->push_back({assets.names[static_cast<std::size_t>(i)],
                                    net.validation_rmse(), desc});
            }
        }
    }
    if (!out.values.allFinite())
        fail(errc::nonfinite_loss, "sensitivity matrix contains non-finite entries");
    return out;
}

}  // namespace hsp
