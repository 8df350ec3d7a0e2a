#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "hsp/market_data.hpp"

namespace hsp {

/// OLS betas of one asset on the driver panel. `lag` pairs the driver row at
/// t-lag with the asset row at t.
struct LinearSensitivityModel {
    double intercept = 0.0;
    Eigen::VectorXd betas;
    double residual_variance = 0.0;
};

LinearSensitivityModel fit_linear(const Eigen::VectorXd& asset, const Eigen::MatrixXd& drivers,
                                  int lag = 0);

enum class Activation { tanh_fn, relu, identity };

struct NetworkSpec {
    std::vector<int> hidden = {8};
    Activation activation = Activation::tanh_fn;
    std::uint64_t seed = 0;
    int epochs = 500;
    double learning_rate = 1e-2;
    int batch_size = 0;               // 0 = full batch
    double validation_fraction = 0.2; // chronological tail
};

/// Feed-forward scalar-output network trained by seeded gradient descent.
/// Inputs are standardized internally; predictions and input gradients are
/// reported in original driver units.
class Network {
public:
    double predict(const Eigen::VectorXd& x) const;
    Eigen::VectorXd input_gradient(const Eigen::VectorXd& x) const;

    const NetworkSpec& spec() const { return spec_; }
    double train_rmse() const { return train_rmse_; }
    double validation_rmse() const { return validation_rmse_; }
    Eigen::Index input_dim() const { return weights_.front().cols(); }

    // Layer parameters, exposed for tests that hand-build networks.
    std::vector<Eigen::MatrixXd> weights_;   // weights_[l]: rows = next width
    std::vector<Eigen::VectorXd> biases_;
    Eigen::VectorXd input_mean_, input_scale_;
    NetworkSpec spec_;
    double train_rmse_ = 0.0, validation_rmse_ = 0.0;

private:
    friend Network train_network(const Eigen::VectorXd&, const Eigen::MatrixXd&,
                                 const NetworkSpec&);
};

/// Hand-build a network from explicit parameters (identity standardization).
Network make_network(std::vector<Eigen::MatrixXd> weights, std::vector<Eigen::VectorXd> biases,
                     Activation activation);

/// Train one architecture. Deterministic for a fixed (data, spec, seed).
Network train_network(const Eigen::VectorXd& asset, const Eigen::MatrixXd& drivers,
                      const NetworkSpec& spec);

/// Architecture grid: hidden layers in {1,2}, widths in {8,16,32}.
std::vector<NetworkSpec> architecture_grid(const NetworkSpec& base);

/// Train the whole grid, return the network with the best validation RMSE
/// (ties: first grid entry).
Network fit_network(const Eigen::VectorXd& asset, const Eigen::MatrixXd& drivers,
                    const NetworkSpec& base);

/// Reverse-mode gradient of the output w.r.t. each input, one row per input row.
Eigen::MatrixXd input_gradients(const Network& model, const Eigen::MatrixXd& inputs);

enum class Aggregation { mean, median };

Eigen::VectorXd aggregate_rows(const Eigen::MatrixXd& rows, Aggregation how);

enum class SensitivityModelKind { linear, network };
enum class GradientScope { in_sample, out_of_sample };

struct SensitivityConfig {
    SensitivityModelKind model = SensitivityModelKind::linear;
    int lag = 0;
    Aggregation aggregation = Aggregation::mean;
    GradientScope scope = GradientScope::in_sample;
    NetworkSpec network;
};

struct SensitivityMatrix {
    std::vector<std::string> assets;
    std::vector<std::string> drivers;
    Eigen::MatrixXd values;  // n_assets x n_drivers
    Aggregation aggregation = Aggregation::mean;
    SensitivityModelKind source = SensitivityModelKind::linear;
};

struct AssetModelReport {
    std::string asset;
    double rmse = 0.0;
    std::string description;
};

/// Fit a per-asset model on the drivers and aggregate input gradients into
/// one sensitivity row per asset. Panels must share the date index.
SensitivityMatrix fit_sensitivities(const ReturnPanel& assets, const ReturnPanel& drivers,
                                    const SensitivityConfig& cfg,
                                    std::vector<AssetModelReport>* reports = nullptr);

}  // namespace hsp
