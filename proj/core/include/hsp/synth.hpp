#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hsp/market_data.hpp"

namespace hsp {

/// Deterministic weekday date sequence (ISO-8601), for synthetic panels.
std::vector<std::string> weekday_dates(const std::string& start, int count);

struct SynthConfig {
    int n_assets = 14;
    int n_clusters = 2;
    int n_candidates = 8;  // true drivers first, then noisy copies, then noise
    int rows = 900;
    std::uint64_t seed = 7;
    double driver_vol = 0.010;
    double noise_vol = 0.004;
    std::string start_date = "2016-01-04";
};

struct SynthData {
    ReturnPanel assets;
    ReturnPanel candidates;
    std::vector<int> cluster_of;  // per asset
};

/// Clustered market with planted common drivers: assets in cluster c load on
/// driver c plus idiosyncratic noise; the candidate pool holds the true
/// drivers, noisy copies of them, and pure-noise series.
SynthData make_synthetic_market(const SynthConfig& cfg);

/// Panels whose sample cross-correlations equal `cross_corr` (candidates x
/// assets) to floating-point accuracy. Assets share a uniform correlation
/// found by search so the joint correlation matrix is realizable.
std::pair<ReturnPanel, ReturnPanel> make_correlation_fixture(const Eigen::MatrixXd& cross_corr,
                                                             int rows, std::uint64_t seed);

}  // namespace hsp
