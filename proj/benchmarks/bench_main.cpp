#include <benchmark/benchmark.h>

#include "hsp/allocation.hpp"
#include "hsp/qp.hpp"
#include "hsp/rng.hpp"
#include "hsp/sde_paths.hpp"
#include "hsp/sensitivity_geometry.hpp"
#include "hsp/sensitivity_models.hpp"

namespace {

using hsp::CounterRng;

hsp::SensitivityMatrix random_sensitivities(int n, int m, std::uint64_t seed) {
    CounterRng rng(seed, CounterRng::stream_of("bench"));
    hsp::SensitivityMatrix s;
    s.values.resize(n, m);
    for (Eigen::Index i = 0; i < s.values.size(); ++i) s.values(i) = rng.next_normal();
    for (int i = 0; i < n; ++i) s.assets.push_back("A" + std::to_string(i + 1));
    for (int j = 0; j < m; ++j) s.drivers.push_back("D" + std::to_string(j + 1));
    return s;
}

Eigen::MatrixXd random_psd(int n, std::uint64_t seed) {
    CounterRng rng(seed, CounterRng::stream_of("bench-psd"));
    Eigen::MatrixXd a(n, n);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.next_normal();
    return a * a.transpose() / n + 0.05 * Eigen::MatrixXd::Identity(n, n);
}

void BM_SensitivityDistance(benchmark::State& state) {
    const auto sens = random_sensitivities(static_cast<int>(state.range(0)), 10, 1);
    for (auto _ : state) benchmark::DoNotOptimize(hsp::sensitivity_distance(sens));
}
BENCHMARK(BM_SensitivityDistance)->Arg(14)->Arg(50)->Arg(200);

void BM_SingleLinkage(benchmark::State& state) {
    const auto d =
        hsp::sensitivity_distance(random_sensitivities(static_cast<int>(state.range(0)), 10, 2));
    for (auto _ : state) benchmark::DoNotOptimize(hsp::single_linkage(d));
}
BENCHMARK(BM_SingleLinkage)->Arg(14)->Arg(50)->Arg(100);

void BM_NearestPsd(benchmark::State& state) {
    const auto d =
        hsp::sensitivity_distance(random_sensitivities(static_cast<int>(state.range(0)), 10, 3));
    for (auto _ : state) benchmark::DoNotOptimize(hsp::nearest_psd(d.values));
}
BENCHMARK(BM_NearestPsd)->Arg(14)->Arg(50)->Arg(200);

void BM_RecursiveBisection(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd cov = random_psd(n, 4);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    for (auto _ : state)
        benchmark::DoNotOptimize(hsp::recursive_bisection_weights(cov, order));
}
BENCHMARK(BM_RecursiveBisection)->Arg(14)->Arg(50)->Arg(100);

void BM_QpSimplexBox(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd m = random_psd(n, 5);
    const Eigen::VectorXd lower = Eigen::VectorXd::Constant(n, 0.5 / n);
    const Eigen::VectorXd upper = Eigen::VectorXd::Constant(n, 2.5 / n);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            hsp::solve_qp_simplex_box(m, Eigen::VectorXd::Zero(n), lower, upper));
}
BENCHMARK(BM_QpSimplexBox)->Arg(14)->Arg(50);

void BM_CvarLp(benchmark::State& state) {
    const int t = static_cast<int>(state.range(0));
    CounterRng rng(6, CounterRng::stream_of("bench-cvar"));
    hsp::CvarProblem problem;
    problem.scenarios.resize(t, 10);
    for (Eigen::Index i = 0; i < problem.scenarios.size(); ++i)
        problem.scenarios(i) = 0.01 * rng.next_normal();
    for (int i = 0; i < 10; ++i) problem.names.push_back("A" + std::to_string(i + 1));
    problem.alpha = 0.95;
    problem.bounds = hsp::Bounds::uniform(10, 0.0, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(hsp::cvar_optimize(problem));
}
BENCHMARK(BM_CvarLp)->Arg(250)->Arg(1000)->Arg(4000);

void BM_SimulatePaths(benchmark::State& state) {
    hsp::SdeParams params;
    params.kappa = 2.0;
    params.theta = 0.05;
    params.sigma = 0.1;
    params.dt = 1.0 / 252.0;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            hsp::simulate(params, 0.05, 21, static_cast<int>(state.range(0)), 7));
}
BENCHMARK(BM_SimulatePaths)->Arg(100)->Arg(1000)->Arg(10000);

void BM_NetworkGradients(benchmark::State& state) {
    CounterRng rng(8, CounterRng::stream_of("bench-net"));
    const int rows = 63, m = 10;
    Eigen::MatrixXd drivers(rows, m);
    for (Eigen::Index i = 0; i < drivers.size(); ++i) drivers(i) = rng.next_normal();
    Eigen::VectorXd target = drivers.col(0) + 0.5 * drivers.col(1);
    hsp::NetworkSpec spec;
    spec.hidden = {16, 16};
    spec.epochs = 50;
    spec.seed = 1;
    const hsp::Network net = hsp::train_network(target, drivers, spec);
    for (auto _ : state) benchmark::DoNotOptimize(hsp::input_gradients(net, drivers));
}
BENCHMARK(BM_NetworkGradients);

}  // namespace

BENCHMARK_MAIN();
