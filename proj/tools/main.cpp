// hsp: causal-driver portfolio construction toolkit.
//
// Subcommands: synth, select-drivers, fit-sensitivities, distance-matrix,
// optimize, simulate-paths, backtest. Every command reads an optional INI
// config (--config) with command-line flags taking precedence, and writes
// CSV/JSON artifacts atomically into --out.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

#include "config.hpp"
#include "hsp/backtest.hpp"
#include "hsp/csv.hpp"
#include "hsp/errors.hpp"
#include "hsp/synth.hpp"
#include "output.hpp"

namespace hsptool {
namespace {

constexpr int kSchemaVersion = 1;

hsp::SelectionMode selection_mode(const std::string& name) {
    if (name == "rank") return hsp::SelectionMode::rccp_rank;
    if (name == "threshold") return hsp::SelectionMode::rccp_threshold;
    if (name == "greedy") return hsp::SelectionMode::greedy_gs;
    if (name == "dp") return hsp::SelectionMode::dp_gs;
    if (name == "ml") return hsp::SelectionMode::max_likelihood;
    hsp::fail(hsp::errc::config_invalid, "unknown selection mode '" + name + "'");
}

const char* mode_name(hsp::SelectionMode mode) {
    switch (mode) {
        case hsp::SelectionMode::rccp_rank: return "rank";
        case hsp::SelectionMode::rccp_threshold: return "threshold";
        case hsp::SelectionMode::greedy_gs: return "greedy";
        case hsp::SelectionMode::dp_gs: return "dp";
        case hsp::SelectionMode::max_likelihood: return "ml";
    }
    return "?";
}

hsp::SdeModel sde_model(const std::string& name) {
    if (name == "vasicek") return hsp::SdeModel::vasicek;
    if (name == "hull_white") return hsp::SdeModel::hull_white;
    if (name == "ar1") return hsp::SdeModel::arima_ar1;
    if (name == "local_vol") return hsp::SdeModel::local_vol_linear;
    hsp::fail(hsp::errc::config_invalid, "unknown SDE model '" + name + "'");
}

/// Load one or two CSV files onto a common inner-joined date index. `kind`
/// is "prices" (percentage-change transform applied) or "returns".
struct LoadedPanels {
    hsp::ReturnPanel first;
    hsp::ReturnPanel second;  // empty when only one path given
};

LoadedPanels load_panels(const std::string& first_path, const std::string& first_kind,
                         const std::string& second_path, const std::string& second_kind) {
    auto read = [](const std::string& path, const std::string& kind) {
        std::vector<hsp::RawSeries> series = hsp::read_series_csv(path);
        if (kind == "prices") {
            for (auto& s : series) s = hsp::to_returns(s);
        } else if (kind != "returns") {
            hsp::fail(hsp::errc::config_invalid, "data kind must be prices or returns");
        }
        return series;
    };

    std::vector<hsp::RawSeries> all = read(first_path, first_kind);
    const std::size_t split = all.size();
    if (!second_path.empty()) {
        const auto extra = read(second_path, second_kind);
        all.insert(all.end(), extra.begin(), extra.end());
    }
    const hsp::ReturnPanel joint = hsp::align(all, hsp::AlignPolicy::inner);

    LoadedPanels panels;
    std::vector<std::string> first_names(joint.names.begin(),
                                         joint.names.begin() + static_cast<long>(split));
    panels.first = joint.select_columns(first_names);
    if (!second_path.empty()) {
        std::vector<std::string> second_names(joint.names.begin() + static_cast<long>(split),
                                              joint.names.end());
        panels.second = joint.select_columns(second_names);
    }
    return panels;
}

hsp::ReturnPanel tail_window(const hsp::ReturnPanel& panel, int window) {
    if (window <= 0 || window >= panel.rows()) return panel;
    const hsp::WindowSpec spec{panel.dates.back(), window, 0};
    return hsp::slice_window(panel, spec).current;
}

hsp::SelectionConfig selection_config(const Settings& cfg) {
    hsp::SelectionConfig sel;
    sel.mode = selection_mode(cfg.str("selection", "mode", "rank"));
    sel.m = static_cast<int>(cfg.integer("selection", "m", 1));
    sel.epsilon = cfg.num("selection", "epsilon", 0.5);
    sel.t0 = cfg.num("selection", "t0", 0.0);
    sel.t1 = cfg.num("selection", "t1", 0.0);
    sel.exclude = cfg.list("selection", "exclude");
    sel.collinearity_screen = cfg.flag("selection", "collinearity_screen", true);
    sel.exhaustive_ml = cfg.flag("selection", "exhaustive", false);
    if (cfg.has("selection", "exclude_file")) {
        for (const auto& series : hsp::read_series_csv(cfg.str("selection", "exclude_file")))
            sel.exclude.push_back(series.name);
    }
    return sel;
}

hsp::SensitivityConfig sensitivity_config(const Settings& cfg) {
    hsp::SensitivityConfig sens;
    const std::string model = cfg.str("sensitivity", "model", "linear");
    if (model == "linear")
        sens.model = hsp::SensitivityModelKind::linear;
    else if (model == "network")
        sens.model = hsp::SensitivityModelKind::network;
    else
        hsp::fail(hsp::errc::config_invalid, "sensitivity model must be linear or network");
    sens.lag = static_cast<int>(cfg.integer("sensitivity", "lag", 0));
    const std::string agg = cfg.str("sensitivity", "aggregation", "mean");
    sens.aggregation = agg == "median" ? hsp::Aggregation::median : hsp::Aggregation::mean;
    const std::string scope = cfg.str("sensitivity", "scope", "in");
    sens.scope =
        scope == "out" ? hsp::GradientScope::out_of_sample : hsp::GradientScope::in_sample;
    sens.network.seed = static_cast<std::uint64_t>(cfg.integer("run", "seed", 7));
    sens.network.epochs = static_cast<int>(cfg.integer("sensitivity", "epochs", 500));
    sens.network.learning_rate = cfg.num("sensitivity", "learning_rate", 1e-2);
    return sens;
}

std::pair<double, double> parse_bounds(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos)
        hsp::fail(hsp::errc::config_invalid, "bounds must look like LOWER:UPPER");
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

hsp::HspConfig hsp_config(const Settings& cfg) {
    hsp::HspConfig pipeline;
    pipeline.selection = selection_config(cfg);
    pipeline.sensitivity = sensitivity_config(cfg);
    pipeline.psd_repair = cfg.flag("geometry", "psd_repair", false);
    pipeline.selection_window = static_cast<int>(cfg.integer("selection", "window", 126));
    pipeline.sensitivity_window = static_cast<int>(cfg.integer("sensitivity", "window", 63));
    pipeline.covariance_window = static_cast<int>(cfg.integer("allocation", "cov_window", 63));
    return pipeline;
}

std::string weights_csv(const hsp::WeightVector& w) {
    std::ostringstream out;
    out << "name,weight\n";
    for (std::size_t i = 0; i < w.names.size(); ++i)
        out << w.names[i] << ',' << hsp::format_double(w.weights(static_cast<Eigen::Index>(i)))
            << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const Settings& cfg, const std::string& out_dir, bool worked_example) {
    if (worked_example) {
        Eigen::MatrixXd corr(4, 3);
        corr << 0.6, 0.4, 0.3, 0.8, 0.7, 0.5005, 0.2, 0.6, 0.4, 0.9, 0.8, 0.7;
        const auto [assets, drivers] = hsp::make_correlation_fixture(
            corr, static_cast<int>(cfg.integer("synth", "rows", 300)),
            static_cast<std::uint64_t>(cfg.integer("run", "seed", 11)));
        hsp::write_panel_csv(out_path(out_dir, "worked_example_assets.csv"), assets);
        hsp::write_panel_csv(out_path(out_dir, "worked_example_drivers.csv"), drivers);
        std::cout << "wrote worked_example_{assets,drivers}.csv to " << out_dir << "\n";
        return 0;
    }

    hsp::SynthConfig synth;
    synth.n_assets = static_cast<int>(cfg.integer("synth", "assets", 14));
    synth.n_clusters = static_cast<int>(cfg.integer("synth", "clusters", 2));
    synth.n_candidates = static_cast<int>(cfg.integer("synth", "candidates", 8));
    synth.rows = static_cast<int>(cfg.integer("synth", "rows", 900));
    synth.seed = static_cast<std::uint64_t>(cfg.integer("run", "seed", 7));
    const hsp::SynthData data = hsp::make_synthetic_market(synth);
    hsp::write_panel_csv(out_path(out_dir, "synthetic_assets.csv"), data.assets);
    hsp::write_panel_csv(out_path(out_dir, "synthetic_drivers.csv"), data.candidates);

    Json meta;
    meta["schema_version"] = kSchemaVersion;
    meta["rows"] = synth.rows;
    meta["seed"] = synth.seed;
    meta["clusters"] = Json::array();
    for (std::size_t i = 0; i < data.cluster_of.size(); ++i)
        meta["clusters"].push_back(
            {{"asset", data.assets.names[i]}, {"cluster", data.cluster_of[i]}});
    write_json(out_path(out_dir, "synthetic_meta.json"), meta);
    std::cout << "wrote synthetic_{assets,drivers}.csv to " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// select-drivers

int cmd_select(const Settings& cfg, const std::string& out_dir) {
    const auto panels =
        load_panels(cfg.str("data", "assets"), cfg.str("data", "assets_kind", "returns"),
                    cfg.str("data", "drivers"), cfg.str("data", "drivers_kind", "returns"));
    const int window = static_cast<int>(cfg.integer("selection", "window", 0));
    const hsp::ReturnPanel assets = tail_window(panels.first, window);
    const hsp::ReturnPanel candidates = tail_window(panels.second, window);

    const hsp::SelectionConfig sel = selection_config(cfg);
    const hsp::SelectionScorecard card = hsp::select_drivers(assets, candidates, sel);

    std::ostringstream scorecard;
    scorecard << "candidate,repeatedness,strength,rank,selected\n";
    const std::set<std::string> selected(card.selected.begin(), card.selected.end());
    for (std::size_t rank = 0; rank < card.ranking.size(); ++rank) {
        const std::string& name = card.ranking[rank];
        std::size_t k = 0;
        while (card.candidates[k] != name) ++k;
        scorecard << name << ',' << card.repeatedness(static_cast<Eigen::Index>(k)) << ','
                  << hsp::format_double(card.strength(static_cast<Eigen::Index>(k))) << ','
                  << rank + 1 << ',' << (selected.count(name) ? 1 : 0) << '\n';
    }
    atomic_write(out_path(out_dir, "scorecard.csv"), scorecard.str());

    hsp::write_panel_csv(out_path(out_dir, "selected_drivers.csv"),
                         candidates.select_columns(card.selected));

    Json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["mode"] = mode_name(card.mode);
    summary["selected"] = card.selected;
    summary["ranking"] = card.ranking;
    if (std::isfinite(card.objective)) {
        summary["objective"] = card.objective;
        summary["constraint_bound"] = card.constraint_bound;
        summary["constraint_satisfied"] = card.constraint_satisfied;
    }
    summary["flagged_collinear"] = card.flagged_collinear;
    if (cfg.has("selection", "sccs_bound"))
        summary["sccs_bound"] = cfg.num("selection", "sccs_bound", 0.0);
    write_json(out_path(out_dir, "selection_summary.json"), summary);
    std::cout << "selected:";
    for (const auto& name : card.selected) std::cout << ' ' << name;
    std::cout << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit-sensitivities

int cmd_fit_sensitivities(const Settings& cfg, const std::string& out_dir) {
    const auto panels =
        load_panels(cfg.str("data", "assets"), cfg.str("data", "assets_kind", "returns"),
                    cfg.str("data", "drivers"), cfg.str("data", "drivers_kind", "returns"));
    const hsp::SensitivityConfig sens = sensitivity_config(cfg);
    const int window = static_cast<int>(cfg.integer("sensitivity", "window", 0));
    hsp::ReturnPanel assets = panels.first;
    hsp::ReturnPanel drivers = panels.second;
    if (window > 0) {
        const hsp::WindowSpec spec{assets.dates.back(), window, sens.lag};
        assets = hsp::slice_window(assets, spec).current;
        drivers = hsp::slice_window(drivers, spec).current;
    }

    std::vector<hsp::AssetModelReport> reports;
    const hsp::SensitivityMatrix sensitivities =
        hsp::fit_sensitivities(assets, drivers, sens, &reports);
    hsp::write_named_matrix_csv(out_path(out_dir, "sensitivities.csv"), "asset",
                                sensitivities.assets, sensitivities.drivers,
                                sensitivities.values);

    Json report;
    report["schema_version"] = kSchemaVersion;
    report["model"] =
        sensitivities.source == hsp::SensitivityModelKind::linear ? "linear" : "network";
    report["aggregation"] =
        sensitivities.aggregation == hsp::Aggregation::mean ? "mean" : "median";
    report["assets"] = Json::array();
    for (const auto& r : reports)
        report["assets"].push_back(
            {{"asset", r.asset}, {"rmse", r.rmse}, {"spec", r.description}});
    write_json(out_path(out_dir, "model_report.json"), report);
    std::cout << "wrote sensitivities.csv (" << sensitivities.values.rows() << " x "
              << sensitivities.values.cols() << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// distance-matrix

int cmd_distance(const Settings& cfg, const std::string& out_dir) {
    const hsp::NamedMatrix input = hsp::read_named_matrix_csv(cfg.str("data", "input"));
    hsp::SensitivityMatrix sens;
    sens.assets = input.row_names;
    sens.drivers = input.col_names;
    sens.values = input.values;

    hsp::DistanceMatrix distance = hsp::sensitivity_distance(sens);
    const std::string metric = cfg.str("geometry", "metric", "euclid");
    if (metric.rfind("kernel:", 0) == 0)
        distance = hsp::kernelize(distance, std::stod(metric.substr(7)));
    else if (metric != "euclid")
        hsp::fail(hsp::errc::config_invalid, "metric must be euclid or kernel:SIGMA");
    if (cfg.flag("geometry", "psd_repair", false)) distance = hsp::nearest_psd(distance);

    hsp::write_matrix_csv(out_path(out_dir, "distance.csv"), distance.names, distance.values);

    const hsp::LinkageTree tree = hsp::single_linkage(distance);
    Json linkage;
    linkage["schema_version"] = kSchemaVersion;
    linkage["metric"] = metric;
    linkage["psd_repair"] = cfg.flag("geometry", "psd_repair", false);
    linkage["merges"] = Json::array();
    for (const auto& merge : tree.merges)
        linkage["merges"].push_back(
            {{"left", merge.left}, {"right", merge.right}, {"height", merge.height},
             {"size", merge.size}});
    linkage["leaf_order"] = Json::array();
    for (int leaf : tree.leaf_order)
        linkage["leaf_order"].push_back(distance.names[static_cast<std::size_t>(leaf)]);
    write_json(out_path(out_dir, "linkage.json"), linkage);
    std::cout << "wrote distance.csv and linkage.json\n";
    return 0;
}

// ---------------------------------------------------------------------------
// optimize

int cmd_optimize(const Settings& cfg, const std::string& out_dir) {
    const std::string method = cfg.str("allocation", "method", "hsp");
    const auto [lo, hi] = parse_bounds(cfg.str("allocation", "bounds", "0:1"));

    Json diag;
    diag["schema_version"] = kSchemaVersion;
    diag["method"] = method;

    hsp::WeightVector weights;
    if (method == "closed-form" || method == "qp") {
        const hsp::NamedMatrix input = hsp::read_named_matrix_csv(cfg.str("data", "distance"));
        hsp::DistanceMatrix distance =
            hsp::make_distance_matrix(input.row_names, input.values);
        if (cfg.num("allocation", "lambda_reg", 0.0) > 0.0)
            distance = hsp::regularize_distance(distance, cfg.num("allocation", "lambda_reg", 0.0));
        if (method == "closed-form") {
            weights = hsp::closed_form_distance_weights(
                distance, cfg.flag("allocation", "pseudoinverse", false));
        } else {
            std::optional<hsp::Bounds> bounds;
            if (cfg.has("allocation", "bounds"))
                bounds = hsp::Bounds::uniform(distance.size(), lo, hi);
            const hsp::QpWeightsResult qp = hsp::qp_distance_weights(
                distance, bounds, cfg.num("allocation", "lambda", 1.0), nullptr);
            weights = qp.w;
            diag["objective"] = qp.objective;
            diag["kkt_residual"] = qp.kkt_residual;
            diag["iterations"] = qp.iterations;
        }
    } else {
        const auto panels =
            load_panels(cfg.str("data", "assets"), cfg.str("data", "assets_kind", "returns"),
                        cfg.str("data", "drivers"), cfg.str("data", "drivers_kind", "returns"));
        hsp::BacktestConfig bt;
        bt.lower_bound = lo;
        bt.upper_bound = hi;
        bt.covariance_window = static_cast<int>(cfg.integer("allocation", "cov_window", 63));
        bt.gamma = cfg.num("allocation", "gamma", 1.0);
        bt.target_return = cfg.num("allocation", "target", 0.0);
        bt.cvar_alpha = cfg.num("allocation", "alpha", 0.95);
        bt.cvar_scenario_window =
            static_cast<int>(cfg.integer("allocation", "scenario_window", 126));
        bt.hsp = hsp_config(cfg);

        hsp::Method m;
        if (method == "hsp") m = hsp::Method::hsp;
        else if (method == "hrp") m = hsp::Method::hrp;
        else if (method == "minvar") m = hsp::Method::min_vol;
        else if (method == "maxsharpe") m = hsp::Method::max_sharpe;
        else if (method == "cvar") m = hsp::Method::cvar;
        else if (method == "equal") m = hsp::Method::equal_weight;
        else if (method == "qu") m = hsp::Method::quad_utility;
        else if (method == "target") m = hsp::Method::target_return;
        else hsp::fail(hsp::errc::config_invalid, "unknown method '" + method + "'");

        if (m == hsp::Method::cvar) {
            hsp::CvarProblem problem;
            problem.names = panels.first.names;
            problem.scenarios =
                panels.first.values.bottomRows(std::min<Eigen::Index>(
                    panels.first.rows(), bt.cvar_scenario_window));
            problem.alpha = bt.cvar_alpha;
            problem.bounds = hsp::Bounds::uniform(panels.first.cols(), lo, hi);
            const hsp::CvarResult result = hsp::cvar_optimize(problem);
            weights = result.w;
            diag["cvar"] = result.cvar;
            diag["var_threshold"] = result.var_threshold;
            diag["optimality_gap"] = result.optimality_gap;
        } else {
            weights = hsp::method_weights(m, panels.first, panels.second, bt, std::nullopt);
        }
    }

    atomic_write(out_path(out_dir, "weights.csv"), weights_csv(weights));
    diag["sum"] = weights.weights.sum();
    write_json(out_path(out_dir, "optimize_diagnostics.json"), diag);
    std::cout << "wrote weights.csv (" << weights.names.size() << " assets)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate-paths

int cmd_simulate(const Settings& cfg, const std::string& out_dir, bool emit_distances) {
    const auto panels =
        load_panels(cfg.str("data", "assets"), cfg.str("data", "assets_kind", "returns"),
                    cfg.str("data", "drivers"), cfg.str("data", "drivers_kind", "returns"));
    const hsp::SensitivityConfig sens = sensitivity_config(cfg);
    const int window = static_cast<int>(cfg.integer("sensitivity", "window", 63));
    const int stride = static_cast<int>(cfg.integer("sde", "stride", 1));

    const Eigen::MatrixXd series =
        hsp::sensitivity_series(panels.first, panels.second, sens, window, stride);
    const hsp::PathEnsemble ensemble = hsp::simulate_ensemble(
        series, panels.first.names, panels.second.names,
        sde_model(cfg.str("sde", "model", "vasicek")), cfg.num("sde", "dt", 1.0 / 252.0),
        static_cast<int>(cfg.integer("sde", "horizon", 21)),
        static_cast<int>(cfg.integer("sde", "paths", 1000)),
        static_cast<std::uint64_t>(cfg.integer("run", "seed", 7)));

    Json params;
    params["schema_version"] = kSchemaVersion;
    params["model"] = cfg.str("sde", "model", "vasicek");
    params["horizon"] = ensemble.horizon;
    params["paths"] = ensemble.n_paths;
    params["seed"] = ensemble.seed;
    params["pairs"] = Json::array();
    for (std::size_t a = 0; a < ensemble.assets.size(); ++a)
        for (std::size_t d = 0; d < ensemble.drivers.size(); ++d) {
            const hsp::SdeParams& p =
                ensemble.params[a * ensemble.drivers.size() + d];
            params["pairs"].push_back({{"asset", ensemble.assets[a]},
                                       {"driver", ensemble.drivers[d]},
                                       {"kappa", p.kappa},
                                       {"theta", p.theta},
                                       {"sigma", p.sigma},
                                       {"dt", p.dt},
                                       {"explosive", p.explosive}});
        }
    write_json(out_path(out_dir, "sde_params.json"), params);

    if (emit_distances) {
        const auto matrices = hsp::trajectory_distance_matrices(ensemble);
        std::ostringstream stack;
        stack << "step,name";
        for (const auto& name : ensemble.assets) stack << ',' << name;
        stack << '\n';
        for (std::size_t step = 0; step < matrices.size(); ++step)
            for (std::size_t i = 0; i < ensemble.assets.size(); ++i) {
                stack << step + 1 << ',' << ensemble.assets[i];
                for (std::size_t j = 0; j < ensemble.assets.size(); ++j)
                    stack << ','
                          << hsp::format_double(matrices[step].values(
                                 static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
                stack << '\n';
            }
        atomic_write(out_path(out_dir, "step_distances.csv"), stack.str());
    }
    std::cout << "calibrated " << params["pairs"].size() << " sensitivity processes\n";
    return 0;
}

// ---------------------------------------------------------------------------
// backtest

int cmd_backtest(const Settings& cfg, const std::string& out_dir) {
    const auto panels =
        load_panels(cfg.str("data", "assets"), cfg.str("data", "assets_kind", "returns"),
                    cfg.str("data", "drivers"), cfg.str("data", "drivers_kind", "returns"));

    hsp::BacktestConfig base;
    base.rebalance_stride = static_cast<int>(cfg.integer("backtest", "rebalance_stride", 21));
    base.driver_update_stride =
        static_cast<int>(cfg.integer("backtest", "driver_update_stride", 126));
    const auto [lo, hi] = parse_bounds(cfg.str("allocation", "bounds", "0.03:0.10"));
    base.lower_bound = lo;
    base.upper_bound = hi;
    base.start = cfg.str("backtest", "start", "");
    base.end = cfg.str("backtest", "end", "");
    base.covariance_window = static_cast<int>(cfg.integer("allocation", "cov_window", 63));
    base.drift_weights = cfg.flag("backtest", "drift_weights", true);
    base.cost_bps = cfg.num("backtest", "cost_bps", 0.0);
    base.gamma = cfg.num("allocation", "gamma", 1.0);
    base.target_return = cfg.num("allocation", "target", 0.0);
    base.cvar_alpha = cfg.num("allocation", "alpha", 0.95);
    base.cvar_scenario_window =
        static_cast<int>(cfg.integer("allocation", "scenario_window", 126));
    base.hsp = hsp_config(cfg);
    base.hsp_paths.base = base.hsp;
    base.hsp_paths.model = sde_model(cfg.str("sde", "model", "vasicek"));
    base.hsp_paths.dt = cfg.num("sde", "dt", 1.0 / 252.0);
    base.hsp_paths.horizon = static_cast<int>(cfg.integer("sde", "horizon", 21));
    base.hsp_paths.n_paths = static_cast<int>(cfg.integer("sde", "paths", 200));
    base.hsp_paths.stride = static_cast<int>(cfg.integer("sde", "stride", 1));
    base.hsp_paths.seed = static_cast<std::uint64_t>(cfg.integer("run", "seed", 7));

    std::vector<std::string> methods = cfg.list("backtest", "methods");
    if (methods.empty()) methods = {"hsp", "hrp", "equal"};

    auto method_of = [](const std::string& name) {
        if (name == "hsp") return hsp::Method::hsp;
        if (name == "hsp-paths") return hsp::Method::hsp_paths;
        if (name == "hrp") return hsp::Method::hrp;
        if (name == "equal") return hsp::Method::equal_weight;
        if (name == "minvol") return hsp::Method::min_vol;
        if (name == "maxsharpe") return hsp::Method::max_sharpe;
        if (name == "qu") return hsp::Method::quad_utility;
        if (name == "target") return hsp::Method::target_return;
        if (name == "cvar") return hsp::Method::cvar;
        hsp::fail(hsp::errc::config_invalid, "unknown backtest method '" + name + "'");
    };

    // Align every method on one start date so the NAVs are comparable.
    int common_history = base.min_history;
    if (common_history == 0)
        for (const std::string& name : methods) {
            hsp::BacktestConfig probe = base;
            probe.method = method_of(name);
            common_history = std::max(common_history, hsp::required_history(probe));
        }

    Json metrics;
    metrics["schema_version"] = kSchemaVersion;
    metrics["methods"] = Json::array();
    for (const std::string& name : methods) {
        hsp::BacktestConfig run = base;
        run.min_history = common_history;
        if (name == "hsp") run.method = hsp::Method::hsp;
        else if (name == "hsp-paths") run.method = hsp::Method::hsp_paths;
        else if (name == "hrp") run.method = hsp::Method::hrp;
        else if (name == "equal") run.method = hsp::Method::equal_weight;
        else if (name == "minvol") run.method = hsp::Method::min_vol;
        else if (name == "maxsharpe") run.method = hsp::Method::max_sharpe;
        else if (name == "qu") run.method = hsp::Method::quad_utility;
        else if (name == "target") run.method = hsp::Method::target_return;
        else if (name == "cvar") run.method = hsp::Method::cvar;
        else hsp::fail(hsp::errc::config_invalid, "unknown backtest method '" + name + "'");

        const hsp::BacktestResult result =
            hsp::run_backtest(panels.first, panels.second, run);

        std::ostringstream nav;
        nav << "date,nav\n";
        for (std::size_t i = 0; i < result.nav.size(); ++i)
            nav << result.dates[i] << ',' << hsp::format_double(result.nav[i]) << '\n';
        atomic_write(out_path(out_dir, "nav_" + name + ".csv"), nav.str());

        std::ostringstream weights;
        weights << "date";
        for (const auto& asset : panels.first.names) weights << ',' << asset;
        weights << '\n';
        for (const auto& record : result.rebalances) {
            weights << record.date;
            for (Eigen::Index i = 0; i < record.weights.weights.size(); ++i)
                weights << ',' << hsp::format_double(record.weights.weights(i));
            weights << '\n';
        }
        atomic_write(out_path(out_dir, "weights_" + name + ".csv"), weights.str());

        metrics["methods"].push_back({{"method", name},
                                      {"label", result.label},
                                      {"return", result.total_return},
                                      {"vol_ann", result.annualized_vol},
                                      {"sharpe", result.sharpe},
                                      {"degenerate_vol", result.degenerate_vol},
                                      {"rebalances", result.rebalances.size()}});
        std::cout << result.label << ": return " << result.total_return << ", vol "
                  << result.annualized_vol << ", sharpe " << result.sharpe << "\n";
    }
    write_json(out_path(out_dir, "metrics.json"), metrics);
    return 0;
}

int dispatch(const std::string& command, const Settings& cfg, const std::string& out_dir,
             bool worked_example, bool emit_distances) {
    if (command == "synth") return cmd_synth(cfg, out_dir, worked_example);
    if (command == "select-drivers") return cmd_select(cfg, out_dir);
    if (command == "fit-sensitivities") return cmd_fit_sensitivities(cfg, out_dir);
    if (command == "distance-matrix") return cmd_distance(cfg, out_dir);
    if (command == "optimize") return cmd_optimize(cfg, out_dir);
    if (command == "simulate-paths") return cmd_simulate(cfg, out_dir, emit_distances);
    if (command == "backtest") return cmd_backtest(cfg, out_dir);
    hsp::fail(hsp::errc::config_invalid, "unknown command '" + command + "'");
}

}  // namespace
}  // namespace hsptool

int main(int argc, char** argv) {
    CLI::App app{"causal-driver portfolio construction toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::string assets_path, drivers_path, input_path, distance_path;
    std::string mode, model, metric, method, bounds, agg, scope, sde, start, end;
    std::string assets_kind, drivers_kind;
    long m = 0, window = 0, lag = -1, horizon = 0, paths = 0, seed = -1, rows = 0;
    long rebalance = 0, driver_update = 0, stride = 0;
    double epsilon = -1, t0 = -2, t1 = -2, alpha = -1, lambda = -1, dt = 0;
    bool psd_repair = false, pinv = false, worked_example = false, emit_distances = false;
    bool prices = false, returns = false;
    std::string exclude_file, methods;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "INI config file");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "top-level RNG seed");
        sub->add_option("--assets", assets_path, "asset CSV (date + one column per series)");
        sub->add_option("--drivers", drivers_path, "driver/candidate CSV");
        sub->add_flag("--prices", prices, "inputs are price levels (percentage-change applied)");
        sub->add_flag("--returns", returns, "inputs are already returns (default)");
        return sub;
    };

    auto* synth = add_common(app.add_subcommand("synth", "generate synthetic datasets"));
    synth->add_option("--rows", rows);
    synth->add_flag("--worked-example", worked_example,
                    "emit the 4-candidate / 3-asset correlation fixture");

    auto* select = add_common(app.add_subcommand("select-drivers", "rank common drivers"));
    select->add_option("--mode", mode, "rank|threshold|greedy|dp|ml");
    select->add_option("--m", m, "number of drivers");
    select->add_option("--epsilon", epsilon, "relevance threshold");
    select->add_option("--t0", t0, "lag-0 threshold");
    select->add_option("--t1", t1, "lag-1 threshold");
    select->add_option("--window", window, "trailing selection window (rows)");
    select->add_option("--exclude", exclude_file, "CSV whose column names are excluded");

    auto* fit = add_common(app.add_subcommand("fit-sensitivities", "fit models, extract"
                                                                   " sensitivities"));
    fit->add_option("--model", model, "linear|network");
    fit->add_option("--lag", lag, "driver lag (rows)");
    fit->add_option("--window", window, "training window (rows)");
    fit->add_option("--agg", agg, "mean|median");
    fit->add_option("--scope", scope, "in|out");

    auto* dist = add_common(app.add_subcommand("distance-matrix", "pairwise distances plus"
                                                                  " linkage"));
    dist->add_option("--input", input_path, "sensitivity matrix CSV");
    dist->add_option("--metric", metric, "euclid|kernel:SIGMA");
    dist->add_flag("--psd-repair", psd_repair, "project onto the PSD cone first");

    auto* opt = add_common(app.add_subcommand("optimize", "single-date portfolio weights"));
    opt->add_option("--method", method, "hsp|hrp|closed-form|qp|minvar|maxsharpe|cvar|equal|qu|target");
    opt->add_option("--distance", distance_path, "distance matrix CSV (closed-form/qp)");
    opt->add_option("--bounds", bounds, "LOWER:UPPER");
    opt->add_option("--alpha", alpha, "CVaR confidence");
    opt->add_option("--lambda", lambda, "distance regularizer weight");

    auto* sim = add_common(app.add_subcommand("simulate-paths", "calibrate and simulate"
                                                               " sensitivity SDEs"));
    sim->add_option("--model", sde, "vasicek|hull_white|ar1|local_vol");
    sim->add_option("--horizon", horizon, "steps");
    sim->add_option("--paths", paths, "Monte Carlo paths");
    sim->add_option("--window", window, "sensitivity refit window");
    sim->add_option("--stride", stride, "refit stride");
    sim->add_option("--dt", dt, "step size in years");
    sim->add_flag("--distances", emit_distances, "emit per-step distance matrices");

    auto* bt = add_common(app.add_subcommand("backtest", "walk-forward NAV engine"));
    bt->add_option("--methods", methods, "comma list: hsp,hsp-paths,hrp,equal,minvol,"
                                         "maxsharpe,qu,target,cvar");
    bt->add_option("--rebalance-stride", rebalance);
    bt->add_option("--driver-update-stride", driver_update);
    bt->add_option("--bounds", bounds, "LOWER:UPPER");
    bt->add_option("--start", start);
    bt->add_option("--end", end);

    CLI11_PARSE(app, argc, argv);

    try {
        hsptool::Settings cfg = config_path.empty() ? hsptool::Settings{}
                                                    : hsptool::Settings::load(config_path);
        // Flags override the config file.
        if (!assets_path.empty()) cfg.set("data", "assets", assets_path);
        if (!drivers_path.empty()) cfg.set("data", "drivers", drivers_path);
        if (prices) {
            cfg.set("data", "assets_kind", "prices");
            cfg.set("data", "drivers_kind", "prices");
        }
        if (returns) {
            cfg.set("data", "assets_kind", "returns");
            cfg.set("data", "drivers_kind", "returns");
        }
        if (!input_path.empty()) cfg.set("data", "input", input_path);
        if (!distance_path.empty()) cfg.set("data", "distance", distance_path);
        if (!mode.empty()) cfg.set("selection", "mode", mode);
        if (m > 0) cfg.set("selection", "m", std::to_string(m));
        if (epsilon >= 0) cfg.set("selection", "epsilon", std::to_string(epsilon));
        if (t0 > -2) cfg.set("selection", "t0", std::to_string(t0));
        if (t1 > -2) cfg.set("selection", "t1", std::to_string(t1));
        if (!exclude_file.empty()) cfg.set("selection", "exclude_file", exclude_file);
        if (!model.empty()) cfg.set("sensitivity", "model", model);
        if (lag >= 0) cfg.set("sensitivity", "lag", std::to_string(lag));
        if (!agg.empty()) cfg.set("sensitivity", "aggregation", agg);
        if (!scope.empty()) cfg.set("sensitivity", "scope", scope);
        if (window > 0) {
            const auto* cmd = app.get_subcommands().front();
            const std::string name = cmd->get_name();
            if (name == "select-drivers") cfg.set("selection", "window", std::to_string(window));
            else cfg.set("sensitivity", "window", std::to_string(window));
        }
        if (!metric.empty()) cfg.set("geometry", "metric", metric);
        if (psd_repair) cfg.set("geometry", "psd_repair", "true");
        if (pinv) cfg.set("allocation", "pseudoinverse", "true");
        if (!method.empty()) cfg.set("allocation", "method", method);
        if (!bounds.empty()) cfg.set("allocation", "bounds", bounds);
        if (alpha >= 0) cfg.set("allocation", "alpha", std::to_string(alpha));
        if (lambda >= 0) cfg.set("allocation", "lambda", std::to_string(lambda));
        if (!sde.empty()) cfg.set("sde", "model", sde);
        if (horizon > 0) cfg.set("sde", "horizon", std::to_string(horizon));
        if (paths > 0) cfg.set("sde", "paths", std::to_string(paths));
        if (stride > 0) cfg.set("sde", "stride", std::to_string(stride));
        if (dt > 0) cfg.set("sde", "dt", std::to_string(dt));
        if (rows > 0) cfg.set("synth", "rows", std::to_string(rows));
        if (seed >= 0) cfg.set("run", "seed", std::to_string(seed));
        if (!methods.empty()) cfg.set("backtest", "methods", methods);
        if (rebalance > 0) cfg.set("backtest", "rebalance_stride", std::to_string(rebalance));
        if (driver_update > 0)
            cfg.set("backtest", "driver_update_stride", std::to_string(driver_update));
        if (!start.empty()) cfg.set("backtest", "start", start);
        if (!end.empty()) cfg.set("backtest", "end", end);

        const std::string command = app.get_subcommands().front()->get_name();
        return hsptool::dispatch(command, cfg, out_dir, worked_example, emit_distances);
    } catch (const hsp::Error& e) {
        hsptool::Json error;
        error["error"] = hsp::errc_name(e.code());
        error["message"] = e.what();
        for (const auto& [key, value] : e.details()) error[key] = value;
        std::cerr << error.dump() << "\n";
        return e.code() == hsp::errc::io_error ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << R"({"error":"Internal","message":")" << e.what() << "\"}\n";
        return 1;
    }
}
