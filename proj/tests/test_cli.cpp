#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef HSP_CLI_PATH
#define HSP_CLI_PATH "hsp"
#endif
#ifndef HSP_DATA_DIR
#define HSP_DATA_DIR "data"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code;
    std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
    const fs::path log = fs::temp_directory_path() / "hsp_cli_test.log";
    const std::string command =
        std::string(HSP_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(command.c_str());
    std::ifstream file(log);
    std::stringstream buffer;
    buffer << file.rdbuf();
    return {WEXITSTATUS(status), buffer.str()};
}

std::string slurp(const fs::path& path) {
    std::ifstream file(path);
    std::stringstream buffer;
    buffer << file.rdbuf();
    return buffer.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("select-drivers reproduces the worked example from CSV") {
    const fs::path out = fresh_dir("hsp_cli_select");
    const RunResult result = run_cli(
        "select-drivers --assets " + std::string(HSP_DATA_DIR) + "/worked_example_assets.csv" +
        " --drivers " + std::string(HSP_DATA_DIR) + "/worked_example_drivers.csv" +
        " --mode rank --m 2 --epsilon 0.5 --out " + out.string());
    CHECK(result.exit_code == 0);
    const std::string scorecard = slurp(out / "scorecard.csv");
    CHECK(scorecard.find("X4,3,") != std::string::npos);
    CHECK(scorecard.find("X2,3,") != std::string::npos);
    const std::string summary = slurp(out / "selection_summary.json");
    CHECK(summary.find("\"X4\",\n    \"X2\"") != std::string::npos);
}

TEST_CASE("missing input file exits 2 with a machine-readable error") {
    const RunResult result =
        run_cli("select-drivers --assets /nonexistent/file.csv --drivers /also/missing.csv"
                " --out /tmp/hsp_cli_err");
    CHECK(result.exit_code == 2);
    CHECK(result.output.find("\"error\"") != std::string::npos);
    CHECK(result.output.find("IoError") != std::string::npos);
    CHECK(result.output.find("/nonexistent/file.csv") != std::string::npos);
}

TEST_CASE("full pipeline artifacts are byte-identical across runs") {
    const fs::path out_a = fresh_dir("hsp_cli_run_a");
    const fs::path out_b = fresh_dir("hsp_cli_run_b");
    const std::string args =
        "backtest --assets " + std::string(HSP_DATA_DIR) + "/synthetic_assets.csv" +
        " --drivers " + std::string(HSP_DATA_DIR) + "/synthetic_drivers.csv" +
        " --methods hsp,hrp,equal --bounds 0.03:0.10 --seed 7 --out ";
    CHECK(run_cli(args + out_a.string()).exit_code == 0);
    CHECK(run_cli(args + out_b.string()).exit_code == 0);
    for (const char* name : {"nav_hsp.csv", "nav_hrp.csv", "nav_equal.csv", "weights_hsp.csv",
                             "metrics.json"}) {
        const std::string a = slurp(out_a / name);
        CHECK(a == slurp(out_b / name));
        CHECK(!a.empty());
    }
}

TEST_CASE("stage outputs feed the next stage without editing") {
    const fs::path dir = fresh_dir("hsp_cli_chain");
    const std::string data = std::string(HSP_DATA_DIR);
    CHECK(run_cli("select-drivers --assets " + data + "/synthetic_assets.csv --drivers " + data +
                  "/synthetic_drivers.csv --mode rank --m 2 --epsilon 0.2 --window 126 --out " +
                  dir.string())
              .exit_code == 0);
    CHECK(run_cli("fit-sensitivities --assets " + data + "/synthetic_assets.csv --drivers " +
                  dir.string() + "/selected_drivers.csv --model linear --window 63 --out " +
                  dir.string())
              .exit_code == 0);
    CHECK(run_cli("distance-matrix --input " + dir.string() + "/sensitivities.csv --out " +
                  dir.string())
              .exit_code == 0);
    CHECK(run_cli("optimize --method qp --distance " + dir.string() +
                  "/distance.csv --bounds 0.03:0.10 --lambda 1.0 --out " + dir.string())
              .exit_code == 0);
    const std::string weights = slurp(dir / "weights.csv");
    CHECK(weights.find("name,weight") == 0);

    // simulate-paths consumes the same selected panel.
    CHECK(run_cli("simulate-paths --assets " + data + "/synthetic_assets.csv --drivers " +
                  dir.string() +
                  "/selected_drivers.csv --model vasicek --horizon 5 --paths 20 --seed 7 "
                  "--window 63 --out " +
                  dir.string())
              .exit_code == 0);
    CHECK(slurp(dir / "sde_params.json").find("\"kappa\"") != std::string::npos);
}

TEST_CASE("config file values are overridden by flags") {
    const fs::path dir = fresh_dir("hsp_cli_config");
    const fs::path config = dir / "run.ini";
    {
        std::ofstream file(config);
        file << "[data]\n"
             << "assets = " << HSP_DATA_DIR << "/worked_example_assets.csv\n"
             << "drivers = " << HSP_DATA_DIR << "/worked_example_drivers.csv\n"
             << "[selection]\n"
             << "mode = rank\n"
             << "m = 3\n"
             << "epsilon = 0.5\n";
    }
    // Flag --m 2 wins over m = 3 in the file.
    CHECK(run_cli("select-drivers --config " + config.string() + " --m 2 --out " + dir.string())
              .exit_code == 0);
    const std::string summary = slurp(dir / "selection_summary.json");
    CHECK(summary.find("\"X4\",\n    \"X2\"\n  ]") != std::string::npos);
}
