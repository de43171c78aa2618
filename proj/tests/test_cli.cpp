#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "respdiff/cli.hpp"

using namespace respdiff;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("respdiff_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out_file = dir / "stdout.txt";
    const std::string command =
        std::string(RESPDIFF_BIN) + " " + args + " > " + out_file.string() + " 2> " +
        (dir / "stderr.txt").string();
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WEXITSTATUS(status);
    result.stdout_text = slurp(out_file);
    return result;
}

json write_test_config(const fs::path& dir) {
    json pools = json::object();
    std::vector<std::string> queries;
    for (int i = 0; i < 6; ++i) {
        const std::string name = "q" + std::to_string(i);
        queries.push_back(name);
    }
    json config{
        {"source",
         json{{"kind", "synthetic"}, {"budget", 400000}, {"uniform_range", json{0.35, 0.65}},
              {"seed", 5}}},
        {"null_queries", queries},
        {"q_prime", "prime"},
        {"alpha", 0.1},
        {"nu", 300000},
        {"m_tilde", 5},
        {"r_tilde", 100},
        {"eta_epsilon", 0.01},
        {"seed", 11},
    };
    std::ofstream out(dir / "config.json");
    out << config.dump(2);
    return config;
}

}  // namespace

TEST_CASE("bounds command prints the report and honors guard exit codes") {
    const fs::path dir = fresh_dir("bounds");
    const RunResult ok = run_cli(
        "bounds --a 0.4 --b 0.6 --eps 0.05 --m 9 --r 100000 --p-prime 0.1 --out-dir " + dir.string(),
        dir);
    CHECK(ok.exit_code == 0);
    CHECK(ok.stdout_text.find("size_upper_bound,0.1967") != std::string::npos);
    CHECK(ok.stdout_text.find("avg_power_lower_bound,0.7970") != std::string::npos);
    CHECK(ok.stdout_text.find("phi(0.1),0.9430") != std::string::npos);
    CHECK(fs::exists(dir / "manifest.json"));

    // degenerate range
    const RunResult degenerate = run_cli(
        "bounds --a 0.4 --b 0.4 --eps 0.05 --m 9 --r 100000 --out-dir " + dir.string(), dir);
    CHECK(degenerate.exit_code == 2);
    // radius exceeds epsilon
    const RunResult guard =
        run_cli("bounds --a 0.4 --b 0.6 --eps 0.001 --m 9 --r 100 --out-dir " + dir.string(), dir);
    CHECK(guard.exit_code == 2);
    // same run with --allow-vacuous prints nan instead
    const RunResult vacuous = run_cli(
        "bounds --a 0.4 --b 0.6 --eps 0.001 --m 9 --r 100 --allow-vacuous --out-dir " + dir.string(),
        dir);
    CHECK(vacuous.exit_code == 0);
    CHECK(vacuous.stdout_text.find("size_upper_bound,nan") != std::string::npos);
}

TEST_CASE("optimize command emits a re-checkable design JSON") {
    const fs::path dir = fresh_dir("optimize");
    const RunResult run = run_cli(
        "optimize --range-a 0.898 --range-b 1.0 --nu 5000000 --skip-pilot --m-tilde 20 "
        "--alpha 0.1 --out-dir " +
            dir.string(),
        dir);
    REQUIRE(run.exit_code == 0);
    const json design = json::parse(slurp(dir / "optimal_design.json"));
    const double epsilon = design.at("design").at("epsilon").get<double>();
    const std::int64_t m = design.at("design").at("m").get<std::int64_t>();
    const std::int64_t r = design.at("design").at("r").get<std::int64_t>();
    const double width = design.at("range_used").at(1).get<double>() -
                         design.at("range_used").at(0).get<double>();
    CHECK(epsilon <= 0.102);
    CHECK(validity_check(epsilon, m, r, width, design.at("alpha").get<double>()).valid);
    CHECK(m * r <= design.at("nu").get<std::int64_t>());
    // audit trail is present and the chosen h_star matches its best valid row
    double best = -1e300;
    for (const auto& row : design.at("grid"))
        if (row.at("valid").get<bool>()) best = std::max(best, row.at("h_hat").get<double>());
    CHECK(design.at("h_star").get<double>() == best);

    const json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("command") == "optimize");
    CHECK(manifest.at("error").is_null());
    CHECK(manifest.at("outputs").size() == 1);
}

TEST_CASE("optimize command maps a pilot larger than the budget to exit 4") {
    const fs::path dir = fresh_dir("optimize_budget");
    write_test_config(dir);
    const RunResult run = run_cli("optimize --config " + (dir / "config.json").string() +
                                      " --nu 400 --out-dir " + dir.string(),
                                  dir);
    CHECK(run.exit_code == 4);
}

TEST_CASE("optimize command signals no valid design with exit 3") {
    const fs::path dir = fresh_dir("optimize_nodesign");
    // tiny budget cannot satisfy the slack constraint
    const RunResult run = run_cli(
        "optimize --range-a 0.4 --range-b 0.6 --nu 500 --skip-pilot --m-tilde 5 --out-dir " +
            dir.string(),
        dir);
    CHECK(run.exit_code == 3);
    const json payload = json::parse(slurp(dir / "optimal_design.json"));
    CHECK(payload.contains("no_valid_design"));
    const json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest.at("exit_code").get<int>() == 3);
}

TEST_CASE("test command runs end to end, writes payload and manifest") {
    const fs::path dir = fresh_dir("test_cmd");
    write_test_config(dir);
    const RunResult run =
        run_cli("test --config " + (dir / "config.json").string() + " --out-dir " + dir.string(),
                dir);
    REQUIRE(run.exit_code == 0);
    const json payload = json::parse(slurp(dir / "test_result.json"));
    CHECK(payload.contains("reject"));
    CHECK(payload.contains("statistic"));
    CHECK(payload.at("ledger").at("spent").get<std::int64_t>() <= 300000);
    const json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK_FALSE(manifest.at("ledger").is_null());

    // decision is payload: rerunning with the same seed gives identical JSON
    const fs::path dir2 = fresh_dir("test_cmd2");
    write_test_config(dir2);
    const RunResult rerun =
        run_cli("test --config " + (dir2 / "config.json").string() + " --out-dir " + dir2.string(),
                dir2);
    REQUIRE(rerun.exit_code == 0);
    CHECK(slurp(dir / "test_result.json") == slurp(dir2 / "test_result.json"));
}

TEST_CASE("test command maps budget failures to exit 4") {
    const fs::path dir = fresh_dir("test_budget");
    json config = write_test_config(dir);
    config["nu"] = 400;  // smaller than the pilot m_tilde * r_tilde
    std::ofstream(dir / "config.json") << config.dump(2);
    const RunResult run =
        run_cli("test --config " + (dir / "config.json").string() + " --out-dir " + dir.string(),
                dir);
    CHECK(run.exit_code == 4);
    const json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK_FALSE(manifest.at("error").is_null());
}

TEST_CASE("rigged decisions through the CLI") {
    const fs::path dir = fresh_dir("test_rigged");
    json config{
        {"source", json{{"kind", "rigged"},
                        {"budget", 400000},
                        {"table", json{{"n0", 0.0}, {"n1", 0.0}, {"prime", 1.0}}}}},
        {"null_queries", json{"n0", "n1"}},
        {"q_prime", "prime"},
        {"alpha", 0.1},
        {"nu", 300000},
        {"m_tilde", 2},
        {"r_tilde", 50},
        {"eta_epsilon", 0.01},
        {"known_range", json{0.4, 0.6}},
        {"seed", 3},
    };
    std::ofstream(dir / "config.json") << config.dump(2);
    const RunResult reject =
        run_cli("test --config " + (dir / "config.json").string() + " --out-dir " + dir.string(),
                dir);
    REQUIRE(reject.exit_code == 0);
    CHECK(json::parse(slurp(dir / "test_result.json")).at("reject").get<bool>());

    config["source"]["table"] = json{{"n0", 0.5}, {"n1", 0.5}, {"prime", 0.5}};
    std::ofstream(dir / "config.json") << config.dump(2);
    const RunResult accept =
        run_cli("test --config " + (dir / "config.json").string() + " --out-dir " + dir.string(),
                dir);
    REQUIRE(accept.exit_code == 0);
    CHECK_FALSE(json::parse(slurp(dir / "test_result.json")).at("reject").get<bool>());
}

TEST_CASE("figure1 reproduction writes byte-identical CSVs on rerun") {
    const fs::path dir1 = fresh_dir("fig1_a");
    const fs::path dir2 = fresh_dir("fig1_b");
    const std::string args =
        "reproduce figure1 --p1 0.87 --p2 0.87 --r 150 --r 400 --trials 30 --seed 5 --out-dir ";
    CHECK(run_cli(args + dir1.string(), dir1).exit_code == 0);
    CHECK(run_cli(args + dir2.string(), dir2).exit_code == 0);
    const std::string csv1 = slurp(dir1 / "figure1_pvalues.csv");
    CHECK(csv1 == slurp(dir2 / "figure1_pvalues.csv"));
    CHECK(slurp(dir1 / "figure1_rates.csv") == slurp(dir2 / "figure1_rates.csv"));
    CHECK(csv1.rfind("r,trial,p_value\n", 0) == 0);
    // manifest references both outputs
    const json manifest = json::parse(slurp(dir1 / "manifest.json"));
    CHECK(manifest.at("outputs").size() == 2);
}

TEST_CASE("figure2 reproduction cross-checks the bounds command row by row") {
    const fs::path dir = fresh_dir("fig2");
    const RunResult run = run_cli(
        "reproduce figure2 --nu 1000000 --eps 0.05 --eps 0.08 --n-p-prime 5 --reps 5 "
        "--m-tilde 50 --r-tilde 1000 --seed 9 --skip-invalid --out-dir " +
            dir.string(),
        dir);
    REQUIRE(run.exit_code == 0);
    const std::string size_csv = slurp(dir / "figure2_size.csv");
    REQUIRE(size_csv.rfind("epsilon,nu,m,r,empirical,se,analytical_bound,estimated_bound,n_cells\n",
                           0) == 0);
    // row for eps = 0.05: m = 9, r = 111111
    std::istringstream lines(size_csv);
    std::string line;
    std::getline(lines, line);  // header
    std::getline(lines, line);
    std::istringstream row(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(row, field, ',')) fields.push_back(field);
    REQUIRE(fields.size() == 9);
    CHECK(fields[0] == "0.05");
    CHECK(fields[2] == "9");
    CHECK(fields[3] == "111111");
    const double csv_bound = std::stod(fields[6]);
    const double direct = size_upper_bound_clamped(0.05, 9, 111111, 0.2);
    CHECK(csv_bound == Catch::Approx(direct).margin(1e-12));

    const std::string power_csv = slurp(dir / "figure2_power.csv");
    std::istringstream power_lines(power_csv);
    std::getline(power_lines, line);
    std::getline(power_lines, line);
    std::istringstream power_row(line);
    fields.clear();
    while (std::getline(power_row, field, ',')) fields.push_back(field);
    const double h_csv = std::stod(fields[6]);
    CHECK(h_csv == Catch::Approx(avg_power_lower_bound(0.05, 9, 111111, 0.2).value).margin(1e-12));
}

TEST_CASE("figure2 without --skip-invalid fails fast on guard violations") {
    const fs::path dir = fresh_dir("fig2_guard");
    const RunResult run = run_cli(
        "reproduce figure2 --nu 100000 --eps 0.01 --n-p-prime 2 --reps 2 --out-dir " + dir.string(),
        dir);
    CHECK(run.exit_code == 4);
    const json manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK_FALSE(manifest.at("error").is_null());
}

TEST_CASE("sweep runs the pooled protocol at a reduced scale") {
    const fs::path dir = fresh_dir("sweep");
    const RunResult run =
        run_cli("reproduce sweep --seeds 3 --seed 13 --out-dir " + dir.string(), dir);
    REQUIRE(run.exit_code == 0);
    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(csv.rfind("q_prime,nu,seeds,rejections,rejection_rate,", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 q'
}

TEST_CASE("unknown flags exit with the argument code") {
    const fs::path dir = fresh_dir("badflag");
    CHECK(run_cli("bounds --nonsense 1", dir).exit_code == 2);
    CHECK(run_cli("reproduce figure2 --scale warehouse --out-dir " + dir.string(), dir).exit_code ==
          2);
}
