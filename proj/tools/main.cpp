#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "respdiff/cli.hpp"

using namespace respdiff;

int main(int argc, char** argv) {
    CLI::App app{"Budget-constrained composite-null testing for binary-response generative models"};
    app.require_subcommand(1);

    // bounds
    cli::BoundsArgs bounds;
    CLI::App* bounds_cmd = app.add_subcommand("bounds", "Evaluate the analytical size and power bounds");
    bounds_cmd->add_option("--a", bounds.a, "Null range lower end")->required();
    bounds_cmd->add_option("--b", bounds.b, "Null range upper end")->required();
    bounds_cmd->add_option("--eps", bounds.epsilon, "Rejection threshold")->required();
    bounds_cmd->add_option("--m", bounds.m, "Number of sampled null queries")->required();
    bounds_cmd->add_option("--r", bounds.r, "Replicates per query")->required();
    bounds_cmd->add_option("--alpha", bounds.alpha, "Level of significance");
    bounds_cmd->add_option("--p-prime", bounds.p_primes, "Evaluate phi and the ideal power here");
    bounds_cmd->add_flag("--allow-vacuous", bounds.allow_vacuous,
                         "Print nan instead of failing on guard violations");
    bounds_cmd->add_option("--out-dir", bounds.out_dir, "Directory for the manifest and CSV");
    bounds_cmd->add_flag("--csv", bounds.write_csv, "Also write the table to bounds.csv");

    // optimize
    cli::OptimizeArgs optimize;
    CLI::App* optimize_cmd = app.add_subcommand("optimize", "Search for the best valid design");
    optimize_cmd->add_option("--config", optimize.config_path, "Run configuration JSON");
    optimize_cmd->add_option("--range-a", optimize.range_a, "Known range lower end (skips the pilot)");
    optimize_cmd->add_option("--range-b", optimize.range_b, "Known range upper end");
    optimize_cmd->add_flag("--skip-pilot", optimize.skip_pilot, "Require a known range, draw nothing");
    optimize_cmd->add_option("--nu", optimize.nu, "Total budget");
    optimize_cmd->add_option("--alpha", optimize.alpha, "Level of significance");
    optimize_cmd->add_option("--eta", optimize.eta_epsilon, "Epsilon grid step");
    optimize_cmd->add_option("--m-tilde", optimize.m_tilde, "Pilot queries");
    optimize_cmd->add_option("--r-tilde", optimize.r_tilde, "Pilot replicates per query");
    optimize_cmd->add_option("--seed", optimize.seed, "Master seed");
    optimize_cmd->add_option("--out-dir", optimize.out_dir, "Output directory");
    optimize_cmd->add_option("--out", optimize.out_name, "Design JSON file name");

    // test
    cli::TestArgs test;
    CLI::App* test_cmd = app.add_subcommand("test", "Run the budgeted test end to end");
    test_cmd->add_option("--config", test.config_path, "Run configuration JSON")->required();
    test_cmd->add_option("--seed", test.seed, "Master seed (overrides the config)");
    test_cmd->add_option("--out-dir", test.out_dir, "Output directory");
    test_cmd->add_option("--out", test.out_name, "Result JSON file name");

    // reproduce
    CLI::App* reproduce_cmd = app.add_subcommand("reproduce", "Run the simulation protocols");
    reproduce_cmd->require_subcommand(1);

    cli::Figure1Args figure1;
    CLI::App* figure1_cmd =
        reproduce_cmd->add_subcommand("figure1", "Two-sample exact-test baseline over replicates");
    figure1_cmd->add_option("--p1", figure1.p1, "First Bernoulli parameter");
    figure1_cmd->add_option("--p2", figure1.p2, "Second Bernoulli parameter");
    figure1_cmd->add_option("--r", figure1.r_grid, "Replicate counts (repeatable)");
    figure1_cmd->add_option("--trials", figure1.trials, "Monte Carlo experiments per r");
    figure1_cmd->add_option("--alpha", figure1.alpha, "Rejection level");
    figure1_cmd->add_option("--seed", figure1.seed, "Master seed");
    figure1_cmd->add_option("--threads", figure1.threads, "Worker threads (0 = hardware)");
    figure1_cmd->add_option("--out-dir", figure1.out_dir, "Output directory");

    cli::Figure2Args figure2;
    CLI::App* figure2_cmd = reproduce_cmd->add_subcommand(
        "figure2", "Simulated rejection probability against the analytical and estimated bounds");
    figure2_cmd->add_option("--a", figure2.a, "Null range lower end");
    figure2_cmd->add_option("--b", figure2.b, "Null range upper end");
    figure2_cmd->add_option("--alpha", figure2.alpha, "Level of significance");
    figure2_cmd->add_option("--nu", figure2.budgets, "Budgets (repeatable)");
    figure2_cmd->add_option("--eps", figure2.epsilon_grid, "Epsilon grid (repeatable)");
    figure2_cmd->add_option("--n-p-prime", figure2.n_p_prime, "Sampled p' values per cell");
    figure2_cmd->add_option("--reps", figure2.reps, "Repetitions per p'");
    figure2_cmd->add_option("--m-tilde", figure2.m_tilde, "Pilot queries for the estimated bound");
    figure2_cmd->add_option("--r-tilde", figure2.r_tilde, "Pilot replicates for the estimated bound");
    figure2_cmd->add_option("--seed", figure2.seed, "Master seed");
    figure2_cmd->add_option("--threads", figure2.threads, "Worker threads (0 = hardware)");
    figure2_cmd->add_flag("--skip-invalid", figure2.skip_invalid,
                          "Record guard-violating grid points as skipped instead of failing");
    figure2_cmd->add_option("--out-dir", figure2.out_dir, "Output directory");
    std::string scale = "desk";
    figure2_cmd->add_option("--scale", scale, "Named preset (desk)");

    cli::SweepArgs sweep;
    CLI::App* sweep_cmd =
        reproduce_cmd->add_subcommand("sweep", "Budget sweep over repeated experiment instances");
    sweep_cmd->add_option("--config", sweep.config_path, "Sweep configuration JSON");
    sweep_cmd->add_option("--seeds", sweep.n_seeds, "Experiment instances per cell");
    sweep_cmd->add_option("--seed", sweep.seed, "Master seed");
    sweep_cmd->add_option("--threads", sweep.threads, "Worker threads (0 = hardware)");
    sweep_cmd->add_option("--out-dir", sweep.out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return cli::kExitArgument;
    }

    if (bounds_cmd->parsed()) return cli::run_bounds(bounds, std::cout, std::cerr);
    if (optimize_cmd->parsed()) return cli::run_optimize(optimize, std::cout, std::cerr);
    if (test_cmd->parsed()) return cli::run_test(test, std::cout, std::cerr);
    if (figure1_cmd->parsed()) return cli::run_reproduce_figure1(figure1, std::cout, std::cerr);
    if (figure2_cmd->parsed()) {
        if (scale != "desk") {
            std::cerr << "error: unknown scale preset: " << scale << '\n';
            return cli::kExitArgument;
        }
        return cli::run_reproduce_figure2(figure2, std::cout, std::cerr);
    }
    if (sweep_cmd->parsed()) return cli::run_reproduce_sweep(sweep, std::cout, std::cerr);
    return cli::kExitArgument;
}
