#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "respdiff/config.hpp"
#include "respdiff/montecarlo.hpp"
#include "respdiff/optimizer.hpp"
#include "respdiff/sweep.hpp"

namespace respdiff::cli {

// Exit codes are a stable contract: decisions are payload, never codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitArgument = 2;   // argument or bound-guard error
inline constexpr int kExitNoDesign = 3;   // the optimizer found no valid design
inline constexpr int kExitSource = 4;     // source, transport or budget failure

inline std::string iso8601_utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string config_digest(const json& config) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.dump())));
    return buf;
}

//! Provenance record for one CLI run. Written even when the run fails.
struct RunManifest {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;
    std::optional<LedgerReport> ledger;
    std::string error;  // empty on success
    int exit_code = 0;
};

inline void write_manifest(const RunManifest& manifest, const std::string& out_dir) {
    json j{{"schema_version", 1},
           {"library_version", kLibraryVersion},
           {"command", manifest.command},
           {"config_digest", config_digest(manifest.config)},
           {"config", manifest.config},
           {"seed", manifest.seed},
           {"started_at", manifest.started_at},
           {"finished_at", manifest.finished_at},
           {"outputs", manifest.outputs},
           {"exit_code", manifest.exit_code}};
    j["ledger"] = manifest.ledger ? to_json(*manifest.ledger) : json(nullptr);
    j["error"] = manifest.error.empty() ? json(nullptr) : json(manifest.error);
    std::filesystem::create_directories(out_dir);
    std::ofstream out(std::filesystem::path(out_dir) / "manifest.json");
    out << j.dump(2) << '\n';
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);  // LF endings, bit-exact reruns
    if (!out) throw InvalidArgument("cannot write output file: " + path.string());
    out << content;
}

template <typename Body>
int run_with_manifest(RunManifest manifest, const std::string& out_dir, std::ostream& err,
                      Body&& body) {
    manifest.started_at = iso8601_utc_now();
    try {
        manifest.exit_code = body(manifest);
    } catch (const BoundNotApplicable& e) {
        manifest.error = e.what();
        manifest.exit_code = kExitArgument;
    } catch (const BudgetExhausted& e) {
        manifest.error = e.what();
        manifest.exit_code = kExitSource;
    } catch (const SourceError& e) {
        manifest.error = e.what();
        manifest.exit_code = kExitSource;
    } catch (const InvalidArgument& e) {
        manifest.error = e.what();
        manifest.exit_code = kExitArgument;
    } catch (const json::exception& e) {
        manifest.error = e.what();
        manifest.exit_code = kExitArgument;
    }
    manifest.finished_at = iso8601_utc_now();
    write_manifest(manifest, out_dir);
    if (!manifest.error.empty()) err << "error: " << manifest.error << '\n';
    return manifest.exit_code;
}

// --- bounds -----------------------------------------------------------

struct BoundsArgs {
    double a = 0.0;
    double b = 0.0;
    double epsilon = 0.0;
    std::int64_t m = 0;
    std::int64_t r = 0;
    double alpha = 0.1;
    std::vector<double> p_primes;
    bool allow_vacuous = false;
    std::string out_dir = ".";
    std::string csv_name = "bounds.csv";
    bool write_csv = false;
};

inline int run_bounds(const BoundsArgs& args, std::ostream& out, std::ostream& err) {
    RunManifest manifest;
    manifest.command = "bounds";
    manifest.config = json{{"a", args.a},         {"b", args.b}, {"epsilon", args.epsilon},
                           {"m", args.m},         {"r", args.r}, {"alpha", args.alpha},
                           {"p_primes", args.p_primes}};
    return run_with_manifest(std::move(manifest), args.out_dir, err, [&](RunManifest& m) {
        const NullRange range(args.a, args.b);
        std::string table = "quantity,value\n";
        auto emit = [&](const std::string& key, auto&& compute) {
            try {
                csv::append_row(table, key, compute());
            } catch (const BoundNotApplicable& e) {
                if (!args.allow_vacuous) throw;
                csv::append_row(table, key, std::string("nan"));
                err << "warning: " << key << ": " << e.what() << '\n';
            }
        };
        emit("radius", [&] { return concentration_radius(args.r); });
        emit("slack", [&] { return concentration_slack(args.m, args.r); });
        emit("size_upper_bound", [&] {
            return size_upper_bound_clamped(args.epsilon, args.m, args.r, range.width());
        });
        emit("is_valid", [&]() -> std::string {
            return validity_check(args.epsilon, args.m, args.r, range.width(), args.alpha).valid
                       ? "true"
                       : "false";
        });
        emit("avg_power_lower_bound", [&]() -> double {
            if (!(range.width() > 0.0))
                throw BoundNotApplicable("bound not applicable: degenerate range");
            return avg_power_lower_bound(args.epsilon, args.m, args.r, range.width()).value;
        });
        for (double p : args.p_primes) {
            emit("phi(" + csv::field(p) + ")",
                 [&] { return power_lower_bound(Probability(p), args.epsilon, args.m, args.r, range); });
            emit("ideal_power(" + csv::field(p) + ")",
                 [&] { return ideal_power(Probability(p), args.epsilon, args.m, range); });
        }
        out << table;
        if (args.write_csv) {
            const auto path = std::filesystem::path(args.out_dir) / args.csv_name;
            write_text_file(path, table);
            m.outputs.push_back(path.string());
        }
        return kExitOk;
    });
}

// --- optimize -----------------------------------------------------------

struct OptimizeArgs {
    std::string config_path;
    std::optional<double> range_a;
    std::optional<double> range_b;
    bool skip_pilot = false;
    std::optional<std::int64_t> nu;
    std::optional<double> alpha;
    std::optional<double> eta_epsilon;
    std::optional<std::int64_t> m_tilde;
    std::optional<std::int64_t> r_tilde;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string out_name = "optimal_design.json";
};

inline json effective_optimize_config(const OptimizeArgs& args) {
    json config = args.config_path.empty() ? json::object() : load_json_file(args.config_path);
    if (args.nu) config["nu"] = *args.nu;
    if (args.alpha) config["alpha"] = *args.alpha;
    if (args.eta_epsilon) config["eta_epsilon"] = *args.eta_epsilon;
    if (args.m_tilde) config["m_tilde"] = *args.m_tilde;
    if (args.r_tilde) config["r_tilde"] = *args.r_tilde;
    if (args.seed) config["seed"] = *args.seed;
    if (args.range_a && args.range_b) config["known_range"] = json{*args.range_a, *args.range_b};
    if (args.skip_pilot && !config.contains("known_range"))
        throw InvalidArgument("--skip-pilot requires --range-a/--range-b or a known_range");
    return config;
}

inline int run_optimize(const OptimizeArgs& args, std::ostream& out, std::ostream& err) {
    RunManifest manifest;
    manifest.command = "optimize";
    json config;
    try {
        config = effective_optimize_config(args);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        write_manifest(manifest, args.out_dir);
        return kExitArgument;
    }
    manifest.config = config;
    manifest.seed = config.value("seed", std::uint64_t{0});
    return run_with_manifest(std::move(manifest), args.out_dir, err, [&](RunManifest& m) {
        OptimizerConfig optimizer = optimizer_config_from_json(config);
        const std::uint64_t seed = config.value("seed", std::uint64_t{0});

        NullRange range_used;
        std::optional<RangeEstimate> pilot;
        std::int64_t nu_remaining = optimizer.nu;
        std::unique_ptr<ResponseSource> source;
        if (optimizer.known_range) {
            range_used = *optimizer.known_range;
        } else {
            if (!config.contains("source") || !config.contains("null_queries"))
                throw InvalidArgument("optimize without a known_range requires source and null_queries");
            source = make_source(config.at("source"));
            optimizer.validate();
            const auto queries = config.at("null_queries").get<std::vector<std::string>>();
            pilot = estimate_range(*source, queries, optimizer.m_tilde, optimizer.r_tilde,
                                   derive_seed(seed, {10}), optimizer.query_sampling);
            range_used = select_range(*pilot, optimizer.range_mode);
            nu_remaining -= optimizer.m_tilde * optimizer.r_tilde;
            m.ledger = source->ledger_report();
        }

        const OptimizeOutcome outcome =
            optimize_design(range_used, optimizer.alpha, nu_remaining, optimizer.m_tilde, optimizer);

        json result;
        result["range_mode"] = to_string(optimizer.range_mode);
        result["seed"] = seed;
        result["alpha"] = optimizer.alpha;
        result["nu"] = optimizer.nu;
        result["nu_remaining"] = nu_remaining;
        if (pilot) {
            result["pilot"] = json{{"m_tilde", pilot->m_tilde},
                                   {"r_tilde", pilot->r_tilde},
                                   {"raw_range", to_json(pilot->raw)},
                                   {"corrected_range", to_json(pilot->corrected)}};
        }
        int code = kExitOk;
        if (std::holds_alternative<OptimalDesign>(outcome)) {
            result.update(to_json(std::get<OptimalDesign>(outcome)));
        } else {
            const NoValidDesign& failure = std::get<NoValidDesign>(outcome);
            json grid = json::array();
            for (const auto& eval : failure.grid_evaluations) grid.push_back(to_json(eval));
            result["no_valid_design"] = failure.reason;
            result["range_used"] = to_json(failure.range_used);
            result["grid"] = grid;
            code = kExitNoDesign;
        }
        const auto path = std::filesystem::path(args.out_dir) / args.out_name;
        write_text_file(path, result.dump(2) + "\n");
        m.outputs.push_back(path.string());
        out << result.dump(2) << '\n';
        return code;
    });
}

// --- test -----------------------------------------------------------

struct TestArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::string out_name = "test_result.json";
};

inline int run_test(const TestArgs& args, std::ostream& out, std::ostream& err) {
    RunManifest manifest;
    manifest.command = "test";
    json config;
    try {
        config = load_json_file(args.config_path);
        if (args.seed) config["seed"] = *args.seed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        write_manifest(manifest, args.out_dir);
        return kExitArgument;
    }
    manifest.config = config;
    manifest.seed = config.value("seed", std::uint64_t{0});
    return run_with_manifest(std::move(manifest), args.out_dir, err, [&](RunManifest& m) {
        const OptimizerConfig optimizer = optimizer_config_from_json(config);
        const std::uint64_t seed = config.value("seed", std::uint64_t{0});
        auto source = make_source(config.at("source"));
        const auto queries = config.at("null_queries").get<std::vector<std::string>>();
        const std::string q_prime = config.at("q_prime").get<std::string>();

        const TestResult result = optimal_test(*source, queries, q_prime, optimizer, seed);
        m.ledger = source->ledger_report();

        json payload;
        payload["seed"] = seed;
        payload["query_sampling"] = to_string(optimizer.query_sampling);
        payload["range_mode"] = to_string(optimizer.range_mode);
        payload["ledger"] = to_json(*m.ledger);
        int code = kExitOk;
        if (std::holds_alternative<TestOutcome>(result)) {
            const TestOutcome& outcome = std::get<TestOutcome>(result);
            payload["reject"] = outcome.reject;
            payload["statistic"] = outcome.statistic;
            payload["epsilon"] = outcome.design.design.epsilon;
            payload["m"] = outcome.design.design.m;
            payload["r"] = outcome.design.design.r;
            payload["h_star"] = outcome.design.h_star;
            payload["range"] = to_json(outcome.range_used);
            if (outcome.pilot)
                payload["pilot_range_raw"] = to_json(outcome.pilot->raw);
        } else {
            const NoValidDesign& failure = std::get<NoValidDesign>(result);
            payload["no_valid_design"] = failure.reason;
            payload["range"] = to_json(failure.range_used);
            code = kExitNoDesign;
        }
        const auto path = std::filesystem::path(args.out_dir) / args.out_name;
        write_text_file(path, payload.dump(2) + "\n");
        m.outputs.push_back(path.string());
        out << payload.dump(2) << '\n';
        return code;
    });
}

// --- reproduce -----------------------------------------------------------

struct Figure1Args {
    double p1 = 0.870;
    double p2 = 0.948;
    std::vector<std::int64_t> r_grid;  // defaults below
    std::int64_t trials = 100;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string out_dir = ".";
};

inline int run_reproduce_figure1(const Figure1Args& args, std::ostream& out, std::ostream& err) {
    Figure1Config config;
    config.p1 = args.p1;
    config.p2 = args.p2;
    config.r_grid = args.r_grid.empty() ? std::vector<std::int64_t>{100, 1000, 10000, 168700}
                                        : args.r_grid;
    config.trials = args.trials;
    config.alpha = args.alpha;
    config.seed = args.seed;
    config.threads = args.threads;

    RunManifest manifest;
    manifest.command = "reproduce figure1";
    manifest.seed = args.seed;
    manifest.config = json{{"p1", config.p1},       {"p2", config.p2},   {"r_grid", config.r_grid},
                           {"trials", config.trials}, {"alpha", config.alpha}, {"seed", config.seed}};
    return run_with_manifest(std::move(manifest), args.out_dir, err, [&](RunManifest& m) {
        const Figure1Result result = figure1_experiment(config);
        const auto pvalues = std::filesystem::path(args.out_dir) / "figure1_pvalues.csv";
        const auto rates = std::filesystem::path(args.out_dir) / "figure1_rates.csv";
        write_text_file(pvalues, figure1_pvalues_csv(result));
        write_text_file(rates, figure1_rates_csv(result));
        m.outputs = {pvalues.string(), rates.string()};
        for (const Figure1Row& row : result.rows)
            out << "r=" << row.r << " rejection_rate=" << row.rejection_rate << '\n';
        return kExitOk;
    });
}

struct Figure2Args {
    double a = 0.4;
    double b = 0.6;
    double alpha = 0.1;
    std::vector<std::int64_t> budgets;   // default {1e5, 1e6}
    std::vector<double> epsilon_grid;    // default 0.01..0.10 step 0.01
    std::int64_t n_p_prime = 50;
    std::int64_t reps = 50;
    std::int64_t m_tilde = 100;
    std::int64_t r_tilde = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool skip_invalid = false;
    std::string out_dir = ".";
};

inline int run_reproduce_figure2(const Figure2Args& args, std::ostream& out, std::ostream& err) {
    SimulationPlan plan;
    plan.range = NullRange(args.a, args.b);
    plan.alpha = args.alpha;
    plan.budgets = args.budgets.empty() ? std::vector<std::int64_t>{100000, 1000000} : args.budgets;
    if (args.epsilon_grid.empty()) {
        for (int i = 1; i <= 10; ++i) plan.epsilon_grid.push_back(0.01 * i);
    } else {
        plan.epsilon_grid = args.epsilon_grid;
    }
    plan.n_p_prime = args.n_p_prime;
    plan.reps_per_p_prime = args.reps;
    plan.m_tilde = args.m_tilde;
    plan.r_tilde = args.r_tilde;
    plan.master_seed = args.seed;
    plan.threads = args.threads;

    RunManifest manifest;
    manifest.command = "reproduce figure2";
    manifest.seed = args.seed;
    manifest.config = json{{"a", args.a},
                           {"b", args.b},
                           {"alpha", args.alpha},
                           {"budgets", plan.budgets},
                           {"epsilon_grid", plan.epsilon_grid},
                           {"n_p_prime", plan.n_p_prime},
                           {"reps_per_p_prime", plan.reps_per_p_prime},
                           {"m_tilde", plan.m_tilde},
                           {"r_tilde", plan.r_tilde},
                           {"seed", args.seed},
                           {"skip_invalid", args.skip_invalid}};
    return run_with_manifest(std::move(manifest), args.out_dir, err, [&](RunManifest& m) {
        plan.p_prime_mode = PPrimeMode::null_uniform;
        const SimulationResult size_result = simulate_rejection_probability(plan);
        if (!args.skip_invalid) {
            for (const SimulationCell& cell : size_result.cells)
                if (cell.skipped)
                    throw SourceError("plan guard failure at epsilon=" + csv::field(cell.epsilon) +
                                      ", nu=" + csv::field(cell.nu) + " (" + cell.skip_reason +
                                      "); pass --skip-invalid to record and continue");
        }
        plan.p_prime_mode = PPrimeMode::alt_uniform;
        const SimulationResult power_result = simulate_rejection_probability(plan);

        const auto size_path = std::filesystem::path(args.out_dir) / "figure2_size.csv";
        const auto power_path = std::filesystem::path(args.out_dir) / "figure2_power.csv";
        write_text_file(size_path, to_csv(size_result));
        write_text_file(power_path, to_csv(power_result));
        m.outputs = {size_path.string(), power_path.string()};
        out << "size cells: " << size_result.cells.size()
            << ", power cells: " << power_result.cells.size() << '\n';
        return kExitOk;
    });
}

struct SweepArgs {
    std::string config_path;  // optional; defaults below
    std::optional<std::int64_t> n_seeds;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string out_dir = ".";
};

// Built-in synthetic analogue of the pooled-response experiment: null pools
// spread over [0.4, 0.6], three test queries at increasing distance.
inline json default_sweep_config() {
    json pools = json::object();
    std::vector<std::string> null_queries;
    const std::int64_t pool_size = 260000;
    for (int i = 0; i < 40; ++i) {
        const std::string name = "null" + std::to_string(i);
        const double p = 0.4 + 0.2 * static_cast<double>(i) / 39.0;
        pools[name] = json{{"successes", static_cast<std::int64_t>(std::llround(p * pool_size))},
                           {"total", pool_size}};
        null_queries.push_back(name);
    }
    const std::vector<std::pair<std::string, double>> primes{
        {"prime_near", 0.625}, {"prime_mid", 0.72}, {"prime_far", 0.9}};
    for (const auto& [name, p] : primes)
        pools[name] = json{{"successes", static_cast<std::int64_t>(std::llround(p * pool_size))},
                           {"total", pool_size}};
    return json{{"source", json{{"kind", "pool"},
                                {"budget", std::int64_t{30000000}},
                                {"pools", pools}}},
                {"null_queries", null_queries},
                {"q_primes", json{"prime_near", "prime_mid", "prime_far"}},
                {"budgets", json{std::int64_t{4200000}}},
                {"n_seeds", 20},
                {"alpha", 0.1},
                {"m_tilde", 20},
                {"r_tilde", 50},
                {"eta_epsilon", 0.005},
                {"range_mode", "remark1"},
                {"query_sampling", "without_replacement"},
                {"seed", 7}};
}

inline int run_reproduce_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
    RunManifest manifest;
    manifest.command = "reproduce sweep";
    json config;
    try {
        config = args.config_path.empty() ? default_sweep_config() : load_json_file(args.config_path);
        if (args.n_seeds) config["n_seeds"] = *args.n_seeds;
        if (args.seed) config["seed"] = *args.seed;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        write_manifest(manifest, args.out_dir);
        return kExitArgument;
    }
    manifest.config = config;
    manifest.seed = config.value("seed", std::uint64_t{0});
    return run_with_manifest(std::move(manifest), args.out_dir, err, [&](RunManifest& m) {
        SweepPlan plan;
        plan.null_queries = config.at("null_queries").get<std::vector<std::string>>();
        plan.q_primes = config.at("q_primes").get<std::vector<std::string>>();
        plan.budgets = config.at("budgets").get<std::vector<std::int64_t>>();
        plan.n_seeds = config.value("n_seeds", std::int64_t{200});
        plan.master_seed = config.value("seed", std::uint64_t{0});
        plan.threads = args.threads;
        plan.optimizer = optimizer_config_from_json(config);
        plan.optimizer.nu = plan.budgets.front();

        const json source_config = config.at("source");
        const SweepResult result =
            budget_sweep(plan, [&source_config] { return make_source(source_config); });

        const auto path = std::filesystem::path(args.out_dir) / "sweep.csv";
        write_text_file(path, to_csv(result));
        m.outputs = {path.string()};
        for (const SweepCell& cell : result.cells)
            out << cell.q_prime << " nu=" << cell.nu << " rate=" << cell.rejection_rate << '\n';
        return kExitOk;
    });
}

}  // namespace respdiff::cli
