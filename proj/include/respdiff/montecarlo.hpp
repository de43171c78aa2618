#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "respdiff/bounds.hpp"
#include "respdiff/core.hpp"
#include "respdiff/csv.hpp"
#include "respdiff/parallel.hpp"
#include "respdiff/range.hpp"
#include "respdiff/rng.hpp"
#include "respdiff/statistic.hpp"

namespace respdiff {

enum class PPrimeMode { null_uniform, alt_uniform, fixed_list };

inline const char* to_string(PPrimeMode m) {
    switch (m) {
        case PPrimeMode::null_uniform: return "null_uniform";
        case PPrimeMode::alt_uniform: return "alt_uniform";
        default: return "fixed_list";
    }
}

//! Configuration for the rejection-probability simulation. Defaults are desk
//! scale; the grid points that violate the applicability guards are recorded
//! as skipped, never silently evaluated.
struct SimulationPlan {
    NullRange range{0.4, 0.6};
    double alpha = 0.1;
    std::vector<double> epsilon_grid;
    std::vector<std::int64_t> budgets;
    PPrimeMode p_prime_mode = PPrimeMode::null_uniform;
    std::vector<double> fixed_p_primes;
    std::int64_t n_p_prime = 50;
    std::int64_t reps_per_p_prime = 50;
    std::uint64_t master_seed = 0;
    // pilot for the plug-in ("estimated") bound curve
    std::int64_t m_tilde = 100;
    std::int64_t r_tilde = 10000;
    RangeMode range_mode = RangeMode::raw;
    unsigned threads = 0;
    BinomialSampling sampling = BinomialSampling::direct;

    void validate() const {
        if (epsilon_grid.empty() || budgets.empty())
            throw InvalidArgument("simulation plan requires epsilon grid and budgets");
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("plan requires alpha in (0,1)");
        if (!range.theory_admissible())
            throw InvalidArgument("plan requires a range with 0 < a < b < 1");
        if (p_prime_mode == PPrimeMode::fixed_list && fixed_p_primes.empty())
            throw InvalidArgument("fixed_list mode requires fixed_p_primes");
        if (p_prime_mode != PPrimeMode::fixed_list && n_p_prime < 1)
            throw InvalidArgument("plan requires n_p_prime >= 1");
        if (reps_per_p_prime < 1) throw InvalidArgument("plan requires reps_per_p_prime >= 1");
        if (m_tilde < 1 || r_tilde < 1) throw InvalidArgument("plan requires positive pilot sizes");
    }

    std::vector<double> p_primes() const {
        if (p_prime_mode == PPrimeMode::fixed_list) return fixed_p_primes;
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(n_p_prime));
        const double a = range.a().value();
        const double w = range.width();
        for (std::int64_t i = 0; i < n_p_prime; ++i) {
            Rng rng = make_stream(master_seed, {100, static_cast<std::uint64_t>(i)});
            if (p_prime_mode == PPrimeMode::null_uniform) {
                out.push_back(sample_uniform(rng, a, range.b().value()));
            } else {
                double u = sample_uniform(rng, 0.0, 1.0 - w);
                while (u == a) u = sample_uniform(rng, 0.0, 1.0 - w);  // keep p' off the endpoint b
                out.push_back(u < a ? u : u + w);
            }
        }
        return out;
    }
};

struct SimulationCell {
    double epsilon = 0.0;
    std::int64_t nu = 0;
    std::int64_t m = 0;
    std::int64_t r = 0;
    double empirical = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
    double analytical_bound = std::numeric_limits<double>::quiet_NaN();
    double estimated_bound = std::numeric_limits<double>::quiet_NaN();
    std::int64_t n_cells = 0;
    // mean over the sampled p' of the pointwise phi (clamped); alt mode only
    double phi_mean = std::numeric_limits<double>::quiet_NaN();
    bool skipped = false;
    std::string skip_reason;
};

struct SimulationResult {
    SimulationPlan plan;
    double estimated_width = std::numeric_limits<double>::quiet_NaN();
    std::vector<SimulationCell> cells;
};

// Pilot for the plug-in bound: m_tilde parameters from Unif(a,b), each
// estimated with r_tilde Bernoulli replicates, corrected per the plan mode.
inline double simulate_estimated_width(const SimulationPlan& plan) {
    Rng rng = make_stream(plan.master_seed, {1});
    double lo = 1.0, hi = 0.0;
    for (std::int64_t j = 0; j < plan.m_tilde; ++j) {
        const double p = sample_uniform(rng, plan.range.a().value(), plan.range.b().value());
        const double p_hat = static_cast<double>(sample_binomial(rng, plan.r_tilde, p)) /
                             static_cast<double>(plan.r_tilde);
        lo = std::min(lo, p_hat);
        hi = std::max(hi, p_hat);
    }
    return corrected_range(lo, hi, plan.m_tilde, plan.range_mode).width();
}

//! Simulate the rejection probability over the (epsilon, nu) grid, following
//! the published protocol: m from the validity formula, r = floor(nu/m),
//! null parameters redrawn from Unif(a,b) every repetition.
inline SimulationResult simulate_rejection_probability(const SimulationPlan& plan) {
    plan.validate();
    SimulationResult result;
    result.plan = plan;
    result.estimated_width = simulate_estimated_width(plan);

    const double a = plan.range.a().value();
    const double b = plan.range.b().value();
    const double width = plan.range.width();
    const std::vector<double> p_primes = plan.p_primes();
    const std::int64_t np = static_cast<std::int64_t>(p_primes.size());
    const std::int64_t reps = plan.reps_per_p_prime;

    for (std::size_t bi = 0; bi < plan.budgets.size(); ++bi) {
        for (std::size_t ei = 0; ei < plan.epsilon_grid.size(); ++ei) {
            SimulationCell cell;
            cell.nu = plan.budgets[bi];
            cell.epsilon = plan.epsilon_grid[ei];
            if (!(cell.epsilon > 0.0) || !(cell.epsilon < width)) {
                cell.skipped = true;
                cell.skip_reason = "epsilon outside (0, width)";
                result.cells.push_back(std::move(cell));
                continue;
            }
            cell.m = min_null_samples(plan.alpha, cell.epsilon, width);
            cell.r = cell.nu / cell.m;
            if (cell.r < 2) {
                cell.skipped = true;
                cell.skip_reason = "budget gives r < 2";
                result.cells.push_back(std::move(cell));
                continue;
            }
            const double radius = concentration_radius(cell.r);
            if (!(cell.epsilon > radius) || !(cell.epsilon - radius <= width)) {
                cell.skipped = true;
                cell.skip_reason = "Corollary guards violated: need radius < epsilon <= width + radius";
                result.cells.push_back(std::move(cell));
                continue;
            }

            // bounds
            if (plan.p_prime_mode == PPrimeMode::null_uniform) {
                cell.analytical_bound = size_upper_bound_clamped(cell.epsilon, cell.m, cell.r, width);
                const Validity est = validity_check(cell.epsilon, cell.m, cell.r,
                                                    result.estimated_width, plan.alpha);
                cell.estimated_bound = est.reason.empty()
                                           ? clamp01(est.size_bound)
                                           : std::numeric_limits<double>::quiet_NaN();
            } else {
                // raw H, matching the bounds-report convention (vacuous stays visible)
                cell.analytical_bound =
                    avg_power_lower_bound(cell.epsilon, cell.m, cell.r, width).value;
                try {
                    cell.estimated_bound =
                        avg_power_lower_bound(cell.epsilon, cell.m, cell.r, result.estimated_width)
                            .value;
                } catch (const InvalidArgument&) {
                    // degenerate estimated width; leave the plug-in column empty
                }
                double phi_acc = 0.0;
                for (double p : p_primes)
                    phi_acc +=
                        power_lower_bound(Probability(p), cell.epsilon, cell.m, cell.r, plan.range);
                cell.phi_mean = phi_acc / static_cast<double>(np);
            }

            // simulation, embarrassingly parallel over (p', rep)
            const std::size_t total = static_cast<std::size_t>(np * reps);
            std::vector<std::uint8_t> rejected(total, 0);
            const std::int64_t m = cell.m;
            const std::int64_t r = cell.r;
            const double epsilon = cell.epsilon;
            parallel_for(total, plan.threads, [&](std::size_t idx) {
                const std::int64_t pi = static_cast<std::int64_t>(idx) / reps;
                const std::int64_t rep = static_cast<std::int64_t>(idx) % reps;
                Rng rng = make_stream(plan.master_seed,
                                      {200, static_cast<std::uint64_t>(bi), static_cast<std::uint64_t>(ei),
                                       static_cast<std::uint64_t>(pi), static_cast<std::uint64_t>(rep)});
                const double p_prime = p_primes[static_cast<std::size_t>(pi)];
                const double prime_hat =
                    static_cast<double>(sample_binomial(rng, r, p_prime, plan.sampling)) /
                    static_cast<double>(r);
                double t = 1.0;
                for (std::int64_t j = 0; j < m; ++j) {
                    const double pj = sample_uniform(rng, a, b);
                    const double pj_hat =
                        static_cast<double>(sample_binomial(rng, r, pj, plan.sampling)) /
                        static_cast<double>(r);
                    t = std::min(t, std::abs(pj_hat - prime_hat));
                }
                rejected[idx] = t > epsilon ? 1 : 0;
            });
            std::int64_t hits = 0;
            for (std::uint8_t v : rejected) hits += v;
            cell.n_cells = static_cast<std::int64_t>(total);
            cell.empirical = static_cast<double>(hits) / static_cast<double>(total);
            cell.se = std::sqrt(std::max(0.0, cell.empirical * (1.0 - cell.empirical)) /
                                static_cast<double>(total));
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

//! Empirical rejection probability of the ideal test at a fixed p', with the
//! null parameters redrawn from Unif(a,b) each repetition.
inline double simulate_ideal_rejection(double p_prime, double epsilon, std::int64_t m,
                                       const NullRange& range, std::int64_t reps,
                                       std::uint64_t seed) {
    if (reps < 1) throw InvalidArgument("simulate_ideal_rejection requires reps >= 1");
    if (m < 1) throw InvalidArgument("simulate_ideal_rejection requires m >= 1");
    const double a = range.a().value();
    const double b = range.b().value();
    std::int64_t hits = 0;
    for (std::int64_t i = 0; i < reps; ++i) {
        Rng rng = make_stream(seed, {300, static_cast<std::uint64_t>(i)});
        double t = 1.0;
        for (std::int64_t j = 0; j < m; ++j)
            t = std::min(t, std::abs(sample_uniform(rng, a, b) - p_prime));
        if (t > epsilon) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(reps);
}

//! Two-sample exact-test baseline: for each replicate count r, draw
//! independent Binomial(r, p1) and Binomial(r, p2) samples and record the
//! exact-test p-value, n_monte_carlo times.
struct Figure1Config {
    double p1 = 0.5;
    double p2 = 0.5;
    std::vector<std::int64_t> r_grid;
    std::int64_t trials = 100;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct Figure1Row {
    std::int64_t r = 0;
    std::vector<double> p_values;
    double rejection_rate = 0.0;
};

struct Figure1Result {
    Figure1Config config;
    std::vector<Figure1Row> rows;
};

inline Figure1Result figure1_experiment(const Figure1Config& config) {
    if (!(config.p1 > 0.0 && config.p1 < 1.0 && config.p2 > 0.0 && config.p2 < 1.0))
        throw InvalidArgument("figure1 requires p1, p2 in (0,1)");
    if (config.r_grid.empty() || config.trials < 1)
        throw InvalidArgument("figure1 requires a nonempty r grid and trials >= 1");
    Figure1Result result;
    result.config = config;
    result.rows.resize(config.r_grid.size());
    for (std::size_t ri = 0; ri < config.r_grid.size(); ++ri) {
        Figure1Row& row = result.rows[ri];
        row.r = config.r_grid[ri];
        if (row.r < 1) throw InvalidArgument("figure1 requires r >= 1");
        row.p_values.assign(static_cast<std::size_t>(config.trials), 0.0);
        parallel_for(static_cast<std::size_t>(config.trials), config.threads, [&](std::size_t t) {
            Rng rng = make_stream(config.seed,
                                  {400, static_cast<std::uint64_t>(ri), static_cast<std::uint64_t>(t)});
            const std::int64_t s1 = sample_binomial(rng, row.r, config.p1);
            const std::int64_t s2 = sample_binomial(rng, row.r, config.p2);
            row.p_values[t] = two_sample_exact_test(s1, row.r, s2, row.r);
        });
        std::int64_t rejections = 0;
        for (double p : row.p_values)
            if (p < config.alpha) ++rejections;
        row.rejection_rate = static_cast<double>(rejections) / static_cast<double>(config.trials);
    }
    return result;
}

// --- CSV emission -----------------------------------------------------

inline std::string to_csv(const SimulationResult& result) {
    std::string out = "epsilon,nu,m,r,empirical,se,analytical_bound,estimated_bound,n_cells\n";
    for (const SimulationCell& c : result.cells)
        csv::append_row(out, c.epsilon, c.nu, c.m, c.r, c.empirical, c.se, c.analytical_bound,
                        c.estimated_bound, c.n_cells);
    return out;
}

inline std::string figure1_pvalues_csv(const Figure1Result& result) {
    std::string out = "r,trial,p_value\n";
    for (const Figure1Row& row : result.rows)
        for (std::size_t t = 0; t < row.p_values.size(); ++t)
            csv::append_row(out, row.r, static_cast<std::int64_t>(t), row.p_values[t]);
    return out;
}

inline std::string figure1_rates_csv(const Figure1Result& result) {
    std::string out = "r,trials,alpha,rejection_rate\n";
    for (const Figure1Row& row : result.rows)
        csv::append_row(out, row.r, result.config.trials, result.config.alpha, row.rejection_rate);
    return out;
}

}  // namespace respdiff
