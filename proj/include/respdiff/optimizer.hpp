#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "respdiff/bounds.hpp"
#include "respdiff/core.hpp"
#include "respdiff/range.hpp"
#include "respdiff/source.hpp"
#include "respdiff/statistic.hpp"

namespace respdiff {

enum class EpsilonMaxPolicy {
    width_cap,   // grid epsilon up to the estimated width
    paper_min3,  // grid epsilon up to min{a_hat, b_hat - a_hat, 1 - b_hat}
};

enum class BudgetPolicy {
    charge_prime,   // r = floor(nu / (m+1)); the statistic also samples q'
    paper_literal,  // r = floor(nu / m)
};

inline const char* to_string(EpsilonMaxPolicy p) {
    return p == EpsilonMaxPolicy::width_cap ? "width_cap" : "paper_min3";
}
inline const char* to_string(BudgetPolicy p) {
    return p == BudgetPolicy::charge_prime ? "charge_prime" : "paper_literal";
}

struct OptimizerConfig {
    double alpha = 0.1;
    std::int64_t nu = 0;        // total budget, pilot included
    std::int64_t m_tilde = 1;   // pilot queries; also the floor for m
    std::int64_t r_tilde = 1;   // pilot replicates per query
    double eta_epsilon = 0.005; // epsilon grid step
    EpsilonMaxPolicy epsilon_max_policy = EpsilonMaxPolicy::width_cap;
    RangeMode range_mode = RangeMode::raw;
    BudgetPolicy budget_policy = BudgetPolicy::charge_prime;
    QuerySampling query_sampling = QuerySampling::with_replacement;
    std::optional<NullRange> known_range;  // skip the pilot when set

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("config requires alpha in (0,1)");
        if (!(eta_epsilon > 0.0)) throw InvalidArgument("config requires eta_epsilon > 0");
        if (m_tilde < 1 || r_tilde < 1)
            throw InvalidArgument("config requires m_tilde >= 1 and r_tilde >= 1");
        if (nu < 1) throw InvalidArgument("config requires nu >= 1");
        if (!known_range && m_tilde > (nu - 1) / r_tilde)
            throw BudgetExhausted("pilot m_tilde*r_tilde must be smaller than the budget nu");
    }
};

//! One grid point of the design search, kept for audit.
struct GridEvaluation {
    double epsilon = 0.0;
    std::int64_t m = 0;
    std::int64_t r = 0;
    bool valid = false;
    double h_hat = std::numeric_limits<double>::quiet_NaN();  // set for valid points
    std::string note;  // why the point is invalid or skipped
};

struct OptimalDesign {
    TestDesign design;
    double h_star = 0.0;
    NullRange range_used;
    std::vector<GridEvaluation> grid_evaluations;
    BudgetPolicy budget_policy = BudgetPolicy::charge_prime;
};

struct NoValidDesign {
    std::string reason;
    NullRange range_used;
    std::vector<GridEvaluation> grid_evaluations;
};

using OptimizeOutcome = std::variant<OptimalDesign, NoValidDesign>;

//! Grid search for the design maximizing the estimated average-power lower
//! bound subject to the approximate validity constraint and the budget.
//! Ties break toward smaller epsilon. Finding no valid grid point is an
//! outcome, not an error.
inline OptimizeOutcome optimize_design(const NullRange& range, double alpha,
                                       std::int64_t nu_remaining, std::int64_t m_tilde,
                                       const OptimizerConfig& config) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("optimize_design requires alpha in (0,1)");
    if (nu_remaining < 1) throw InvalidArgument("optimize_design requires nu_remaining >= 1");
    if (m_tilde < 1) throw InvalidArgument("optimize_design requires m_tilde >= 1");

    const double width = range.width();
    if (!(width > 0.0))
        return NoValidDesign{"degenerate pilot range", range, {}};

    const double a = range.a().value();
    const double b = range.b().value();
    double epsilon_max = width;
    if (config.epsilon_max_policy == EpsilonMaxPolicy::paper_min3)
        epsilon_max = std::min({a, width, 1.0 - b});
    const double eta = config.eta_epsilon;

    std::vector<GridEvaluation> grid;
    std::optional<GridEvaluation> best;
    for (std::int64_t k = 1;; ++k) {
        const double epsilon = static_cast<double>(k) * eta;
        if (epsilon > epsilon_max * (1.0 + 1e-12)) break;
        GridEvaluation eval;
        eval.epsilon = epsilon;
        if (epsilon >= width) {
            eval.note = "skipped: epsilon >= width, required m undefined";
            grid.push_back(eval);
            continue;
        }
        eval.m = std::max(min_null_samples(alpha, epsilon, width), m_tilde);
        eval.r = config.budget_policy == BudgetPolicy::charge_prime ? nu_remaining / (eval.m + 1)
                                                                    : nu_remaining / eval.m;
        if (eval.r < 2) {
            eval.note = "invalid: r < 2 under the budget";
            grid.push_back(eval);
            continue;
        }
        const Validity validity = validity_check(epsilon, eval.m, eval.r, width, alpha);
        eval.valid = validity.valid;
        if (!validity.valid) {
            eval.note = validity.reason.empty() ? "invalid: size bound exceeds alpha" : validity.reason;
            grid.push_back(eval);
            continue;
        }
        eval.h_hat = avg_power_lower_bound(epsilon, eval.m, eval.r, width).value;
        grid.push_back(eval);
        if (!best || eval.h_hat > best->h_hat) best = eval;
    }

    if (!best)
        return NoValidDesign{"no grid point satisfies the validity constraint", range, std::move(grid)};

    OptimalDesign out;
    out.design = TestDesign(best->epsilon, best->m, best->r, alpha, nu_remaining);
    out.h_star = best->h_hat;
    out.range_used = range;
    out.grid_evaluations = std::move(grid);
    out.budget_policy = config.budget_policy;
    return out;
}

//! Reuse (epsilon, m) from a design found at a larger budget and shrink r to
//! fit a smaller one. The result is not guaranteed to pass the validity
//! check; callers report it as borrowed.
inline TestDesign borrow_design_from(const OptimalDesign& larger, std::int64_t smaller_nu_remaining) {
    if (smaller_nu_remaining < 1)
        throw InvalidArgument("borrow_design_from requires a positive budget");
    const std::int64_t m = larger.design.m;
    const std::int64_t r = larger.budget_policy == BudgetPolicy::charge_prime
                               ? smaller_nu_remaining / (m + 1)
                               : smaller_nu_remaining / m;
    if (r < 1)
        throw InvalidArgument("borrow_design_from: budget too small for even one replicate");
    return TestDesign(larger.design.epsilon, m, r, larger.design.alpha, smaller_nu_remaining);
}

//! Result of the full budgeted test: pilot, design search, main draw,
//! decision.
struct TestOutcome {
    bool reject = false;
    double statistic = 0.0;
    OptimalDesign design;
    std::optional<RangeEstimate> pilot;  // absent when a known range was supplied
    NullRange range_used;
    RangeMode range_mode = RangeMode::raw;
    GenericStatisticResult details;
    LedgerReport ledger;
};

using TestResult = std::variant<TestOutcome, NoValidDesign>;

//! End-to-end procedure: estimate the range with (m_tilde, r_tilde), deduct
//! the pilot cost, pick the best valid design, draw the statistic, reject
//! iff it exceeds the chosen threshold.
inline TestResult optimal_test(ResponseSource& source, const std::vector<std::string>& null_queries,
                               const std::string& q_prime, const OptimizerConfig& config,
                               std::uint64_t seed) {
    config.validate();
    if (source.remaining_budget() < config.nu)
        throw BudgetExhausted("source budget is smaller than the configured nu");

    std::optional<RangeEstimate> pilot;
    NullRange range_used;
    std::int64_t nu_remaining = config.nu;
    if (config.known_range) {
        range_used = *config.known_range;
    } else {
        pilot = estimate_range(source, null_queries, config.m_tilde, config.r_tilde,
                               derive_seed(seed, {10}), config.query_sampling);
        range_used = select_range(*pilot, config.range_mode);
        nu_remaining -= config.m_tilde * config.r_tilde;
    }

    OptimizeOutcome outcome =
        optimize_design(range_used, config.alpha, nu_remaining, config.m_tilde, config);
    if (std::holds_alternative<NoValidDesign>(outcome))
        return std::get<NoValidDesign>(std::move(outcome));

    TestOutcome result;
    result.design = std::get<OptimalDesign>(std::move(outcome));
    result.pilot = std::move(pilot);
    result.range_used = range_used;
    result.range_mode = config.range_mode;
    result.details = generic_statistic(source, null_queries, q_prime, result.design.design.m,
                                       result.design.design.r, derive_seed(seed, {11}),
                                       config.query_sampling);
    result.statistic = result.details.statistic;
    result.reject = result.statistic > result.design.design.epsilon;
    result.ledger = source.ledger_report();
    return result;
}

}  // namespace respdiff
