#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "respdiff/csv.hpp"
#include "respdiff/optimizer.hpp"
#include "respdiff/parallel.hpp"

namespace respdiff {

//! Budget sweep over repeated experiment instances: per (seed, test query),
//! estimate the range once, find the optimal design per budget, and test.
//! Budgets with no valid design reuse (epsilon, m) from the smallest budget
//! that produced one, with r reduced to fit.
struct SweepPlan {
    std::vector<std::string> null_queries;
    std::vector<std::string> q_primes;  // ordered by distance from the null range
    std::vector<std::int64_t> budgets;
    std::int64_t n_seeds = 200;
    OptimizerConfig optimizer;  // nu is overridden per budget
    std::uint64_t master_seed = 0;
    unsigned threads = 0;
    bool borrow_from_valid = true;

    void validate() const {
        if (null_queries.empty() || q_primes.empty() || budgets.empty())
            throw InvalidArgument("sweep plan requires queries, test queries and budgets");
        if (n_seeds < 1) throw InvalidArgument("sweep plan requires n_seeds >= 1");
        for (std::int64_t nu : budgets)
            if (nu <= plan_pilot_cost())
                throw InvalidArgument("every sweep budget must exceed the pilot cost");
    }

    std::int64_t plan_pilot_cost() const { return optimizer.m_tilde * optimizer.r_tilde; }
};

struct SweepCell {
    std::string q_prime;
    std::int64_t nu = 0;
    std::int64_t seeds = 0;
    std::int64_t rejections = 0;
    std::int64_t valid_designs = 0;
    std::int64_t borrowed_designs = 0;
    std::int64_t failed = 0;  // no valid design anywhere to borrow from
    double rejection_rate = std::numeric_limits<double>::quiet_NaN();
    double mean_epsilon = std::numeric_limits<double>::quiet_NaN();
    double mean_m = std::numeric_limits<double>::quiet_NaN();
    double mean_r = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
    std::vector<SweepCell> cells;  // budgets-major, q_primes-minor
};

using SourceFactory = std::function<std::unique_ptr<ResponseSource>()>;

inline SweepResult budget_sweep(const SweepPlan& plan, const SourceFactory& source_factory) {
    plan.validate();
    const std::size_t nq = plan.q_primes.size();
    const std::size_t nb = plan.budgets.size();
    const std::size_t instances = static_cast<std::size_t>(plan.n_seeds) * nq;

    struct InstanceOutcome {
        // per budget: -1 failed, 0 accept, 1 reject; plus the design used
        std::vector<int> decision;
        std::vector<double> epsilon;
        std::vector<std::int64_t> m, r;
        std::vector<bool> borrowed;
    };
    std::vector<InstanceOutcome> outcomes(instances);

    parallel_for(instances, plan.threads, [&](std::size_t idx) {
        const std::size_t seed_idx = idx / nq;
        const std::size_t q_idx = idx % nq;
        const std::string& q_prime = plan.q_primes[q_idx];
        InstanceOutcome& out = outcomes[idx];
        out.decision.assign(nb, -1);
        out.epsilon.assign(nb, std::numeric_limits<double>::quiet_NaN());
        out.m.assign(nb, 0);
        out.r.assign(nb, 0);
        out.borrowed.assign(nb, false);

        const std::uint64_t instance_seed =
            derive_seed(plan.master_seed, {900, seed_idx, q_idx});
        auto source = source_factory();

        // one pilot per instance, shared across budgets
        OptimizerConfig config = plan.optimizer;
        NullRange range_used;
        if (config.known_range) {
            range_used = *config.known_range;
        } else {
            const RangeEstimate pilot =
                estimate_range(*source, plan.null_queries, config.m_tilde, config.r_tilde,
                               derive_seed(instance_seed, {1}), config.query_sampling);
            range_used = select_range(pilot, config.range_mode);
        }
        const std::int64_t pilot_cost = config.known_range ? 0 : plan.plan_pilot_cost();

        // optimize per budget
        std::vector<std::optional<OptimalDesign>> designs(nb);
        std::optional<std::size_t> smallest_valid;
        for (std::size_t bi = 0; bi < nb; ++bi) {
            const std::int64_t nu_remaining = plan.budgets[bi] - pilot_cost;
            if (nu_remaining < 1) continue;
            auto outcome = optimize_design(range_used, config.alpha, nu_remaining,
                                           config.m_tilde, config);
            if (std::holds_alternative<OptimalDesign>(outcome)) {
                designs[bi] = std::get<OptimalDesign>(std::move(outcome));
                if (!smallest_valid || plan.budgets[bi] < plan.budgets[*smallest_valid])
                    smallest_valid = bi;
            }
        }

        for (std::size_t bi = 0; bi < nb; ++bi) {
            TestDesign design;
            bool borrowed = false;
            if (designs[bi]) {
                design = designs[bi]->design;
            } else if (plan.borrow_from_valid && smallest_valid) {
                const std::int64_t nu_remaining = plan.budgets[bi] - pilot_cost;
                if (nu_remaining < 1) continue;
                try {
                    design = borrow_design_from(*designs[*smallest_valid], nu_remaining);
                } catch (const InvalidArgument&) {
                    continue;
                }
                borrowed = true;
            } else {
                continue;
            }
            const auto stat = generic_statistic(*source, plan.null_queries, q_prime, design.m,
                                                design.r, derive_seed(instance_seed, {2, bi}),
                                                config.query_sampling);
            out.decision[bi] = stat.statistic > design.epsilon ? 1 : 0;
            out.epsilon[bi] = design.epsilon;
            out.m[bi] = design.m;
            out.r[bi] = design.r;
            out.borrowed[bi] = borrowed;
        }
    });

    SweepResult result;
    for (std::size_t bi = 0; bi < nb; ++bi) {
        for (std::size_t qi = 0; qi < nq; ++qi) {
            SweepCell cell;
            cell.q_prime = plan.q_primes[qi];
            cell.nu = plan.budgets[bi];
            double eps_acc = 0.0, m_acc = 0.0, r_acc = 0.0;
            for (std::int64_t s = 0; s < plan.n_seeds; ++s) {
                const InstanceOutcome& out = outcomes[static_cast<std::size_t>(s) * nq + qi];
                if (out.decision[bi] < 0) {
                    ++cell.failed;
                    continue;
                }
                ++cell.seeds;
                cell.rejections += out.decision[bi];
                if (out.borrowed[bi])
                    ++cell.borrowed_designs;
                else
                    ++cell.valid_designs;
                eps_acc += out.epsilon[bi];
                m_acc += static_cast<double>(out.m[bi]);
                r_acc += static_cast<double>(out.r[bi]);
            }
            if (cell.seeds > 0) {
                cell.rejection_rate =
                    static_cast<double>(cell.rejections) / static_cast<double>(cell.seeds);
                cell.mean_epsilon = eps_acc / static_cast<double>(cell.seeds);
                cell.mean_m = m_acc / static_cast<double>(cell.seeds);
                cell.mean_r = r_acc / static_cast<double>(cell.seeds);
            }
            result.cells.push_back(std::move(cell));
        }
    }
    return result;
}

inline std::string to_csv(const SweepResult& result) {
    std::string out =
        "q_prime,nu,seeds,rejections,rejection_rate,valid_designs,borrowed_designs,failed,"
        "mean_epsilon,mean_m,mean_r\n";
    for (const SweepCell& c : result.cells)
        csv::append_row(out, c.q_prime, c.nu, c.seeds, c.rejections, c.rejection_rate,
                        c.valid_designs, c.borrowed_designs, c.failed, c.mean_epsilon, c.mean_m,
                        c.mean_r);
    return out;
}

}  // namespace respdiff
