#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "respdiff/core.hpp"
#include "respdiff/rng.hpp"
#include "respdiff/source.hpp"

namespace respdiff {

//! Ideal test statistic: min over the null sample of |p' - p_j|,
//! computed from true parameters.
inline double ideal_statistic(Probability p_prime, const std::vector<Probability>& nulls) {
    if (nulls.empty()) throw InvalidArgument("ideal_statistic requires a nonempty null sample");
    double best = 1.0;
    for (const Probability& p : nulls)
        best = std::min(best, std::abs(p_prime.value() - p.value()));
    return best;
}

//! Realistic test statistic: min over the null sample of |p_hat_j - p_hat'|.
inline double realistic_statistic(const std::vector<BernoulliEstimate>& estimates,
                                  const BernoulliEstimate& prime) {
    if (estimates.empty()) throw InvalidArgument("realistic_statistic requires a nonempty null sample");
    double best = 1.0;
    for (const BernoulliEstimate& e : estimates)
        best = std::min(best, std::abs(e.p_hat() - prime.p_hat()));
    return best;
}

enum class QuerySampling {
    with_replacement,     // i.i.d. query sampling
    without_replacement,  // sampled queries are distinct; requires m <= |Q0|
};

inline const char* to_string(QuerySampling s) {
    return s == QuerySampling::with_replacement ? "with_replacement" : "without_replacement";
}

struct GenericStatisticResult {
    double statistic = 0.0;
    std::vector<BernoulliEstimate> estimates;
    BernoulliEstimate prime;
    std::vector<std::string> sampled_queries;
    QuerySampling sampling = QuerySampling::with_replacement;
};

// Sample m queries from the null set under the given mode, using the
// dedicated stream so downstream draws are unaffected by the mode.
inline std::vector<std::string> sample_queries(const std::vector<std::string>& null_queries,
                                               std::int64_t m, Rng& rng, QuerySampling sampling) {
    if (null_queries.empty()) throw InvalidArgument("empty null query set");
    if (m < 1) throw InvalidArgument("query sampling requires m >= 1");
    std::vector<std::string> chosen;
    chosen.reserve(static_cast<std::size_t>(m));
    if (sampling == QuerySampling::with_replacement) {
        std::uniform_int_distribution<std::size_t> pick(0, null_queries.size() - 1);
        for (std::int64_t j = 0; j < m; ++j) chosen.push_back(null_queries[pick(rng)]);
        return chosen;
    }
    if (static_cast<std::size_t>(m) > null_queries.size())
        throw InvalidArgument("without-replacement sampling requires m <= number of null queries");
    std::vector<std::size_t> idx(null_queries.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::int64_t j = 0; j < m; ++j) {
        std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(j), idx.size() - 1);
        std::swap(idx[static_cast<std::size_t>(j)], idx[pick(rng)]);
        chosen.push_back(null_queries[idx[static_cast<std::size_t>(j)]]);
    }
    return chosen;
}

//! Draw the full statistic: m sampled null queries and the test query, r
//! replicates each, spending exactly (m+1)*r budget units.
inline GenericStatisticResult generic_statistic(ResponseSource& source,
                                                const std::vector<std::string>& null_queries,
                                                const std::string& q_prime, std::int64_t m,
                                                std::int64_t r, std::uint64_t seed,
                                                QuerySampling sampling = QuerySampling::with_replacement) {
    if (null_queries.empty()) throw InvalidArgument("empty null query set");
    if (m < 1 || r < 1) throw InvalidArgument("generic_statistic requires m >= 1 and r >= 1");
    if (source.remaining_budget() / (m + 1) < r)
        throw BudgetExhausted("generic_statistic needs (m+1)*r = " + std::to_string((m + 1) * r) +
                              " responses, budget has " + std::to_string(source.remaining_budget()));

    Rng pick = make_stream(seed, {0});
    GenericStatisticResult result;
    result.sampling = sampling;
    result.sampled_queries = sample_queries(null_queries, m, pick, sampling);
    result.estimates.reserve(static_cast<std::size_t>(m));
    for (std::int64_t j = 0; j < m; ++j) {
        Rng stream = make_stream(seed, {1, static_cast<std::uint64_t>(j)});
        result.estimates.push_back(
            source.draw(result.sampled_queries[static_cast<std::size_t>(j)], r, stream).to_estimate());
    }
    Rng prime_stream = make_stream(seed, {2});
    result.prime = source.draw(q_prime, r, prime_stream).to_estimate();
    result.statistic = realistic_statistic(result.estimates, result.prime);
    return result;
}

//! Two-sided Fisher exact test for H0: p1 = p2 on a 2x2 table, using the
//! probability-mass convention: the p-value sums every table (same margins)
//! whose point probability does not exceed the observed one.
inline double two_sample_exact_test(std::int64_t successes1, std::int64_t n1,
                                    std::int64_t successes2, std::int64_t n2) {
    if (n1 < 1 || n2 < 1) throw InvalidArgument("two_sample_exact_test requires n1, n2 >= 1");
    if (successes1 < 0 || successes1 > n1 || successes2 < 0 || successes2 > n2)
        throw InvalidArgument("two_sample_exact_test requires 0 <= successes_i <= n_i");

    const std::int64_t k = successes1 + successes2;
    const std::int64_t total = n1 + n2;
    const std::int64_t lo = std::max<std::int64_t>(0, k - n2);
    const std::int64_t hi = std::min(n1, k);

    auto lchoose = [](std::int64_t n, std::int64_t x) {
        return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(x + 1)) -
               std::lgamma(static_cast<double>(n - x + 1));
    };
    const double lden = lchoose(total, k);
    auto logpmf = [&](std::int64_t x) { return lchoose(n1, x) + lchoose(n2, k - x) - lden; };

    // Walk the support with the pmf ratio recurrence in log space; collect
    // the log-probabilities at or below the observed table's, with a small
    // relative tolerance for floating-point ties.
    const double cutoff = logpmf(successes1) + std::log1p(1e-7);
    std::vector<double> included;
    double lp = logpmf(lo);
    for (std::int64_t x = lo;; ++x) {
        if (lp <= cutoff) included.push_back(lp);
        if (x == hi) break;
        lp += std::log(static_cast<double>(n1 - x)) + std::log(static_cast<double>(k - x)) -
              std::log(static_cast<double>(x + 1)) - std::log(static_cast<double>(n2 - k + x + 1));
    }
    const double lmax = *std::max_element(included.begin(), included.end());
    double acc = 0.0;
    for (double v : included) acc += std::exp(v - lmax);
    const double p = std::exp(lmax + std::log(acc));
    if (p >= 1.0 || 1.0 - p < 1e-9) return 1.0;
    return p;
}

}  // namespace respdiff
