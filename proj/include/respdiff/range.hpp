#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "respdiff/core.hpp"
#include "respdiff/source.hpp"
#include "respdiff/statistic.hpp"

namespace respdiff {

enum class RangeMode {
    raw,       // min/max of the pilot estimates
    remark1,   // bias correction as stated: a - (b-a)/(m+1), b*(m+1)/m
    symmetric, // two-sided Unif(a,b) correction, requires m >= 2
};

inline const char* to_string(RangeMode m) {
    switch (m) {
        case RangeMode::raw: return "raw";
        case RangeMode::remark1: return "remark1";
        default: return "symmetric";
    }
}

inline NullRange raw_range(double min_p, double max_p) {
    return NullRange(Probability(min_p), Probability(max_p));
}

// Bias-corrected range for pilot order statistics. The upper formula
// (m+1)/m * p_(m) is the Unif(0, b) correction, implemented verbatim as
// stated; it can overshoot and is clamped into [0, 1].
inline NullRange remark1_range(double min_p, double max_p, std::int64_t m_tilde) {
    if (m_tilde < 1) throw InvalidArgument("remark1 correction requires m_tilde >= 1");
    const double spread = max_p - min_p;
    const double a = min_p - spread / static_cast<double>(m_tilde + 1);
    const double b = max_p * static_cast<double>(m_tilde + 1) / static_cast<double>(m_tilde);
    return NullRange(clamp01(a), clamp01(b));
}

// Two-sided correction for Unif(a, b): widen both ends by spread/(m-1).
inline NullRange symmetric_range(double min_p, double max_p, std::int64_t m_tilde) {
    if (m_tilde < 2) throw InvalidArgument("symmetric correction requires m_tilde >= 2");
    const double spread = max_p - min_p;
    const double a = min_p - spread / static_cast<double>(m_tilde - 1);
    const double b = max_p + spread / static_cast<double>(m_tilde - 1);
    return NullRange(clamp01(a), clamp01(b));
}

inline NullRange corrected_range(double min_p, double max_p, std::int64_t m_tilde, RangeMode mode) {
    switch (mode) {
        case RangeMode::raw: return raw_range(min_p, max_p);
        case RangeMode::remark1: return remark1_range(min_p, max_p, m_tilde);
        default: return symmetric_range(min_p, max_p, m_tilde);
    }
}

//! Pilot estimate of the null interval from m_tilde queries at r_tilde
//! replicates each.
struct RangeEstimate {
    NullRange raw;        // min/max of the pilot estimates
    NullRange corrected;  // remark1 formulas, clamped into [0,1]
    std::int64_t m_tilde = 0;
    std::int64_t r_tilde = 0;
    std::vector<BernoulliEstimate> pilot_estimates;
    std::vector<std::string> sampled_queries;
    QuerySampling sampling = QuerySampling::with_replacement;
};

inline NullRange select_range(const RangeEstimate& est, RangeMode mode) {
    switch (mode) {
        case RangeMode::raw: return est.raw;
        case RangeMode::remark1: return est.corrected;
        default: {
            const double lo = est.raw.a().value();
            const double hi = est.raw.b().value();
            return symmetric_range(lo, hi, est.m_tilde);
        }
    }
}

//! Estimate [a, b] from a pilot sample, spending m_tilde * r_tilde budget.
inline RangeEstimate estimate_range(ResponseSource& source,
                                    const std::vector<std::string>& null_queries,
                                    std::int64_t m_tilde, std::int64_t r_tilde, std::uint64_t seed,
                                    QuerySampling sampling = QuerySampling::with_replacement) {
    if (null_queries.empty()) throw InvalidArgument("empty null query set");
    if (m_tilde < 1 || r_tilde < 1)
        throw InvalidArgument("estimate_range requires m_tilde >= 1 and r_tilde >= 1");
    if (source.remaining_budget() / m_tilde < r_tilde)
        throw BudgetExhausted("estimate_range needs m_tilde*r_tilde responses");

    Rng pick = make_stream(seed, {0});
    RangeEstimate est;
    est.m_tilde = m_tilde;
    est.r_tilde = r_tilde;
    est.sampling = sampling;
    est.sampled_queries = sample_queries(null_queries, m_tilde, pick, sampling);
    est.pilot_estimates.reserve(static_cast<std::size_t>(m_tilde));
    double lo = 1.0, hi = 0.0;
    for (std::int64_t j = 0; j < m_tilde; ++j) {
        Rng stream = make_stream(seed, {1, static_cast<std::uint64_t>(j)});
        const BernoulliEstimate e =
            source.draw(est.sampled_queries[static_cast<std::size_t>(j)], r_tilde, stream).to_estimate();
        lo = std::min(lo, e.p_hat());
        hi = std::max(hi, e.p_hat());
        est.pilot_estimates.push_back(e);
    }
    est.raw = raw_range(lo, hi);
    est.corrected = remark1_range(lo, hi, m_tilde);
    return est;
}

}  // namespace respdiff
