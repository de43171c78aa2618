#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "respdiff/core.hpp"

namespace respdiff {

//! Minimum number of null queries for the ideal test to be valid at level
//! alpha: ceil(|ln alpha| / |ln(1 - epsilon/width)|), at least 1.
inline std::int64_t min_null_samples(double alpha, double epsilon, double width) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("min_null_samples requires alpha in (0,1)");
    if (!(epsilon > 0.0)) throw InvalidArgument("min_null_samples requires epsilon > 0");
    if (!(width > 0.0) || !(epsilon < width))
        throw InvalidArgument("min_null_samples requires 0 < epsilon < width");
    const double ratio = std::abs(std::log(alpha)) / std::abs(std::log(1.0 - epsilon / width));
    const double m = std::ceil(ratio);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(m));
}

//! Size upper bound for the realistic test:
//!   (1 - (epsilon - radius)/width)^m + 2m/sqrt(r).
//! Unclamped; callers compare against alpha. Applicability guards
//! (radius < epsilon, epsilon - radius <= width) are enforced, not assumed.
inline double size_upper_bound(double epsilon, std::int64_t m, std::int64_t r, double width) {
    if (m < 1) throw InvalidArgument("size_upper_bound requires m >= 1");
    if (!(epsilon > 0.0)) throw InvalidArgument("size_upper_bound requires epsilon > 0");
    if (!(width > 0.0)) throw BoundNotApplicable("bound not applicable: degenerate range");
    const double radius = concentration_radius(r);
    if (!(epsilon > radius))
        throw BoundNotApplicable("bound not applicable: epsilon <= sqrt(ln r / r)");
    if (!(epsilon - radius <= width))
        throw BoundNotApplicable("bound not applicable: epsilon - radius exceeds width");
    return std::pow(1.0 - (epsilon - radius) / width, static_cast<double>(m)) +
           concentration_slack(m, r);
}

inline double size_upper_bound_clamped(double epsilon, std::int64_t m, std::int64_t r, double width) {
    return clamp01(size_upper_bound(epsilon, m, r, width));
}

//! Rejection probability of the ideal test as a function of the true p'.
//! On the alternative this is the power function (1 outside the
//! epsilon-widened range, boundary-strip pieces near a and b); on [a, b] it
//! is the null-region rejection probability, so callers can validate the
//! whole curve. Requires epsilon < min{a, b-a, 1-b}.
inline double ideal_power(Probability p_prime, double epsilon, std::int64_t m, const NullRange& range) {
    if (m < 1) throw InvalidArgument("ideal_power requires m >= 1");
    if (!range.theory_admissible())
        throw BoundNotApplicable("ideal_power requires 0 < a < b < 1");
    const double a = range.a().value();
    const double b = range.b().value();
    const double w = range.width();
    if (!(epsilon > 0.0) || !(epsilon < std::min({a, w, 1.0 - b})))
        throw BoundNotApplicable("ideal_power requires 0 < epsilon < min{a, b-a, 1-b}");
    const double p = p_prime.value();
    if (p <= a - epsilon || p >= b + epsilon) return 1.0;
    // P[|p_j - p'| > eps] = 1 - |[p'-eps, p'+eps] ∩ [a,b]| / (b-a), i.i.d. over j
    const double overlap = std::min(p + epsilon, b) - std::max(p - epsilon, a);
    return std::pow(std::max(0.0, 1.0 - overlap / w), static_cast<double>(m));
}

//! Pointwise lower bound phi on the power of the realistic test, defined on
//! the alternative (0,a) ∪ (b,1) only. Unclamped: near the boundary the
//! bound can go negative (vacuous).
inline double power_lower_bound_raw(Probability p_prime, double epsilon, std::int64_t m,
                                    std::int64_t r, const NullRange& range) {
    if (m < 1) throw InvalidArgument("power_lower_bound requires m >= 1");
    if (!range.theory_admissible())
        throw BoundNotApplicable("power_lower_bound requires 0 < a < b < 1");
    const double a = range.a().value();
    const double b = range.b().value();
    const double w = range.width();
    if (!(epsilon > 0.0) || !(epsilon < std::min({a, w, 1.0 - b})))
        throw BoundNotApplicable("power_lower_bound requires 0 < epsilon < min{a, b-a, 1-b}");
    const double p = p_prime.value();
    if (p >= a && p <= b)
        throw InvalidArgument("phi is defined on the alternative (0,a) U (b,1) only");
    const double radius = concentration_radius(r);
    const double slack = concentration_slack(m, r);
    if (p <= a - epsilon - radius || p >= b + epsilon + radius) return 1.0 - slack;
    return std::pow(std::max(0.0, 1.0 - (epsilon + radius) / w), static_cast<double>(m)) - slack;
}

//! phi clamped below at zero, for reporting.
inline double power_lower_bound(Probability p_prime, double epsilon, std::int64_t m, std::int64_t r,
                                const NullRange& range) {
    return std::max(0.0, power_lower_bound_raw(p_prime, epsilon, m, r, range));
}

struct AvgPowerBound {
    double value = 0.0;
    bool vacuous = false;  // the formula asserts nothing (value <= 0)
};

//! Average-power lower bound H(epsilon, m, r): the exact expectation of phi
//! under p' ~ Unif((0,a) ∪ (b,1)), which depends on [a,b] only through the
//! width. Returned unclamped with a vacuous flag.
inline AvgPowerBound avg_power_lower_bound(double epsilon, std::int64_t m, std::int64_t r,
                                           double width) {
    if (m < 1) throw InvalidArgument("avg_power_lower_bound requires m >= 1");
    if (!(epsilon > 0.0)) throw InvalidArgument("avg_power_lower_bound requires epsilon > 0");
    if (!(width > 0.0 && width < 1.0))
        throw InvalidArgument("avg_power_lower_bound requires width in (0,1)");
    const double radius = concentration_radius(r);
    const double slack = concentration_slack(m, r);
    const double widened = epsilon + radius;
    const double decay = std::pow(std::max(0.0, 1.0 - widened / width), static_cast<double>(m));
    const double value = 2.0 / (1.0 - width) * (decay - 1.0) * widened + (1.0 - slack);
    return AvgPowerBound{value, value <= 0.0};
}

struct Validity {
    bool valid = false;
    double size_bound = std::numeric_limits<double>::quiet_NaN();
    std::string reason;  // nonempty when an applicability guard failed
};

//! True iff the (unclamped) size upper bound does not exceed alpha. Guard
//! failures come back as invalid-with-reason rather than an exception.
inline Validity validity_check(double epsilon, std::int64_t m, std::int64_t r, double width,
                               double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("validity_check requires alpha in (0,1)");
    try {
        const double bound = size_upper_bound(epsilon, m, r, width);
        return Validity{bound <= alpha, bound, ""};
    } catch (const BoundNotApplicable& e) {
        return Validity{false, std::numeric_limits<double>::quiet_NaN(), e.what()};
    }
}

//! Analytical summary of a design against a range, for comparison with
//! simulation. size_upper is clamped; is_valid uses the unclamped value.
struct BoundReport {
    TestDesign design;
    NullRange range;
    double size_upper = std::numeric_limits<double>::quiet_NaN();
    double avg_power_lower = std::numeric_limits<double>::quiet_NaN();
    bool is_valid = false;
    bool power_vacuous = false;
    double radius = 0.0;
    double slack = 0.0;
};

inline BoundReport make_bound_report(const TestDesign& design, const NullRange& range) {
    BoundReport report;
    report.design = design;
    report.range = range;
    report.radius = concentration_radius(design.r);
    report.slack = concentration_slack(design.m, design.r);
    const double raw = size_upper_bound(design.epsilon, design.m, design.r, range.width());
    report.size_upper = clamp01(raw);
    report.is_valid = raw <= design.alpha;
    const AvgPowerBound h = avg_power_lower_bound(design.epsilon, design.m, design.r, range.width());
    report.avg_power_lower = h.value;
    report.power_vacuous = h.vacuous;
    return report;
}

}  // namespace respdiff
