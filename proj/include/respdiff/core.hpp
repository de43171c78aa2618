#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace respdiff {

inline constexpr const char* kLibraryVersion = "0.1.0";

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Violated precondition or malformed input.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A bound's applicability guard failed; the formula would produce an
// unproven number, so we refuse to evaluate it instead.
class BoundNotApplicable : public Error {
public:
    using Error::Error;
};

class BudgetExhausted : public Error {
public:
    using Error::Error;
};

// Transport or classification failure in a response source.
class SourceError : public Error {
public:
    using Error::Error;
};

//! A Bernoulli parameter. Construction rejects NaN and values outside [0,1].
class Probability {
public:
    Probability() = default;
    explicit Probability(double value) : value_(value) {
        if (!(value >= 0.0 && value <= 1.0))
            throw InvalidArgument("probability must lie in [0,1], got " + std::to_string(value));
    }
    double value() const { return value_; }

    friend bool operator==(Probability lhs, Probability rhs) { return lhs.value_ == rhs.value_; }
    friend auto operator<=>(Probability lhs, Probability rhs) { return lhs.value_ <=> rhs.value_; }

private:
    double value_ = 0.0;
};

//! The interval [a, b] of null Bernoulli parameters, true or estimated.
class NullRange {
public:
    NullRange() = default;
    NullRange(Probability a, Probability b) : a_(a), b_(b) {
        if (a.value() > b.value())
            throw InvalidArgument("null range requires a <= b");
    }
    NullRange(double a, double b) : NullRange(Probability(a), Probability(b)) {}

    Probability a() const { return a_; }
    Probability b() const { return b_; }
    double width() const { return b_.value() - a_.value(); }

    // The regime the size/power theory assumes: 0 < a < b < 1. Estimated
    // ranges may violate this (e.g. an estimated b of exactly 1).
    bool theory_admissible() const {
        return 0.0 < a_.value() && a_.value() < b_.value() && b_.value() < 1.0;
    }

private:
    Probability a_{};
    Probability b_{};
};

//! A complete test configuration: threshold, sample sizes, level, budget.
struct TestDesign {
    double epsilon = 0.0;       // rejection threshold for the min-distance statistic
    std::int64_t m = 0;         // number of sampled null queries
    std::int64_t r = 0;         // replicates per query
    double alpha = 0.0;         // level of significance
    std::int64_t nu = 0;        // budget the design was chosen under

    TestDesign() = default;
    TestDesign(double epsilon_, std::int64_t m_, std::int64_t r_, double alpha_, std::int64_t nu_)
        : epsilon(epsilon_), m(m_), r(r_), alpha(alpha_), nu(nu_) {
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
            throw InvalidArgument("test design requires epsilon > 0");
        if (m < 1) throw InvalidArgument("test design requires m >= 1");
        if (r < 1) throw InvalidArgument("test design requires r >= 1");
        if (!(alpha > 0.0 && alpha < 1.0))
            throw InvalidArgument("test design requires alpha in (0,1)");
        if (nu < 1) throw InvalidArgument("test design requires nu >= 1");
        if (m > nu / r)
            throw InvalidArgument("test design exceeds budget: m*r > nu");
    }
};

//! An estimated Bernoulli parameter: a success count over r replicates,
//! so p_hat * r is an integer by construction.
class BernoulliEstimate {
public:
    BernoulliEstimate() = default;
    BernoulliEstimate(std::int64_t successes, std::int64_t replicates)
        : successes_(successes), replicates_(replicates) {
        if (replicates < 1)
            throw InvalidArgument("estimate requires r >= 1");
        if (successes < 0 || successes > replicates)
            throw InvalidArgument("estimate requires 0 <= successes <= r");
    }

    std::int64_t successes() const { return successes_; }
    std::int64_t replicates() const { return replicates_; }
    double p_hat() const { return static_cast<double>(successes_) / static_cast<double>(replicates_); }
    Probability estimate() const { return Probability(p_hat()); }

private:
    std::int64_t successes_ = 0;
    std::int64_t replicates_ = 1;
};

//! sqrt(ln r / r): half-width within which the realistic statistic tracks the
//! ideal one. Zero at r = 1, strictly decreasing for r >= 3.
inline double concentration_radius(std::int64_t r) {
    if (r < 1) throw InvalidArgument("concentration_radius requires r >= 1");
    return std::sqrt(std::log(static_cast<double>(r)) / static_cast<double>(r));
}

//! 2m / sqrt(r): probability mass allowed outside the concentration event.
//! May exceed 1; bound formulas clamp their final results where needed.
inline double concentration_slack(std::int64_t m, std::int64_t r) {
    if (m < 1) throw InvalidArgument("concentration_slack requires m >= 1");
    if (r < 1) throw InvalidArgument("concentration_slack requires r >= 1");
    return 2.0 * static_cast<double>(m) / std::sqrt(static_cast<double>(r));
}

inline double clamp01(double v) {
    if (v < 0.0) return 0.0;
    if (v > 1.0) return 1.0;
    return v;
}

}  // namespace respdiff
