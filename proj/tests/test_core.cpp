#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "respdiff/core.hpp"
#include "respdiff/rng.hpp"

using namespace respdiff;

TEST_CASE("Probability accepts [0,1] and rejects everything else") {
    CHECK(Probability(0.0).value() == 0.0);
    CHECK(Probability(1.0).value() == 1.0);
    CHECK(Probability(0.5).value() == 0.5);
    CHECK_THROWS_AS(Probability(-0.001), InvalidArgument);
    CHECK_THROWS_AS(Probability(1.001), InvalidArgument);
    CHECK_THROWS_AS(Probability(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
    CHECK_THROWS_AS(Probability(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST_CASE("NullRange invariants") {
    NullRange range(0.4, 0.6);
    CHECK(range.width() == Catch::Approx(0.2).margin(1e-15));
    CHECK(range.theory_admissible());
    CHECK_THROWS_AS(NullRange(0.6, 0.4), InvalidArgument);

    CHECK(NullRange(0.3, 0.3).width() == 0.0);
    CHECK_FALSE(NullRange(0.3, 0.3).theory_admissible());
    CHECK_FALSE(NullRange(0.898, 1.0).theory_admissible());
    CHECK_FALSE(NullRange(0.0, 0.5).theory_admissible());
}

TEST_CASE("TestDesign validation") {
    CHECK_NOTHROW(TestDesign(0.05, 9, 100000, 0.1, 1000000));
    CHECK_THROWS_AS(TestDesign(0.0, 9, 100000, 0.1, 1000000), InvalidArgument);
    CHECK_THROWS_AS(TestDesign(0.05, 0, 100000, 0.1, 1000000), InvalidArgument);
    CHECK_THROWS_AS(TestDesign(0.05, 9, 0, 0.1, 1000000), InvalidArgument);
    CHECK_THROWS_AS(TestDesign(0.05, 9, 100000, 1.0, 1000000), InvalidArgument);
    // m*r must fit inside nu
    CHECK_THROWS_AS(TestDesign(0.05, 11, 100000, 0.1, 1000000), InvalidArgument);
}

TEST_CASE("BernoulliEstimate is a count over replicates") {
    BernoulliEstimate e(948, 1000);
    CHECK(e.p_hat() == Catch::Approx(0.948).margin(1e-15));
    CHECK(e.p_hat() * static_cast<double>(e.replicates()) == Catch::Approx(948.0).margin(1e-9));
    CHECK_THROWS_AS(BernoulliEstimate(-1, 10), InvalidArgument);
    CHECK_THROWS_AS(BernoulliEstimate(11, 10), InvalidArgument);
    CHECK_THROWS_AS(BernoulliEstimate(0, 0), InvalidArgument);
}

TEST_CASE("concentration_radius matches direct evaluation") {
    CHECK(concentration_radius(1) == 0.0);
    CHECK(concentration_radius(100) == Catch::Approx(0.2145966026289347).margin(1e-12));
    CHECK(concentration_radius(100000) == Catch::Approx(0.0107298301074861).margin(1e-12));
    CHECK_THROWS_AS(concentration_radius(0), InvalidArgument);
}

TEST_CASE("concentration_radius is strictly decreasing for r >= 3") {
    double prev = concentration_radius(3);
    for (std::int64_t r = 4; r <= 3000; ++r) {
        const double cur = concentration_radius(r);
        REQUIRE(cur < prev);
        prev = cur;
    }
    CHECK(concentration_radius(100000000) < 1e-3);
}

TEST_CASE("concentration_slack matches direct evaluation and may exceed 1") {
    CHECK(concentration_slack(1, 4) == Catch::Approx(1.0).margin(1e-15));
    CHECK(concentration_slack(20, 250000) == Catch::Approx(0.08).margin(1e-12));
    CHECK(concentration_slack(9, 100000) == Catch::Approx(0.0569209978830308).margin(1e-12));
    CHECK(concentration_slack(100, 100) > 1.0);
    CHECK_THROWS_AS(concentration_slack(1, 0), InvalidArgument);
    CHECK_THROWS_AS(concentration_slack(0, 1), InvalidArgument);
}

TEST_CASE("concentration_slack vanishes along r = m^3") {
    double prev = concentration_slack(1, 1);
    for (std::int64_t k = 2; k <= 100; ++k) {
        const double cur = concentration_slack(k, k * k * k);
        REQUIRE(cur < prev);
        prev = cur;
    }
    CHECK(concentration_slack(100, 100 * 100 * 100) == Catch::Approx(0.2).margin(1e-12));
}

TEST_CASE("stream derivation is deterministic and path-sensitive") {
    Rng a = make_stream(42, {1, 2, 3});
    Rng b = make_stream(42, {1, 2, 3});
    Rng c = make_stream(42, {1, 2, 4});
    CHECK(a() == b());
    CHECK(make_stream(42, {1})() != c());
}

TEST_CASE("sample_binomial modes agree in distribution and respect edge cases") {
    Rng rng = make_stream(7, {0});
    CHECK(sample_binomial(rng, 100, 0.0) == 0);
    CHECK(sample_binomial(rng, 100, 1.0) == 100);
    CHECK(sample_binomial(rng, 0, 0.5) == 0);
    // per-draw mode: mean of many small batches close to p
    std::int64_t total = 0;
    for (int i = 0; i < 2000; ++i) total += sample_binomial(rng, 10, 0.3, BinomialSampling::per_draw);
    CHECK(std::abs(static_cast<double>(total) / 20000.0 - 0.3) < 0.02);
    CHECK_THROWS_AS(sample_binomial(rng, -1, 0.5), InvalidArgument);
    CHECK_THROWS_AS(sample_binomial(rng, 10, 1.5), InvalidArgument);
}
