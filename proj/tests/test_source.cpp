#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "respdiff/rng.hpp"
#include "respdiff/source.hpp"

using namespace respdiff;

TEST_CASE("budget ledger basics") {
    BudgetLedger ledger(100);
    auto fresh = ledger.report();
    CHECK(fresh.spent == 0);
    CHECK(fresh.remaining == 100);
    CHECK(fresh.per_query.empty());

    ledger.charge("q", 30);
    ledger.charge("q2", 20);
    auto mid = ledger.report();
    CHECK(mid.spent == 50);
    CHECK(mid.remaining == 50);
    CHECK(mid.per_query.at("q") == 30);
    CHECK(mid.per_query.at("q2") == 20);

    CHECK_THROWS_AS(ledger.charge("q3", 51), BudgetExhausted);
    auto after = ledger.report();
    CHECK(after.spent == 50);
    CHECK(after.remaining == 50);
    CHECK(after.per_query.size() == 2);
}

TEST_CASE("budget conservation under concurrent draws") {
    SyntheticSource source(NullRange(0.2, 0.8), 5, 997);
    std::atomic<std::int64_t> succeeded{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            Rng rng = make_stream(77, {static_cast<std::uint64_t>(t)});
            for (int i = 0; i < 100; ++i) {
                try {
                    source.draw("q" + std::to_string(i % 7), 3, rng);
                    succeeded.fetch_add(3);
                } catch (const BudgetExhausted&) {
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    const auto report = source.ledger_report();
    CHECK(report.spent == succeeded.load());
    CHECK(report.spent + report.remaining == 997);
    CHECK(report.spent <= 997);
    std::int64_t per_query_total = 0;
    for (const auto& [q, n] : report.per_query) per_query_total += n;
    CHECK(per_query_total == report.spent);
}

TEST_CASE("synthetic source statistical fidelity") {
    for (double p : {0.1, 0.5, 0.9}) {
        SyntheticSource source({{"q", p}}, 10000000);
        Rng rng = make_stream(314159, {static_cast<std::uint64_t>(p * 100)});
        const std::int64_t n = 100000;
        const auto batch = source.draw("q", n, rng);
        const double tolerance = 4.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        CHECK(std::abs(batch.estimate().value() - p) < tolerance);
    }
    // degenerate p = 1: every response is a success
    SyntheticSource ones({{"q", 1.0}}, 1000);
    Rng rng = make_stream(1, {0});
    CHECK(ones.draw("q", 50, rng).successes == 50);
    // half at a million draws lands within 0.002
    SyntheticSource half({{"q", 0.5}}, 2000000);
    const auto batch = half.draw("q", 1000000, rng);
    CHECK(std::abs(batch.estimate().value() - 0.5) < 0.002);
}

TEST_CASE("synthetic lazy parameters are stable and order-independent") {
    SyntheticSource s1(NullRange(0.4, 0.6), 99, 1000000);
    SyntheticSource s2(NullRange(0.4, 0.6), 99, 1000000);
    const Probability pa1 = s1.parameter("alpha");
    const Probability pb1 = s1.parameter("beta");
    const Probability pb2 = s2.parameter("beta");  // opposite discovery order
    const Probability pa2 = s2.parameter("alpha");
    CHECK(pa1.value() == pa2.value());
    CHECK(pb1.value() == pb2.value());
    CHECK(pa1.value() >= 0.4);
    CHECK(pa1.value() <= 0.6);
    CHECK(s1.parameter("alpha").value() == pa1.value());
}

TEST_CASE("seed determinism of draws") {
    SyntheticSource s1({{"q", 0.37}}, 100000);
    SyntheticSource s2({{"q", 0.37}}, 100000);
    Rng r1 = make_stream(5, {1});
    Rng r2 = make_stream(5, {1});
    CHECK(s1.draw("q", 5000, r1).successes == s2.draw("q", 5000, r2).successes);
}

TEST_CASE("rigged source returns exact counts") {
    RiggedSource source({{"q", 0.4}}, 1000);
    Rng rng = make_stream(0, {0});
    CHECK(source.draw("q", 10, rng).successes == 4);
    CHECK(source.draw("q", 25, rng).successes == 10);
    CHECK_THROWS_AS(source.draw("unknown", 10, rng), SourceError);
}

TEST_CASE("pool source draws without replacement and exhausts") {
    PoolSource source({{"q", {3, 10}}}, 1000);
    Rng rng = make_stream(8, {0});
    // draining the whole pool recovers the exact composition
    const auto batch = source.draw("q", 10, rng);
    CHECK(batch.successes == 3);
    CHECK_THROWS_AS(source.draw("q", 1, rng), SourceError);

    PoolSource parts({{"q", {5, 10}}}, 1000);
    const auto first = parts.draw("q", 6, rng);
    const auto second = parts.draw("q", 4, rng);
    CHECK(first.successes + second.successes == 5);
    CHECK(parts.ledger_report().spent == 10);
}

TEST_CASE("pool source with replacement keeps the original rate") {
    PoolSource source({{"q", {5000, 10000}}}, 10000000, /*with_replacement=*/true);
    Rng rng = make_stream(9, {0});
    const auto batch = source.draw("q", 100000, rng);
    CHECK(std::abs(batch.estimate().value() - 0.5) < 0.01);
    // with replacement the pool never runs dry
    CHECK_NOTHROW(source.draw("q", 100000, rng));
}

TEST_CASE("classify_response conventions") {
    CHECK(classify_response("Yes.") == Classification::yes);
    CHECK(classify_response("  no\n") == Classification::no);
    CHECK(classify_response("YES") == Classification::yes);
    CHECK(classify_response("No!") == Classification::no);
    CHECK(classify_response("yes, because it is") == Classification::yes);
    CHECK(classify_response("no, not at all") == Classification::no);
    CHECK(classify_response("I cannot say") == Classification::unclassifiable);
    CHECK(classify_response("maybe") == Classification::unclassifiable);
    CHECK(classify_response("") == Classification::unclassifiable);
    CHECK(classify_response("noise") == Classification::unclassifiable);
    CHECK(classify_response("yesterday") == Classification::unclassifiable);
}
