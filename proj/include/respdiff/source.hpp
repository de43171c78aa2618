#pragma once

#include <cctype>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "respdiff/core.hpp"
#include "respdiff/rng.hpp"

namespace respdiff {

//! One batch of binary responses to a single query.
struct ResponseBatch {
    std::string query_id;
    std::int64_t successes = 0;
    std::int64_t r = 0;

    ResponseBatch(std::string query_id_, std::int64_t successes_, std::int64_t r_)
        : query_id(std::move(query_id_)), successes(successes_), r(r_) {
        if (r < 1) throw InvalidArgument("response batch requires r >= 1");
        if (successes < 0 || successes > r)
            throw InvalidArgument("response batch requires 0 <= successes <= r");
    }

    Probability estimate() const {
        return Probability(static_cast<double>(successes) / static_cast<double>(r));
    }
    BernoulliEstimate to_estimate() const { return BernoulliEstimate(successes, r); }
};

struct LedgerReport {
    std::int64_t initial = 0;
    std::int64_t spent = 0;
    std::int64_t remaining = 0;
    std::map<std::string, std::int64_t> per_query;
    std::int64_t classification_failures = 0;
};

// Budget accounting shared by all sources. charge() either bills the full
// amount or throws BudgetExhausted leaving the ledger untouched; the mutex
// makes charges linearizable under concurrent draws.
class BudgetLedger {
public:
    explicit BudgetLedger(std::int64_t initial) : initial_(initial) {
        if (initial < 0) throw InvalidArgument("budget must be non-negative");
    }

    void charge(const std::string& query, std::int64_t n) {
        if (n < 0) throw InvalidArgument("charge requires n >= 0");
        std::scoped_lock lock(mutex_);
        if (n > initial_ - spent_)
            throw BudgetExhausted("budget exhausted: need " + std::to_string(n) + ", have " +
                                  std::to_string(initial_ - spent_));
        spent_ += n;
        per_query_[query] += n;
    }

    void note_classification_failure() {
        std::scoped_lock lock(mutex_);
        ++classification_failures_;
    }

    std::int64_t remaining() const {
        std::scoped_lock lock(mutex_);
        return initial_ - spent_;
    }

    LedgerReport report() const {
        std::scoped_lock lock(mutex_);
        return LedgerReport{initial_, spent_, initial_ - spent_, per_query_, classification_failures_};
    }

private:
    mutable std::mutex mutex_;
    std::int64_t initial_ = 0;
    std::int64_t spent_ = 0;
    std::map<std::string, std::int64_t> per_query_;
    std::int64_t classification_failures_ = 0;
};

//! Anything that maps (query, n) to n binary responses, with budget
//! accounting. Implementations must be safe for concurrent draw calls.
class ResponseSource {
public:
    virtual ~ResponseSource() = default;

    // Draw n binary responses for `query`, billing exactly n budget units.
    // The caller owns the rng stream; sources that generate synthetic
    // randomness use it, live sources ignore it.
    virtual ResponseBatch draw(const std::string& query, std::int64_t n, Rng& rng) = 0;

    virtual std::int64_t remaining_budget() const = 0;
    virtual LedgerReport ledger_report() const = 0;
};

//! Bernoulli oracle. Each query has a fixed parameter, from an explicit table
//! or assigned as Unif(a, b) when first seen. Lazy assignment is a pure
//! function of (seed, query string), so it is stable for the life of the
//! source and independent of draw order.
class SyntheticSource : public ResponseSource {
public:
    SyntheticSource(std::map<std::string, double> table, std::int64_t budget)
        : ledger_(budget) {
        for (auto& [q, p] : table) table_.emplace(q, Probability(p));
    }

    SyntheticSource(NullRange assign_range, std::uint64_t param_seed, std::int64_t budget)
        : ledger_(budget), assign_range_(assign_range), param_seed_(param_seed), lazy_(true) {}

    Probability parameter(const std::string& query) const {
        {
            std::scoped_lock lock(table_mutex_);
            auto it = table_.find(query);
            if (it != table_.end()) return it->second;
        }
        if (!lazy_) throw SourceError("synthetic source has no parameter for query: " + query);
        const double u =
            static_cast<double>(splitmix64(param_seed_ ^ fnv1a64(query)) >> 11) * 0x1.0p-53;
        Probability p(assign_range_.a().value() + assign_range_.width() * u);
        std::scoped_lock lock(table_mutex_);
        auto [it, inserted] = table_.emplace(query, p);
        return it->second;
    }

    ResponseBatch draw(const std::string& query, std::int64_t n, Rng& rng) override {
        if (n < 1) throw InvalidArgument("draw requires n >= 1");
        const Probability p = parameter(query);
        ledger_.charge(query, n);
        return ResponseBatch(query, sample_binomial(rng, n, p.value(), sampling_mode), n);
    }

    std::int64_t remaining_budget() const override { return ledger_.remaining(); }
    LedgerReport ledger_report() const override { return ledger_.report(); }

    BinomialSampling sampling_mode = BinomialSampling::direct;

private:
    BudgetLedger ledger_;
    mutable std::mutex table_mutex_;
    mutable std::map<std::string, Probability> table_;
    NullRange assign_range_{};
    std::uint64_t param_seed_ = 0;
    bool lazy_ = false;
};

//! Deterministic source for tests: a draw of n responses for a query with
//! parameter p returns exactly round(p * n) successes.
class RiggedSource : public ResponseSource {
public:
    RiggedSource(std::map<std::string, double> table, std::int64_t budget) : ledger_(budget) {
        for (auto& [q, p] : table) table_.emplace(q, Probability(p));
    }

    ResponseBatch draw(const std::string& query, std::int64_t n, Rng& /*rng*/) override {
        if (n < 1) throw InvalidArgument("draw requires n >= 1");
        auto it = table_.find(query);
        if (it == table_.end()) throw SourceError("rigged source has no entry for query: " + query);
        ledger_.charge(query, n);
        auto successes = static_cast<std::int64_t>(std::llround(it->second.value() * static_cast<double>(n)));
        return ResponseBatch(query, successes, n);
    }

    std::int64_t remaining_budget() const override { return ledger_.remaining(); }
    LedgerReport ledger_report() const override { return ledger_.report(); }

private:
    BudgetLedger ledger_;
    std::map<std::string, Probability> table_;
};

//! Finite pre-collected response pools, one per query. Draws sample the pool
//! without replacement (sequential hypergeometric over the remaining counts)
//! or, behind a flag, with replacement at the original pool rate.
class PoolSource : public ResponseSource {
public:
    struct Pool {
        std::int64_t successes = 0;
        std::int64_t total = 0;
    };

    PoolSource(std::map<std::string, Pool> pools, std::int64_t budget, bool with_replacement = false)
        : ledger_(budget), with_replacement_(with_replacement) {
        for (auto& [q, pool] : pools) {
            if (pool.total < 1 || pool.successes < 0 || pool.successes > pool.total)
                throw InvalidArgument("pool for query '" + q + "' is malformed");
            pools_.emplace(q, State{pool, pool});
        }
    }

    ResponseBatch draw(const std::string& query, std::int64_t n, Rng& rng) override {
        if (n < 1) throw InvalidArgument("draw requires n >= 1");
        std::scoped_lock lock(pool_mutex_);
        auto it = pools_.find(query);
        if (it == pools_.end()) throw SourceError("pool source has no pool for query: " + query);
        State& st = it->second;
        if (with_replacement_) {
            ledger_.charge(query, n);
            const double p = static_cast<double>(st.original.successes) /
                             static_cast<double>(st.original.total);
            return ResponseBatch(query, sample_binomial(rng, n, p), n);
        }
        if (n > st.remaining.total)
            throw SourceError("pool for query '" + query + "' has only " +
                              std::to_string(st.remaining.total) + " responses left, need " +
                              std::to_string(n));
        ledger_.charge(query, n);
        std::int64_t successes = 0;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::int64_t k = 0; k < n; ++k) {
            const double frac = static_cast<double>(st.remaining.successes) /
                                static_cast<double>(st.remaining.total);
            if (u(rng) < frac) {
                ++successes;
                --st.remaining.successes;
            }
            --st.remaining.total;
        }
        return ResponseBatch(query, successes, n);
    }

    std::int64_t remaining_budget() const override { return ledger_.remaining(); }
    LedgerReport ledger_report() const override { return ledger_.report(); }

private:
    struct State {
        Pool original;
        Pool remaining;
    };

    BudgetLedger ledger_;
    std::mutex pool_mutex_;
    std::map<std::string, State> pools_;
    bool with_replacement_ = false;
};

enum class Classification { no = 0, yes = 1, unclassifiable = 2 };

//! Map a completion to a binary response: strip surrounding whitespace and
//! punctuation, lowercase, accept the exact tokens "yes"/"no", and fall back
//! to a leading-token match ("yes, because ..."). Anything else is
//! unclassifiable; it is a value, never an error.
inline Classification classify_response(std::string_view text) {
    auto is_trim = [](unsigned char c) { return std::isspace(c) || std::ispunct(c); };
    std::size_t lo = 0;
    std::size_t hi = text.size();
    while (lo < hi && is_trim(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && is_trim(static_cast<unsigned char>(text[hi - 1]))) --hi;
    std::string token;
    token.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i)
        token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
    if (token == "yes") return Classification::yes;
    if (token == "no") return Classification::no;
    // leading token: first run of alphanumeric characters
    std::string head;
    for (char c : token) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            head.push_back(c);
        else
            break;
    }
    if (head == "yes") return Classification::yes;
    if (head == "no") return Classification::no;
    return Classification::unclassifiable;
}

}  // namespace respdiff
