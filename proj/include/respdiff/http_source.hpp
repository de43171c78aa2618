#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "respdiff/core.hpp"
#include "respdiff/source.hpp"

namespace respdiff {

// Token-bucket pacing for outbound requests. rate <= 0 disables pacing.
class TokenBucket {
public:
    TokenBucket(double rate_per_second, double burst)
        : rate_(rate_per_second), capacity_(burst), tokens_(burst),
          last_(std::chrono::steady_clock::now()) {}

    void acquire() {
        if (rate_ <= 0.0) return;
        std::unique_lock lock(mutex_);
        refill();
        while (tokens_ < 1.0) {
            const double deficit = 1.0 - tokens_;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(deficit / rate_));
            lock.lock();
            refill();
        }
        tokens_ -= 1.0;
    }

private:
    void refill() {
        const auto now = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
    }

    double rate_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

struct HttpSourceConfig {
    std::string base_url;  // e.g. http://127.0.0.1:8080
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string system_prompt = "You are a helpful assistant. You may only respond with 'yes' or 'no'.";
    double temperature = 1.9;
    int max_tokens = 4;
    int max_retries = 3;               // extra attempts per response after the first
    double requests_per_second = 0.0;  // 0 disables rate limiting
    int max_concurrency = 4;
    std::string token_env = "RESPDIFF_API_TOKEN";  // bearer token, if set
    int timeout_seconds = 60;
};

//! Live binary-response source over an OpenAI-compatible chat-completions
//! endpoint. One completion per request so the ledger stays exact: a budget
//! unit is billed only for a successfully classified completion, and
//! unclassifiable completions are retried up to the cap, never coerced.
class LlmHttpSource : public ResponseSource {
public:
    LlmHttpSource(HttpSourceConfig config, std::int64_t budget)
        : config_(std::move(config)), ledger_(budget),
          bucket_(config_.requests_per_second, std::max(1.0, config_.requests_per_second)),
          semaphore_(config_.max_concurrency < 1 ? 1 : config_.max_concurrency) {
        if (config_.base_url.empty()) throw InvalidArgument("http source requires a base_url");
        if (config_.max_retries < 0) throw InvalidArgument("http source requires max_retries >= 0");
    }

    ResponseBatch draw(const std::string& query, std::int64_t n, Rng& /*rng*/) override {
        if (n < 1) throw InvalidArgument("draw requires n >= 1");
        if (remaining_budget() < n)
            throw BudgetExhausted("http source budget cannot cover " + std::to_string(n) + " draws");
        std::int64_t successes = 0;
        for (std::int64_t k = 0; k < n; ++k) {
            const Classification c = complete_one(query);
            ledger_.charge(query, 1);
            if (c == Classification::yes) ++successes;
        }
        return ResponseBatch(query, successes, n);
    }

    std::int64_t remaining_budget() const override { return ledger_.remaining(); }
    LedgerReport ledger_report() const override { return ledger_.report(); }

private:
    // Counting semaphore over a mutex; caps in-flight requests.
    class Gate {
    public:
        explicit Gate(int slots) : slots_(slots) {}
        void enter() {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [&] { return slots_ > 0; });
            --slots_;
        }
        void leave() {
            std::scoped_lock lock(mutex_);
            ++slots_;
            cv_.notify_one();
        }

    private:
        std::mutex mutex_;
        std::condition_variable cv_;
        int slots_;
    };

    struct GateGuard {
        Gate& gate;
        explicit GateGuard(Gate& g) : gate(g) { gate.enter(); }
        ~GateGuard() { gate.leave(); }
    };

    Classification complete_one(const std::string& query) {
        std::string transport_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            bucket_.acquire();
            GateGuard guard(semaphore_);
            httplib::Client client(config_.base_url);
            client.set_connection_timeout(config_.timeout_seconds, 0);
            client.set_read_timeout(config_.timeout_seconds, 0);
            httplib::Headers headers;
            if (const char* token = std::getenv(config_.token_env.c_str()); token && *token)
                headers.emplace("Authorization", std::string("Bearer ") + token);

            nlohmann::json body{
                {"model", config_.model},
                {"messages",
                 {{{"role", "system"}, {"content", config_.system_prompt}},
                  {{"role", "user"}, {"content", query}}}},
                {"temperature", config_.temperature},
                {"max_tokens", config_.max_tokens},
            };
            auto res = client.Post(config_.path, headers, body.dump(), "application/json");
            if (!res || res->status != 200) {
                transport_error = res ? "http status " + std::to_string(res->status)
                                      : "transport failure: " + httplib::to_string(res.error());
                continue;
            }
            std::string content;
            try {
                const nlohmann::json reply = nlohmann::json::parse(res->body);
                content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                transport_error = std::string("malformed completion payload: ") + e.what();
                continue;
            }
            const Classification c = classify_response(content);
            if (c != Classification::unclassifiable) return c;
            ledger_.note_classification_failure();
        }
        if (!transport_error.empty())
            throw SourceError("http source gave up after retries: " + transport_error);
        throw SourceError("http source gave up: completions stayed unclassifiable after retries");
    }

    HttpSourceConfig config_;
    BudgetLedger ledger_;
    TokenBucket bucket_;
    Gate semaphore_;
};

}  // namespace respdiff
