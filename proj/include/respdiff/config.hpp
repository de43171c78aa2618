#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "respdiff/http_source.hpp"
#include "respdiff/optimizer.hpp"
#include "respdiff/source.hpp"
#include "respdiff/sweep.hpp"

namespace respdiff {

using json = nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InvalidArgument("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

inline RangeMode range_mode_from_string(const std::string& s) {
    if (s == "raw") return RangeMode::raw;
    if (s == "remark1") return RangeMode::remark1;
    if (s == "symmetric") return RangeMode::symmetric;
    throw InvalidArgument("unknown range_mode: " + s);
}

inline QuerySampling query_sampling_from_string(const std::string& s) {
    if (s == "with_replacement") return QuerySampling::with_replacement;
    if (s == "without_replacement") return QuerySampling::without_replacement;
    throw InvalidArgument("unknown query_sampling: " + s);
}

inline EpsilonMaxPolicy epsilon_max_policy_from_string(const std::string& s) {
    if (s == "width_cap") return EpsilonMaxPolicy::width_cap;
    if (s == "paper_min3") return EpsilonMaxPolicy::paper_min3;
    throw InvalidArgument("unknown epsilon_max_policy: " + s);
}

inline BudgetPolicy budget_policy_from_string(const std::string& s) {
    if (s == "charge_prime") return BudgetPolicy::charge_prime;
    if (s == "paper_literal") return BudgetPolicy::paper_literal;
    throw InvalidArgument("unknown budget_policy: " + s);
}

//! Build a response source from its JSON description:
//!   {"kind": "synthetic"|"rigged"|"pool"|"http", "budget": N, ...}
inline std::unique_ptr<ResponseSource> make_source(const json& config) {
    if (!config.contains("kind")) throw InvalidArgument("source config requires a kind");
    const std::string kind = config.at("kind").get<std::string>();
    const std::int64_t budget = config.value("budget", std::int64_t{0});
    if (budget < 1) throw InvalidArgument("source config requires a positive budget");

    if (kind == "synthetic") {
        std::map<std::string, double> table;
        if (config.contains("table"))
            for (const auto& [q, p] : config.at("table").items())
                table[q] = p.get<double>();
        if (config.contains("uniform_range")) {
            const auto& range = config.at("uniform_range");
            if (!range.is_array() || range.size() != 2)
                throw InvalidArgument("uniform_range must be [a, b]");
            auto source = std::make_unique<SyntheticSource>(
                NullRange(range.at(0).get<double>(), range.at(1).get<double>()),
                config.value("seed", std::uint64_t{0}), budget);
            return source;
        }
        if (table.empty())
            throw InvalidArgument("synthetic source requires a table or a uniform_range");
        return std::make_unique<SyntheticSource>(std::move(table), budget);
    }
    if (kind == "rigged") {
        std::map<std::string, double> table;
        for (const auto& [q, p] : config.at("table").items()) table[q] = p.get<double>();
        return std::make_unique<RiggedSource>(std::move(table), budget);
    }
    if (kind == "pool") {
        std::map<std::string, PoolSource::Pool> pools;
        for (const auto& [q, pool] : config.at("pools").items())
            pools[q] = PoolSource::Pool{pool.at("successes").get<std::int64_t>(),
                                        pool.at("total").get<std::int64_t>()};
        return std::make_unique<PoolSource>(std::move(pools), budget,
                                            config.value("with_replacement", false));
    }
    if (kind == "http") {
        HttpSourceConfig http;
        http.base_url = config.at("base_url").get<std::string>();
        http.model = config.value("model", std::string{});
        http.path = config.value("path", http.path);
        http.system_prompt = config.value("system_prompt", http.system_prompt);
        http.temperature = config.value("temperature", http.temperature);
        http.max_tokens = config.value("max_tokens", http.max_tokens);
        http.max_retries = config.value("max_retries", http.max_retries);
        http.requests_per_second = config.value("requests_per_second", http.requests_per_second);
        http.max_concurrency = config.value("max_concurrency", http.max_concurrency);
        http.token_env = config.value("token_env", http.token_env);
        http.timeout_seconds = config.value("timeout_seconds", http.timeout_seconds);
        return std::make_unique<LlmHttpSource>(std::move(http), budget);
    }
    throw InvalidArgument("unknown source kind: " + kind);
}

//! Merge the optimizer-facing fields of a run config into an OptimizerConfig.
inline OptimizerConfig optimizer_config_from_json(const json& j) {
    OptimizerConfig config;
    config.alpha = j.value("alpha", config.alpha);
    config.nu = j.value("nu", config.nu);
    config.m_tilde = j.value("m_tilde", config.m_tilde);
    config.r_tilde = j.value("r_tilde", config.r_tilde);
    config.eta_epsilon = j.value("eta_epsilon", config.eta_epsilon);
    if (j.contains("epsilon_max_policy"))
        config.epsilon_max_policy =
            epsilon_max_policy_from_string(j.at("epsilon_max_policy").get<std::string>());
    if (j.contains("range_mode"))
        config.range_mode = range_mode_from_string(j.at("range_mode").get<std::string>());
    if (j.contains("budget_policy"))
        config.budget_policy = budget_policy_from_string(j.at("budget_policy").get<std::string>());
    if (j.contains("query_sampling"))
        config.query_sampling =
            query_sampling_from_string(j.at("query_sampling").get<std::string>());
    if (j.contains("known_range")) {
        const auto& range = j.at("known_range");
        if (!range.is_array() || range.size() != 2)
            throw InvalidArgument("known_range must be [a, b]");
        config.known_range = NullRange(range.at(0).get<double>(), range.at(1).get<double>());
    }
    return config;
}

inline json to_json(const LedgerReport& report) {
    json per_query = json::object();
    for (const auto& [q, n] : report.per_query) per_query[q] = n;
    return json{{"initial", report.initial},
                {"spent", report.spent},
                {"remaining", report.remaining},
                {"classification_failures", report.classification_failures},
                {"per_query", per_query}};
}

inline json to_json(const TestDesign& design) {
    return json{{"epsilon", design.epsilon},
                {"m", design.m},
                {"r", design.r},
                {"alpha", design.alpha},
                {"nu", design.nu}};
}

inline json to_json(const NullRange& range) {
    return json{range.a().value(), range.b().value()};
}

inline json to_json(const GridEvaluation& eval) {
    json j{{"epsilon", eval.epsilon}, {"m", eval.m},         {"r", eval.r},
           {"valid", eval.valid},     {"h_hat", eval.h_hat}, {"note", eval.note}};
    if (std::isnan(eval.h_hat)) j["h_hat"] = nullptr;
    return j;
}

inline json to_json(const OptimalDesign& design) {
    json grid = json::array();
    for (const auto& eval : design.grid_evaluations) grid.push_back(to_json(eval));
    return json{{"design", to_json(design.design)},
                {"h_star", design.h_star},
                {"range_used", to_json(design.range_used)},
                {"budget_policy", to_string(design.budget_policy)},
                {"grid", grid}};
}

}  // namespace respdiff
