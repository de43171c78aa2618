#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include "respdiff/core.hpp"

namespace respdiff {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Fold a path of indices into a master seed. Distinct paths give independent
// streams, so work items seeded by (master, own index) produce the same
// output no matter how they are scheduled across threads.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master);
    for (std::uint64_t x : path) s = splitmix64(s ^ splitmix64(x));
    return s;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    return Rng(derive_seed(master, path));
}

enum class BinomialSampling {
    direct,    // one binomial variate per batch
    per_draw,  // r individual Bernoulli draws (trajectory-level simulation)
};

inline std::int64_t sample_binomial(Rng& rng, std::int64_t n, double p,
                                    BinomialSampling mode = BinomialSampling::direct) {
    if (n < 0) throw InvalidArgument("sample_binomial requires n >= 0");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("sample_binomial requires p in [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (mode == BinomialSampling::per_draw) {
        std::bernoulli_distribution bern(p);
        std::int64_t s = 0;
        for (std::int64_t k = 0; k < n; ++k)
            if (bern(rng)) ++s;
        return s;
    }
    std::binomial_distribution<std::int64_t> bin(n, p);
    return bin(rng);
}

inline double sample_uniform(Rng& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    return u(rng);
}

}  // namespace respdiff
