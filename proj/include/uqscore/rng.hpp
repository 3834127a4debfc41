#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "uqscore/errors.hpp"

namespace uqscore {

// splitmix64 step; also used as the finalizer when deriving child seeds.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Child seed for a named stream. Consumers never share a raw seed: each one
// derives its own stream from (master seed, purpose label), so adding or
// reordering consumers cannot perturb the others.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ seed;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return splitmix64_next(h);
}

// Indexed variant for per-member / per-pass streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t h = seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
    return splitmix64_next(h);
}

// Deterministic generator with a fully specified output sequence. All
// sampling primitives are implemented here rather than with std::*
// distributions so that identical seeds give identical bytes on every
// platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64_next(state_); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller (cosine branch, no cached value).
    double normal() {
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    bool bernoulli(double p) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw InvalidParameterError("bernoulli probability must lie in [0,1]");
        }
        return uniform() < p;
    }

    // Unbiased integer in [0, bound).
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) {
            throw InvalidParameterError("below() needs a positive bound");
        }
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t draw;
        do {
            draw = next_u64();
        } while (draw >= limit);
        return draw % bound;
    }

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

    Rng split(std::string_view label) const { return Rng(derive_seed(state_, label)); }

private:
    std::uint64_t state_;
};

} // namespace uqscore
