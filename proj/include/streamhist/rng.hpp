#pragma once

#include <random>
#include <string_view>

#include "streamhist/common.hpp"

namespace streamhist {

// splitmix64 step: the base mixer every derived seed flows through
inline u64 splitmix64(u64& state) {
    u64 z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline u64 mix64(u64 x) {
    u64 s = x;
    return splitmix64(s);
}

inline u64 fnv1a64(std::string_view s) {
    u64 h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<u8>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// All randomness flows root -> module tag -> trial index; no global RNG state.
inline u64 derive_seed(u64 root, std::string_view tag, u64 index = 0) {
    u64 s = root ^ fnv1a64(tag);
    u64 a = splitmix64(s);
    s = a ^ (index * 0x9e3779b97f4a7c15ULL + 0x165667b19e3779f9ULL);
    return splitmix64(s);
}

// Thin deterministic wrapper: mt19937_64 engine with unbiased integer draws
// (Lemire-style rejection) so outputs do not depend on libstdc++ distribution
// internals.
class Rng {
public:
    explicit Rng(u64 seed) : eng_(seed) {}

    u64 next_u64() { return eng_(); }

    // uniform in [0, n), n >= 1
    u64 uniform_below(u64 n) {
        if (n == 0) throw InvalidParam("uniform_below: n must be positive");
        u128 m = static_cast<u128>(eng_()) * n;
        u64 lo = static_cast<u64>(m);
        if (lo < n) {
            u64 t = (0 - n) % n;
            while (lo < t) {
                m = static_cast<u128>(eng_()) * n;
                lo = static_cast<u64>(m);
            }
        }
        return static_cast<u64>(m >> 64);
    }

    // uniform in [lo, hi] inclusive
    u64 uniform_in(u64 lo, u64 hi) { return lo + uniform_below(hi - lo + 1); }

    // uniform double in [0, 1)
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 eng_;
};

}  // namespace streamhist
