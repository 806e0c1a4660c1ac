#pragma once

#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "streamhist/common.hpp"

namespace streamhist {

// Fixed-width big integers for moduli above 64 bits. 256 bits is the modulus
// width cap; products go through 512-bit intermediates.
using Wide = boost::multiprecision::uint256_t;
using Wide512 = boost::multiprecision::uint512_t;

inline constexpr unsigned kModulusWidthCap = 256;

// Witnesses for the probabilistic primality test above 2^64 are derived from
// this fixed seed so that prime search stays a pure function; the seed is
// echoed into run reports for reproducibility.
inline constexpr u64 kWideWitnessSeed = 0x5eedbead0f1e2d3cULL;
inline constexpr int kWideWitnessRounds = 64;

struct NoPrimeInRange : Error {
    using Error::Error;
};
struct OutOfUniverse : Error {
    using Error::Error;
};

u64 mulmod64(u64 a, u64 b, u64 m);
u64 powmod64(u64 a, u64 e, u64 m);

// deterministic Miller-Rabin, valid for all 64-bit inputs
bool is_prime_u64(u64 n);
// fixed-round Miller-Rabin with seeded witnesses for wide inputs
bool is_prime_wide(const Wide& n, int rounds = kWideWitnessRounds,
                   u64 witness_seed = kWideWitnessSeed);

unsigned bit_width_wide(const Wide& v);

struct FieldModulus {
    Wide q = 0;
    unsigned width = 0;  // bit length of q

    bool fits_u64() const { return width <= 64; }
    u64 q64() const;

    static FieldModulus from_u64(u64 q);
    static FieldModulus from_wide(const Wide& q);
};

// smallest prime p with lo <= p <= hi; NoPrimeInRange if the interval has none
FieldModulus find_prime_in(const Wide& lo, const Wide& hi);
u64 find_prime_in_u64(u64 lo, u64 hi);

// memoized smallest prime >= lo (used on hash-construction hot paths)
u64 smallest_prime_at_least(u64 lo);

Wide pow3(unsigned n);  // 3^n, InvalidParam beyond the width cap

Wide addmod_wide(const Wide& a, const Wide& b, const Wide& q);
Wide submod_wide(const Wide& a, const Wide& b, const Wide& q);
Wide mulmod_wide(const Wide& a, const Wide& b, const Wide& q);

// k-wise independent hash: degree-(k-1) polynomial over F_p with
// p = smallest prime >= max(universe, range), reduced to [0, range) by plain
// modulo. The modulo bias is <= range/p; uses that need exact uniformity set
// range = p.
struct KWiseHash {
    unsigned k = 0;
    u64 field_prime = 0;
    u64 range = 0;
    u64 universe_size = 0;
    std::vector<u64> coeffs;  // c0..c_{k-1}

    static KWiseHash make(unsigned k, u64 universe_size, u64 range, u64 seed);
    static KWiseHash from_coeffs(std::vector<u64> coeffs, u64 field_prime,
                                 u64 universe_size, u64 range);

    u64 eval(u64 x) const;
    double description_bits() const;
};

// Counter-mode PRF standing in for a fully random hash (Newman-style
// public-to-private randomness reduction: the 64-bit seed plays the role of
// the O(log log N)-bit index).
struct Prf64 {
    u64 seed = 0;
    u64 range = 0;

    u64 eval(u64 x) const;
};

// same stand-in, into a wide prime field with rejection sampling (exact
// uniformity over [0, q))
struct WidePrf {
    u64 seed = 0;
    FieldModulus modulus;

    Wide eval(u64 x) const;
};

}  // namespace streamhist
