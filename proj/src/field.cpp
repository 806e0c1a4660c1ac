#include "streamhist/field.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <mutex>

#include "streamhist/rng.hpp"

namespace streamhist {

u64 mulmod64(u64 a, u64 b, u64 m) {
    return static_cast<u64>((static_cast<u128>(a) * b) % m);
}

u64 powmod64(u64 a, u64 e, u64 m) {
    if (m == 1) return 0;
    u64 r = 1;
    a %= m;
    while (e > 0) {
        if (e & 1) r = mulmod64(r, a, m);
        a = mulmod64(a, a, m);
        e >>= 1;
    }
    return r;
}

namespace {

bool miller_rabin_u64(u64 n, u64 a) {
    if (a % n == 0) return true;
    u64 d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    u64 x = powmod64(a % n, d, n);
    if (x == 1 || x == n - 1) return true;
    for (int i = 1; i < s; ++i) {
        x = mulmod64(x, x, n);
        if (x == n - 1) return true;
    }
    return false;
}

constexpr std::array<u64, 12> kU64Witnesses = {2,  3,  5,  7,  11, 13,
                                               17, 19, 23, 29, 31, 37};

const std::vector<u32>& small_primes() {
    // primes below 2000, sieved once; used to filter candidates before MR
    static const std::vector<u32> primes = [] {
        std::vector<u32> out;
        std::vector<bool> comp(2000, false);
        for (u32 i = 2; i < 2000; ++i) {
            if (comp[i]) continue;
            out.push_back(i);
            for (u32 j = 2 * i; j < 2000; j += i) comp[j] = true;
        }
        return out;
    }();
    return primes;
}

Wide powmod_wide(Wide a, Wide e, const Wide& m) {
    if (m == 1) return 0;
    Wide512 r = 1;
    Wide512 base = Wide512(a % m);
    Wide512 mod(m);
    while (e > 0) {
        if (boost::multiprecision::bit_test(e, 0)) r = (r * base) % mod;
        base = (base * base) % mod;
        e >>= 1;
    }
    return Wide(r);
}

bool miller_rabin_wide(const Wide& n, const Wide& a) {
    if (a % n == 0) return true;
    Wide d = n - 1;
    int s = 0;
    while (!boost::multiprecision::bit_test(d, 0)) {
        d >>= 1;
        ++s;
    }
    Wide x = powmod_wide(a % n, d, n);
    if (x == 1 || x == n - 1) return true;
    for (int i = 1; i < s; ++i) {
        x = Wide((Wide512(x) * Wide512(x)) % Wide512(n));
        if (x == n - 1) return true;
    }
    return false;
}

}  // namespace

bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL,
                  29ULL, 31ULL, 37ULL}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    for (u64 a : kU64Witnesses) {
        if (!miller_rabin_u64(n, a)) return false;
    }
    return true;
}

bool is_prime_wide(const Wide& n, int rounds, u64 witness_seed) {
    if (n <= std::numeric_limits<u64>::max()) {
        return is_prime_u64(static_cast<u64>(n));
    }
    for (u32 p : small_primes()) {
        if (n % p == 0) return false;
    }
    u64 s = witness_seed;
    for (int i = 0; i < rounds; ++i) {
        Wide a = 0;
        for (int limb = 0; limb < 4; ++limb) {
            a <<= 64;
            a |= splitmix64(s);
        }
        a = 2 + a % (n - 3);
        if (!miller_rabin_wide(n, a)) return false;
    }
    return true;
}

unsigned bit_width_wide(const Wide& v) {
    if (v == 0) return 0;
    return boost::multiprecision::msb(v) + 1;
}

u64 FieldModulus::q64() const {
    if (!fits_u64()) throw InvalidParam("FieldModulus wider than 64 bits");
    return static_cast<u64>(q);
}

FieldModulus FieldModulus::from_u64(u64 q) {
    FieldModulus m;
    m.q = q;
    m.width = q == 0 ? 0 : 64 - static_cast<unsigned>(__builtin_clzll(q));
    return m;
}

FieldModulus FieldModulus::from_wide(const Wide& q) {
    FieldModulus m;
    m.q = q;
    m.width = bit_width_wide(q);
    return m;
}

FieldModulus find_prime_in(const Wide& lo, const Wide& hi) {
    if (lo > hi) throw InvalidParam("find_prime_in: lo > hi");
    if (bit_width_wide(hi) > kModulusWidthCap)
        throw InvalidParam("find_prime_in: hi exceeds the width cap");
    if (lo <= 2 && hi >= 2) return FieldModulus::from_wide(Wide(2));
    Wide p = lo < 3 ? Wide(3) : lo;
    if (!boost::multiprecision::bit_test(p, 0)) ++p;
    while (p <= hi) {
        if (is_prime_wide(p)) return FieldModulus::from_wide(p);
        p += 2;
    }
    throw NoPrimeInRange("no prime in the requested interval");
}

u64 find_prime_in_u64(u64 lo, u64 hi) {
    if (lo > hi) throw InvalidParam("find_prime_in: lo > hi");
    if (lo <= 2 && hi >= 2) return 2;
    u64 p = std::max<u64>(lo, 3);
    if ((p & 1) == 0) ++p;
    while (p <= hi) {
        if (is_prime_u64(p)) return p;
        if (p > hi - 2) break;
        p += 2;
    }
    throw NoPrimeInRange("no prime in the requested interval");
}

u64 smallest_prime_at_least(u64 lo) {
    static std::mutex mu;
    static std::map<u64, u64> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(lo);
        if (it != cache.end()) return it->second;
    }
    u64 p = lo < 2 ? 2 : lo;
    while (!is_prime_u64(p)) ++p;
    {
        std::lock_guard<std::mutex> lock(mu);
        cache.emplace(lo, p);
    }
    return p;
}

Wide pow3(unsigned n) {
    Wide r = 1;
    for (unsigned i = 0; i < n; ++i) {
        if (bit_width_wide(r) + 2 > kModulusWidthCap)
            throw InvalidParam("pow3: exceeds the width cap");
        r *= 3;
    }
    return r;
}

Wide addmod_wide(const Wide& a, const Wide& b, const Wide& q) {
    Wide512 s = Wide512(a) + Wide512(b);
    return Wide(s % Wide512(q));
}

Wide submod_wide(const Wide& a, const Wide& b, const Wide& q) {
    Wide512 s = Wide512(a) + Wide512(q) - Wide512(b % q);
    return Wide(s % Wide512(q));
}

Wide mulmod_wide(const Wide& a, const Wide& b, const Wide& q) {
    return Wide((Wide512(a) * Wide512(b)) % Wide512(q));
}

KWiseHash KWiseHash::make(unsigned k, u64 universe_size, u64 range, u64 seed) {
    if (k < 1) throw InvalidParam("KWiseHash: k must be >= 1");
    if (range < 1) throw InvalidParam("KWiseHash: zero range");
    if (universe_size < 1) throw InvalidParam("KWiseHash: zero universe");
    u64 p = smallest_prime_at_least(std::max({universe_size, range, u64(2)}));
    Rng rng(seed);
    std::vector<u64> coeffs(k);
    for (auto& c : coeffs) c = rng.uniform_below(p);
    return from_coeffs(std::move(coeffs), p, universe_size, range);
}

KWiseHash KWiseHash::from_coeffs(std::vector<u64> coeffs, u64 field_prime,
                                 u64 universe_size, u64 range) {
    if (coeffs.empty()) throw InvalidParam("KWiseHash: no coefficients");
    KWiseHash h;
    h.k = static_cast<unsigned>(coeffs.size());
    h.field_prime = field_prime;
    h.range = range;
    h.universe_size = universe_size;
    h.coeffs = std::move(coeffs);
    return h;
}

u64 KWiseHash::eval(u64 x) const {
    if (x >= universe_size) throw OutOfUniverse("KWiseHash: element outside universe");
    u64 acc = coeffs[k - 1];
    for (unsigned i = k - 1; i-- > 0;) {
        acc = mulmod64(acc, x, field_prime);
        acc += coeffs[i];
        if (acc >= field_prime) acc -= field_prime;
    }
    return acc % range;
}

double KWiseHash::description_bits() const {
    double per = std::ceil(std::log2(static_cast<double>(field_prime)));
    return static_cast<double>(k) * per;
}

u64 Prf64::eval(u64 x) const {
    u64 s = seed ^ (x * 0x9e3779b97f4a7c15ULL);
    u64 r = splitmix64(s);
    // multiply-shift reduction; bias <= range / 2^64
    return static_cast<u64>((static_cast<u128>(r) * range) >> 64);
}

Wide WidePrf::eval(u64 x) const {
    const Wide& q = modulus.q;
    // rejection sampling below the largest multiple of q that fits 256 bits
    Wide512 limit = ((Wide512(1) << 256) / Wide512(q)) * Wide512(q);
    u64 s = seed ^ (x * 0xbf58476d1ce4e5b9ULL);
    for (;;) {
        Wide r = 0;
        for (int limb = 0; limb < 4; ++limb) {
            r <<= 64;
            r |= splitmix64(s);
        }
        if (Wide512(r) < limit) return r % q;
    }
}

}  // namespace streamhist
