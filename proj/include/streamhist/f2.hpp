#pragma once

#include <span>

#include "streamhist/field.hpp"
#include "streamhist/multiset.hpp"

namespace streamhist {

struct DegenerateM : Error {
    using Error::Error;
};

struct F2Config {
    double epsilon = 0.1;
    double constant_c = 201.0;  // targets the 99% guarantee; experiments may lower it
    u64 seed = 0;
};

// m = ceil(constant_c / epsilon^2)
u64 f2_config_m(const F2Config& cfg);

// exact second frequency moment of a stream
u64 exact_f2(std::span<const u64> stream);

// Hashed-multiset F2 estimator: hash into [m] with a 4-wise independent
// function, keep the exact multiset of hash values, and subtract the expected
// number of hash collisions at the end.
class F2Sketch {
public:
    static F2Sketch make(const F2Config& cfg, u64 universe_size);

    void feed(u64 x) {
        table_.insert(hash_.eval(x));
        ++n_seen_;
    }

    // F' = m/(m-1) * (F - n^2/m), unclamped (may be non-integer and below n)
    double estimate() const;
    // convenience wrapper: true F2 always lies in [n, n^2]
    double estimate_clamped() const;

    u64 m() const { return m_; }
    u64 n_seen() const { return n_seen_; }
    const KWiseHash& hash() const { return hash_; }
    const CompactMultiset& table() const { return table_; }

private:
    F2Sketch(u64 m, KWiseHash hash)
        : m_(m), hash_(std::move(hash)), table_(m, 1024) {}

    u64 m_;
    KWiseHash hash_;
    CompactMultiset table_;
    u64 n_seen_ = 0;
};

}  // namespace streamhist
