#pragma once

#include <map>
#include <string>
#include <vector>

#include "streamhist/common.hpp"

namespace streamhist {

struct OutOfRange : Error {
    using Error::Error;
};

// log2 C(n+m-1, n): bits needed to encode a multiset of n values over [m]
double ms_info_bits(u64 n, u64 m);

struct BitBudget {
    double content_bits = 0.0;
    double overhead_bits = 0.0;
    std::string label;

    double total() const { return content_bits + overhead_bits; }
};

// Exact multiset over [0, range). Stored as an open-addressing counter table
// (keys shifted by one so zero means empty); the reported bit budget is the
// information-theoretic bound, not RAM residency.
class CompactMultiset {
public:
    explicit CompactMultiset(u64 range, u64 expected_distinct = 8)
        : range_(range) {
        u64 cap = 16;
        while (cap < 2 * expected_distinct) cap <<= 1;
        keys_.assign(cap, 0);
        vals_.assign(cap, 0);
        mask_ = cap - 1;
    }

    u64 range() const { return range_; }
    u64 total() const { return total_; }
    u64 distinct() const { return used_; }

    void insert(u64 v) {
        if (v >= range_) throw OutOfRange("CompactMultiset: value outside range");
        if (total_ >= (u64(1) << 40)) throw Error("CompactMultiset: stream cap 2^40");
        if ((used_ + 1) * 10 > keys_.size() * 7) grow();
        u64 slot = probe(v);
        if (keys_[slot] == 0) {
            keys_[slot] = v + 1;
            ++used_;
        }
        ++vals_[slot];
        ++total_;
    }

    u64 count_of(u64 v) const {
        if (v >= range_) return 0;
        u64 slot = probe(v);
        return keys_[slot] == 0 ? 0 : vals_[slot];
    }

    // sum of squared counts over the stored values
    u64 f2() const {
        u128 acc = 0;
        for (size_t i = 0; i < keys_.size(); ++i) {
            if (keys_[i] != 0) acc += static_cast<u128>(vals_[i]) * vals_[i];
        }
        if (acc > static_cast<u128>(~0ULL))
            throw Error("CompactMultiset: f2 overflows 64 bits");
        return static_cast<u64>(acc);
    }

    template <class F>
    void for_each(F&& fn) const {
        for (size_t i = 0; i < keys_.size(); ++i) {
            if (keys_[i] != 0) fn(keys_[i] - 1, vals_[i]);
        }
    }

    std::map<u64, u64> to_map() const {
        std::map<u64, u64> out;
        for_each([&](u64 v, u64 c) { out[v] = c; });
        return out;
    }

    BitBudget bit_budget(std::string label) const;

private:
    u64 probe(u64 v) const {
        u64 h = v * 0x9e3779b97f4a7c15ULL;
        u64 slot = (h ^ (h >> 32)) & mask_;
        while (keys_[slot] != 0 && keys_[slot] != v + 1) slot = (slot + 1) & mask_;
        return slot;
    }

    void grow() {
        std::vector<u64> old_keys = std::move(keys_);
        std::vector<u64> old_vals = std::move(vals_);
        u64 cap = (mask_ + 1) * 2;
        keys_.assign(cap, 0);
        vals_.assign(cap, 0);
        mask_ = cap - 1;
        for (size_t i = 0; i < old_keys.size(); ++i) {
            if (old_keys[i] == 0) continue;
            u64 slot = probe(old_keys[i] - 1);
            keys_[slot] = old_keys[i];
            vals_[slot] = old_vals[i];
        }
    }

    u64 range_;
    u64 mask_ = 0;
    u64 total_ = 0;
    u64 used_ = 0;
    std::vector<u64> keys_;
    std::vector<u64> vals_;
};

}  // namespace streamhist
