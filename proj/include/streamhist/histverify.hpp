#pragma once

#include <optional>
#include <vector>

#include "streamhist/field.hpp"

namespace streamhist {

struct UnknownFingerprint : Error {
    using Error::Error;
};

struct FpEntry {
    u64 fingerprint = 0;
    u64 count = 0;
    bool seen = false;  // "new / not new" flag used during a verification pass
};

// Per-bucket list of (fingerprint, counter) pairs plus the verification flag.
// Buckets hold at most ~6 log n distinct fingerprints, so linear scans win
// over heavier containers.
class FingerprintHistogram {
public:
    explicit FingerprintHistogram(unsigned fingerprint_width_bits = 0)
        : width_bits_(fingerprint_width_bits) {}

    unsigned fingerprint_width_bits() const { return width_bits_; }
    const std::vector<FpEntry>& entries() const { return entries_; }
    size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    u64 total() const {
        u64 t = 0;
        for (const auto& e : entries_) t += e.count;
        return t;
    }

    // pass-1 build step: create the entry or bump its counter
    void add_observation(u64 fp) {
        if (FpEntry* e = find(fp)) {
            ++e->count;
        } else {
            entries_.push_back({fp, 1, false});
        }
    }

    void add_entry(u64 fp, u64 count) { entries_.push_back({fp, count, false}); }

    FpEntry* find(u64 fp) {
        for (auto& e : entries_) {
            if (e.fingerprint == fp) return &e;
        }
        return nullptr;
    }
    const FpEntry* find(u64 fp) const {
        return const_cast<FingerprintHistogram*>(this)->find(fp);
    }

    u64 count_of(u64 fp) const {
        const FpEntry* e = find(fp);
        return e ? e->count : 0;
    }

    void subtract(u64 fp, u64 amount) {
        for (size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].fingerprint != fp) continue;
            if (entries_[i].count <= amount) {
                entries_.erase(entries_.begin() + static_cast<long>(i));
            } else {
                entries_[i].count -= amount;
            }
            return;
        }
    }

    // smallest fingerprint value not present in this bucket, if any remains
    std::optional<u64> smallest_unused_fingerprint(u64 fp_range) const {
        for (u64 f = 0; f < fp_range; ++f) {
            if (!find(f)) return f;
        }
        return std::nullopt;
    }

    void reset_flags() {
        for (auto& e : entries_) e.seen = false;
    }

    void clear() { entries_.clear(); }

private:
    unsigned width_bits_;
    std::vector<FpEntry> entries_;
};

struct VerifyAccumulators {
    u64 acc_true = 0;
    u64 acc_hist = 0;
    u64 q = 0;  // field modulus
};

// One stream step of the polynomial identity check: accTrue always gains
// h(x); accHist gains h(x) * count(fp) only on the first arrival of fp.
inline void verify_step(VerifyAccumulators& acc, u64 x, u64 fp,
                        FingerprintHistogram& hist, const KWiseHash& h) {
    FpEntry* e = hist.find(fp);
    if (!e) throw UnknownFingerprint("verify_step: fingerprint not in histogram");
    u64 hx = h.eval(x) % acc.q;
    acc.acc_true += hx;
    if (acc.acc_true >= acc.q) acc.acc_true -= acc.q;
    if (!e->seen) {
        e->seen = true;
        acc.acc_hist = (acc.acc_hist + mulmod64(hx, e->count % acc.q, acc.q)) % acc.q;
    }
}

inline bool verify_decide(const VerifyAccumulators& acc) {
    return acc.acc_true == acc.acc_hist;
}

}  // namespace streamhist
