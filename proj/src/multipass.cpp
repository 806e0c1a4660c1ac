#include "streamhist/multipass.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "streamhist/rng.hpp"

namespace streamhist {

namespace {

u64 ceil_div_log(u64 n) {
    return std::max<u64>(1, static_cast<u64>(std::ceil(
                                static_cast<double>(n) / clamped_log2(static_cast<double>(n)))));
}

}  // namespace

BucketingPlan BucketingPlan::make(u64 n, u64 universe, u64 seed,
                                  unsigned fp_width_override, HashOverrides overrides) {
    BucketingPlan plan;
    plan.n = std::max<u64>(n, 1);
    plan.universe = std::max<u64>(universe, 1);
    plan.num_buckets = ceil_div_log(plan.n);
    double lg = clamped_log2(static_cast<double>(plan.n));
    unsigned kb = static_cast<unsigned>(std::ceil(6.0 * lg));
    plan.fp_width = fp_width_override
                        ? fp_width_override
                        : static_cast<unsigned>(
                              std::max(1.0, std::ceil(10.0 * clamped_log2(lg))));
    plan.fp_width = std::min(plan.fp_width, 62u);
    plan.fp_range = u64(1) << plan.fp_width;
    plan.b = KWiseHash::make(kb, plan.universe, plan.num_buckets,
                             derive_seed(seed, "plan.b"));
    plan.g.reserve(plan.num_buckets);
    for (u64 j = 0; j < plan.num_buckets; ++j) {
        plan.g.push_back(KWiseHash::make(2, plan.universe, plan.fp_range,
                                         derive_seed(seed, "plan.g", j)));
    }
    plan.overrides = std::move(overrides);
    return plan;
}

double BucketingPlan::hash_description_bits() const {
    double bits = b.description_bits();
    for (const auto& gj : g) bits += gj.description_bits();
    return bits;
}

void MemoryLedger::add_fingerprints(unsigned width, u64 entries) {
    if (entries == 0) return;
    for (auto& c : fingerprint_classes) {
        if (c.width_bits == width) {
            c.entries += entries;
            return;
        }
    }
    fingerprint_classes.push_back({width, entries});
}

double MemoryLedger::fingerprint_bits() const {
    double bits = 0;
    for (const auto& c : fingerprint_classes) bits += c.bits();
    return bits;
}

namespace {

u64 default_verify_q(u64 n) {
    if (n > 2642245) throw InvalidParam("three_pass: n^3 exceeds 64 bits");
    u64 cube = std::max<u64>(n * n * n, 2);
    u64 q = smallest_prime_at_least(cube);
    return q;
}

u64 default_abort_threshold(u64 n) {
    double lg = clamped_log2(static_cast<double>(n));
    double t = std::ceil(static_cast<double>(n) / std::pow(lg, 6.0));
    return std::max<u64>(1, static_cast<u64>(t));
}

}  // namespace

ThreePassResult three_pass_histogram(const StreamSource& stream,
                                     const MultipassConfig& cfg) {
    u64 n = cfg.n ? cfg.n : stream.length();
    if (stream.length() > n) throw InvalidParam("three_pass: stream longer than bound n");
    n = std::max<u64>(n, 1);
    u64 universe = std::max<u64>(stream.universe(), 1);
#ifndef NDEBUG
    assert(stream.checksum() == stream.checksum());  // replayability contract
#endif
    BucketingPlan plan = BucketingPlan::make(
        n, universe, derive_seed(cfg.seed, "3pass.plan"), cfg.fp_width, cfg.overrides);
    u64 nb = plan.num_buckets;

    // Pass 1: fingerprint histogram per bucket
    std::vector<FingerprintHistogram> hist(nb, FingerprintHistogram(plan.fp_width));
    stream.replay([&](u64 x) {
        u64 j = plan.bucket_of(x);
        hist[j].add_observation(plan.fingerprint_of(j, x));
    });

    // Pass 2: verify every bucket with one shared h into F_q
    u64 q = cfg.verify_q ? cfg.verify_q : default_verify_q(n);
    double lg = clamped_log2(static_cast<double>(n));
    unsigned kh = static_cast<unsigned>(std::ceil(6.0 * lg));
    KWiseHash h =
        KWiseHash::make(kh, universe, q, derive_seed(cfg.seed, "3pass.h"));

    std::vector<VerifyAccumulators> acc(nb, VerifyAccumulators{0, 0, q});
    std::vector<u8> bucket_error(nb, 0);
    for (auto& hb : hist) hb.reset_flags();
    stream.replay([&](u64 x) {
        u64 j = plan.bucket_of(x);
        if (bucket_error[j]) return;
        u64 fp = plan.fingerprint_of(j, x);
        try {
            verify_step(acc[j], x, fp, hist[j], h);
        } catch (const UnknownFingerprint&) {
            bucket_error[j] = 1;  // histogram/stream mismatch: fail closed
        }
    });

    // the verifier's guarantee needs few distinct elements per bucket; a
    // bucket over the limit is treated as failed rather than trusted
    u64 light_limit = static_cast<u64>(std::ceil(6.0 * lg));
    ThreePassResult res;
    res.verify_accepted.assign(nb, 0);
    for (u64 j = 0; j < nb; ++j) {
        bool ok = !cfg.overrides.force_all_verify_fail && !bucket_error[j] &&
                  hist[j].size() <= light_limit && verify_decide(acc[j]);
        res.verify_accepted[j] = ok ? 1 : 0;
        if (!ok) res.failed_buckets.push_back(j);
    }
    res.verify_q = q;
    res.abort_threshold =
        cfg.abort_threshold ? *cfg.abort_threshold : default_abort_threshold(n);
    if (!res.failed_buckets.empty() &&
        res.failed_buckets.size() >= res.abort_threshold) {
        throw Aborted(res.failed_buckets.size());
    }

    // Pass 3: rebuild failed buckets keyed by full element names; assemble the
    // output map in the same sweep
    std::unordered_map<u64, std::unordered_map<u64, u64>> fullname;
    for (u64 j : res.failed_buckets) fullname.emplace(j, std::unordered_map<u64, u64>{});
    res.histogram.reserve(stream.length());
    stream.replay([&](u64 x) {
        u64 j = plan.bucket_of(x);
        auto it = fullname.find(j);
        if (it != fullname.end()) {
            ++it->second[x];
        } else {
            u64 fp = plan.fingerprint_of(j, x);
            res.histogram[x] = hist[j].count_of(fp);
        }
    });
    u64 fullname_entries = 0;
    for (auto& [j, m] : fullname) {
        fullname_entries += m.size();
        for (auto& [x, c] : m) res.histogram[x] = c;
    }

    // ledger: final state after pass 3
    u64 short_entries = 0;
    for (u64 j = 0; j < nb; ++j) {
        if (!fullname.count(j)) short_entries += hist[j].size();
    }
    res.ledger.add_fingerprints(plan.fp_width, short_entries);
    res.ledger.fullname_entries = fullname_entries;
    res.ledger.fullname_width = static_cast<unsigned>(
        std::max(1.0, std::ceil(std::log2(static_cast<double>(universe) + 1))));
    res.ledger.counter_bits = static_cast<double>(stream.length());
    res.ledger.hash_bits = plan.hash_description_bits() + h.description_bits();
    res.ledger.accumulator_bits =
        static_cast<double>(nb) * 2.0 * std::ceil(std::log2(static_cast<double>(q)));
    res.plan = std::move(plan);
    return res;
}

}  // namespace streamhist
