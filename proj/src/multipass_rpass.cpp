#include <algorithm>
#include <cmath>

#include "streamhist/multipass.hpp"
#include "streamhist/rng.hpp"

namespace streamhist {

namespace {

constexpr u64 kThresholdSat = u64(1) << 62;
constexpr u64 kPrimeLoCap = u64(1) << 60;

u64 sat_pow5(u64 x) {
    u128 acc = 1;
    for (int i = 0; i < 5; ++i) {
        acc *= x;
        if (acc > kThresholdSat) return kThresholdSat;
    }
    return static_cast<u64>(acc);
}

}  // namespace

TreeConfig TreeConfig::make(unsigned r, u64 n, u64 universe, bool force_huge_fields) {
    if (r < 1) throw InvalidParam("TreeConfig: r must be >= 1");
    TreeConfig tc;
    tc.r = r;
    tc.n = std::max<u64>(n, 2);
    tc.universe = std::max<u64>(universe, 1);

    tc.level_values.resize(r + 1);
    tc.level_values[0] = tc.n;
    for (unsigned i = 1; i <= r; ++i) {
        double lg = std::log2(static_cast<double>(tc.level_values[i - 1]));
        tc.level_values[i] = std::max<u64>(1, static_cast<u64>(std::ceil(lg)));
    }
    if (tc.level_values[r] < 2)
        throw DepthTooLarge("TreeConfig: iterated log below 2 at requested depth");

    tc.nodes_at.resize(r + 1);
    for (unsigned i = 0; i <= r; ++i) {
        u64 denom = tc.level_values[r - i];
        tc.nodes_at[i] = std::max<u64>(
            1, (tc.n + denom - 1) / denom);
    }

    tc.q_level.resize(r);
    for (unsigned i = 0; i < r; ++i) {
        u64 base = tc.level_values[r - i - 1];
        u64 lo = force_huge_fields ? kPrimeLoCap : std::min(sat_pow5(base), kPrimeLoCap);
        lo = std::max<u64>(lo, 2);
        tc.q_level[i] = FieldModulus::from_u64(smallest_prime_at_least(lo));
    }

    // requested widths follow the L^50 / q^10 formulas; stored fingerprints
    // are capped at 62 bits (the large exponents are proof artifacts)
    tc.fp_width.resize(r + 1);
    tc.fp_width_requested.resize(r + 1);
    tc.fp_width_requested[0] = 50.0 * std::log2(static_cast<double>(tc.level_values[r]));
    for (unsigned k = 1; k <= r; ++k) {
        tc.fp_width_requested[k] =
            10.0 * std::log2(static_cast<double>(tc.q_level[k - 1].q64()));
    }
    for (unsigned k = 0; k <= r; ++k) {
        double req = force_huge_fields ? 62.0 : tc.fp_width_requested[k];
        tc.fp_width[k] = static_cast<unsigned>(
            std::clamp(std::ceil(req), 1.0, 62.0));
    }

    tc.heavy_threshold.resize(r);
    tc.heavy_threshold[0] = sat_pow5(tc.level_values[r]);
    for (unsigned i = 1; i < r; ++i) tc.heavy_threshold[i] = tc.q_level[i - 1].q64();
    return tc;
}

u64 TreeConfig::stride(unsigned level) const {
    return std::max<u64>(1, (leaves() + nodes_at[level] - 1) / nodes_at[level]);
}

u64 TreeConfig::ancestor(u64 leaf, unsigned level) const {
    if (level == 0) return leaf;
    return std::min(leaf / stride(level), nodes_at[level] - 1);
}

std::pair<u64, u64> TreeConfig::leaf_range(unsigned level, u64 node) const {
    u64 s = stride(level);
    u64 lo = node * s;
    u64 hi = std::min(lo + s, leaves());
    if (node + 1 == nodes_at[level]) hi = leaves();  // last node absorbs the remainder
    return {lo, hi};
}

u64 RPassState::compute_M(unsigned level, u64 node) const {
    auto [lo, hi] = config.leaf_range(level, node);
    u64 m = 0;
    for (u64 u = lo; u < hi; ++u) m += leaves[u].total();
    return m;
}

u64 RPassState::compute_D(unsigned level, u64 node) const {
    auto [lo, hi] = config.leaf_range(level, node);
    u64 d = 0;
    for (u64 u = lo; u < hi; ++u) d += leaves[u].size();
    return d;
}

RPassResult r_pass_histogram(const StreamSource& stream, const RPassConfig& cfg) {
    u64 n = cfg.n ? cfg.n : stream.length();
    if (stream.length() > n) throw InvalidParam("r_pass: stream longer than bound n");
    u64 universe = std::max<u64>(stream.universe(), 1);

    RPassResult res;
    res.config = TreeConfig::make(cfg.r, std::max<u64>(n, 2), universe,
                                  cfg.force_huge_fields);
    const TreeConfig& tc = res.config;
    unsigned r = tc.r;

    Prf64 bhash{derive_seed(cfg.seed, "rpass.b"), tc.leaves()};
    auto bucket_of = [&](u64 x) -> u64 {
        if (!cfg.overrides.bucket.empty()) {
            auto it = cfg.overrides.bucket.find(x);
            if (it != cfg.overrides.bucket.end()) return it->second % tc.leaves();
        }
        return bhash.eval(x);
    };
    std::vector<Prf64> gens(r + 1);
    for (unsigned k = 0; k <= r; ++k) {
        gens[k] = Prf64{derive_seed(cfg.seed, "rpass.g", k), u64(1) << tc.fp_width[k]};
    }
    // fingerprint overrides rig collisions in generation 0; rebuilds escape them
    auto fingerprint_of = [&](unsigned gen, u64 x) -> u64 {
        if (gen == 0 && !cfg.overrides.fingerprint.empty()) {
            auto it = cfg.overrides.fingerprint.find(x);
            if (it != cfg.overrides.fingerprint.end())
                return it->second % gens[0].range;
        }
        return gens[gen].eval(x);
    };

    // initial pass: build leaf histograms with the shortest fingerprints
    std::vector<FingerprintHistogram> leaves(tc.leaves(),
                                             FingerprintHistogram(tc.fp_width[0]));
    std::vector<unsigned> gen_of(tc.leaves(), 0);
    stream.replay([&](u64 x) {
        u64 u = bucket_of(x);
        leaves[u].add_observation(fingerprint_of(0, x));
    });
    res.passes = 1;

    u64 leaf_heavy = cfg.leaf_heavy_threshold_override
                         ? *cfg.leaf_heavy_threshold_override
                         : tc.heavy_threshold[0];

    for (unsigned i = 0; i < r; ++i) {
        // verify pass over nodes at level i
        std::vector<u64> leaf_m(tc.leaves());
        for (u64 u = 0; u < tc.leaves(); ++u) leaf_m[u] = leaves[u].total();

        std::vector<u8> failed(tc.nodes_at[i], 0);
        if (i == 0) {
            for (u64 u = 0; u < tc.leaves(); ++u) {
                if (leaf_m[u] >= leaf_heavy) failed[u] = 1;  // heavy leaf
            }
        } else {
            for (u64 w = 0; w < tc.nodes_at[i - 1]; ++w) {
                auto [lo, hi] = tc.leaf_range(i - 1, w);
                u64 mw = 0;
                for (u64 u = lo; u < hi; ++u) mw += leaf_m[u];
                if (mw >= tc.heavy_threshold[i]) {
                    failed[tc.ancestor(lo, i)] = 1;  // parent of a heavy child
                }
            }
        }

        u64 qi = tc.q_level[i].q64();
        Prf64 hi_hash{derive_seed(cfg.seed, "rpass.h", i), qi};
        std::vector<u64> acc_true(tc.nodes_at[i], 0), acc_hist(tc.nodes_at[i], 0);
        for (auto& lh : leaves) lh.reset_flags();
        stream.replay([&](u64 x) {
            u64 u = bucket_of(x);
            u64 v = tc.ancestor(u, i);
            if (failed[v]) return;  // verifier is skipped at heavy nodes
            u64 fp = fingerprint_of(gen_of[u], x);
            FpEntry* e = leaves[u].find(fp);
            if (!e) {
                failed[v] = 1;
                return;
            }
            u64 hx = hi_hash.eval(x);
            acc_true[v] += hx;
            if (acc_true[v] >= qi) acc_true[v] -= qi;
            if (!e->seen) {
                e->seen = true;
                acc_hist[v] = (acc_hist[v] + mulmod64(hx, e->count % qi, qi)) % qi;
            }
        });
        ++res.passes;
        for (u64 v = 0; v < tc.nodes_at[i]; ++v) {
            if (!failed[v] && acc_true[v] != acc_hist[v]) failed[v] = 1;
        }
        u64 failed_count = 0;
        std::vector<u8> rebuild(tc.leaves(), 0);
        u64 rebuilt = 0;
        for (u64 v = 0; v < tc.nodes_at[i]; ++v) {
            if (!failed[v]) continue;
            ++failed_count;
            auto [lo, hi] = tc.leaf_range(i, v);
            for (u64 u = lo; u < hi; ++u) {
                if (!rebuild[u]) {
                    rebuild[u] = 1;
                    ++rebuilt;
                }
            }
        }
        res.failed_nodes_at_step.push_back(failed_count);
        res.rebuilt_leaves_at_step.push_back(rebuilt);

        // rebuild pass: failed subtrees get the next, longer fingerprints
        for (u64 u = 0; u < tc.leaves(); ++u) {
            if (rebuild[u]) {
                leaves[u] = FingerprintHistogram(tc.fp_width[i + 1]);
                gen_of[u] = i + 1;
            }
        }
        stream.replay([&](u64 x) {
            u64 u = bucket_of(x);
            if (rebuild[u]) leaves[u].add_observation(fingerprint_of(gen_of[u], x));
        });
        ++res.passes;
    }

    // output materialization (query rule applied once per distinct element)
    res.histogram.reserve(stream.length());
    stream.replay([&](u64 x) {
        u64 u = bucket_of(x);
        u64 fp = fingerprint_of(gen_of[u], x);
        res.histogram[x] = leaves[u].count_of(fp);
    });

    // ledger
    std::vector<u64> entries_by_gen(r + 1, 0);
    for (u64 u = 0; u < tc.leaves(); ++u) entries_by_gen[gen_of[u]] += leaves[u].size();
    for (unsigned k = 0; k <= r; ++k) {
        res.ledger.add_fingerprints(tc.fp_width[k], entries_by_gen[k]);
    }
    res.ledger.counter_bits = static_cast<double>(stream.length());
    res.ledger.hash_bits = 64.0 * (1.0 + r + (r + 1.0));  // PRF seeds, Newman-style
    double acc_bits = 0;
    for (unsigned i = 0; i < r; ++i) {
        double bits = static_cast<double>(tc.nodes_at[i]) * 2.0 *
                      std::ceil(std::log2(static_cast<double>(tc.q_level[i].q64())));
        acc_bits = std::max(acc_bits, bits);  // accumulator space is reused per level
    }
    res.ledger.accumulator_bits = acc_bits;

    res.state = RPassState{tc, std::move(leaves)};
    return res;
}

}  // namespace streamhist
