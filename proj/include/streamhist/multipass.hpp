#pragma once

#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "streamhist/field.hpp"
#include "streamhist/histverify.hpp"
#include "streamhist/stream_io.hpp"

namespace streamhist {

struct Aborted : Error {
    u64 failed_count;
    explicit Aborted(u64 f)
        : Error("multipass: aborted, failed buckets = " + std::to_string(f)),
          failed_count(f) {}
};
struct NoCandidateMatched : Error {
    using Error::Error;
};
struct EnumerationCapExceeded : Error {
    using Error::Error;
};
struct DepthTooLarge : Error {
    using Error::Error;
};

// log2 clamped so derived sizes stay >= 1 at tiny n
inline double clamped_log2(double x) { return std::max(1.0, std::log2(std::max(x, 2.0))); }

// Fault injection: tests force bucket assignments and fingerprint collisions
// deterministically by overriding individual hash values.
struct HashOverrides {
    std::unordered_map<u64, u64> bucket;       // element -> bucket index
    std::unordered_map<u64, u64> fingerprint;  // element -> fingerprint value
    bool force_all_verify_fail = false;        // pass 2 marks every bucket failed

    bool empty() const {
        return bucket.empty() && fingerprint.empty() && !force_all_verify_fail;
    }
};

// Hashing plan shared by the three-pass and two-pass algorithms: a 6log n-wise
// bucket hash b into ~n/log n buckets and one pairwise fingerprint hash per
// bucket into [2^(10 log log n)].
struct BucketingPlan {
    u64 n = 0;
    u64 universe = 0;
    u64 num_buckets = 0;
    unsigned fp_width = 0;
    u64 fp_range = 0;
    KWiseHash b;
    std::vector<KWiseHash> g;
    HashOverrides overrides;

    static BucketingPlan make(u64 n, u64 universe, u64 seed,
                              unsigned fp_width_override = 0,
                              HashOverrides overrides = {});

    u64 bucket_of(u64 x) const {
        if (!overrides.bucket.empty()) {
            auto it = overrides.bucket.find(x);
            if (it != overrides.bucket.end()) return it->second % num_buckets;
        }
        return b.eval(x);
    }

    u64 fingerprint_of(u64 bucket, u64 x) const {
        if (!overrides.fingerprint.empty()) {
            auto it = overrides.fingerprint.find(x);
            if (it != overrides.fingerprint.end()) return it->second % fp_range;
        }
        return g[bucket].eval(x);
    }

    double hash_description_bits() const;
};

struct WidthClassBits {
    unsigned width_bits = 0;
    u64 entries = 0;
    double bits() const { return static_cast<double>(width_bits) * entries; }
};

// Bit-exact accounting of algorithm state, by category. Counters are charged
// at the unary bound (total counter mass = stream length).
struct MemoryLedger {
    std::vector<WidthClassBits> fingerprint_classes;
    u64 fullname_entries = 0;
    unsigned fullname_width = 0;
    double counter_bits = 0;
    double hash_bits = 0;
    double accumulator_bits = 0;

    void add_fingerprints(unsigned width, u64 entries);
    double fingerprint_bits() const;
    double fullname_bits() const {
        return static_cast<double>(fullname_entries) * fullname_width;
    }
    double total() const {
        return fingerprint_bits() + fullname_bits() + counter_bits + hash_bits +
               accumulator_bits;
    }
};

struct MultipassConfig {
    u64 n = 0;  // stream-length bound; 0 -> actual stream length
    u64 seed = 0;
    unsigned fp_width = 0;                    // 0 -> ceil(10 log2 log2 n)
    std::optional<u64> abort_threshold;       // default max(1, ceil(n/(log2 n)^6))
    u64 verify_q = 0;                         // 0 -> smallest prime >= n^3
    HashOverrides overrides;
};

struct ThreePassResult {
    std::unordered_map<u64, u64> histogram;  // element -> exact count (w.h.p.)
    std::vector<u64> failed_buckets;
    std::vector<u8> verify_accepted;  // pass-2 decision per bucket
    u64 verify_q = 0;
    u64 abort_threshold = 0;
    MemoryLedger ledger;
    BucketingPlan plan;  // kept for audits against oracle knowledge
};

ThreePassResult three_pass_histogram(const StreamSource& stream,
                                     const MultipassConfig& cfg);

// ---- two-pass sparse recovery ----

// Multilinear polynomial keyed by universe element; at most sparsity_bound
// nonzero coefficients, each in [-coeff_bound, coeff_bound].
struct DiscrepancyPolynomial {
    std::map<u64, i64> coeffs;  // no stored zeros
    u64 sparsity_bound = 0;
    i64 coeff_bound = 0;

    i64 coeff(u64 x) const {
        auto it = coeffs.find(x);
        return it == coeffs.end() ? 0 : it->second;
    }
    void set(u64 x, i64 a) {
        if (a == 0) coeffs.erase(x);
        else coeffs[x] = a;
    }
    bool same_coeffs(const DiscrepancyPolynomial& o) const { return coeffs == o.coeffs; }
};

// Canonical total order over the candidate family: ascending support size,
// then lexicographic support, then lexicographic coefficient vectors with
// values ordered -b < ... < -1 < 1 < ... < b.
class CandidateEnumerator {
public:
    CandidateEnumerator(u64 universe, u64 max_support, i64 coeff_bound);
    bool next(DiscrepancyPolynomial& out);

    // exact number of distinct candidates: sum_j C(U,j) * (2b)^j
    static double count_exact(u64 universe, u64 max_support, i64 coeff_bound);
    // conservative pre-check form: sum_j C(U,j) * (2b+1)^j
    static double count_cap_formula(u64 universe, u64 max_support, i64 coeff_bound);

private:
    bool start_support_size(u64 j);
    u64 universe_;
    u64 max_support_;
    i64 bound_;
    u64 cur_size_ = 0;
    bool done_ = false;
    bool fresh_ = true;
    std::vector<u64> support_;
    std::vector<u64> coeff_idx_;  // odometer digits in [0, 2b)
};

struct TwoPassConfig {
    u64 n = 0;  // stream-length bound; 0 -> actual stream length
    u64 sparsity = 0;
    i64 coeff_bound = 0;
    u64 seed = 0;
    double enum_cap = 1e7;
    unsigned fp_width = 0;
    std::optional<FieldModulus> q_override;  // forced tiny fields for soundness runs
    unsigned exponent_cap = 150;             // q = smallest prime > 3^min(n,cap)
    HashOverrides overrides;
};

struct TwoPassResult {
    std::unordered_map<u64, u64> histogram;  // assembled exact output (w.h.p.)
    DiscrepancyPolynomial recovered;
    Wide residue = 0;  // accTrue - accHist in F_q
    FieldModulus q;
    u64 candidates_tested = 0;
    MemoryLedger ledger;
    BucketingPlan plan;
    // corrected bucket structure: entries adjusted per recovered coefficients,
    // fresh entries under unused fingerprints (or full names when the
    // fingerprint space is exhausted)
    std::vector<FingerprintHistogram> corrected_histograms;
    std::vector<std::vector<std::pair<u64, u64>>> corrected_fullname;  // per bucket
};

TwoPassResult two_pass_histogram(const StreamSource& stream, const TwoPassConfig& cfg);

// default field for the two-pass check at stream bound n (memoized)
FieldModulus two_pass_default_q(u64 n, unsigned exponent_cap = 150);

// ---- (2r+1)-pass tree algorithm ----

struct TreeConfig {
    unsigned r = 0;
    u64 n = 0;
    u64 universe = 0;
    std::vector<u64> level_values;           // L_0..L_r, L_0 = n
    std::vector<u64> nodes_at;               // |level i| for i = 0..r (0 = leaves)
    std::vector<FieldModulus> q_level;       // q_0..q_{r-1}
    std::vector<unsigned> fp_width;          // g^(0)..g^(r), capped actual widths
    std::vector<double> fp_width_requested;  // formula widths before capping
    std::vector<u64> heavy_threshold;        // index 0: leaf threshold; i>=1: q_{i-1}

    static TreeConfig make(unsigned r, u64 n, u64 universe,
                           bool force_huge_fields = false);

    u64 leaves() const { return nodes_at[0]; }
    u64 stride(unsigned level) const;                       // leaves per node
    u64 ancestor(u64 leaf, unsigned level) const;
    std::pair<u64, u64> leaf_range(unsigned level, u64 node) const;
};

// Snapshot of the per-leaf histograms; M/D aggregate over subtrees.
struct RPassState {
    TreeConfig config;
    std::vector<FingerprintHistogram> leaves;

    // stream elements under the node, with multiplicity
    u64 compute_M(unsigned level, u64 node) const;
    // distinct fingerprint entries under the node (proxy for distinct elements)
    u64 compute_D(unsigned level, u64 node) const;
};

struct RPassConfig {
    unsigned r = 1;
    u64 n = 0;  // stream-length bound; 0 -> actual stream length
    u64 seed = 0;
    HashOverrides overrides;  // fingerprint overrides apply to generation 0 only
    std::optional<u64> leaf_heavy_threshold_override;
    bool force_huge_fields = false;
};

struct RPassResult {
    std::unordered_map<u64, u64> histogram;
    TreeConfig config;
    u64 passes = 0;
    std::vector<u64> failed_nodes_at_step;    // |F_i| per step
    std::vector<u64> rebuilt_leaves_at_step;  // leaves re-fingerprinted per step
    MemoryLedger ledger;
    RPassState state;  // final leaf histograms
};

RPassResult r_pass_histogram(const StreamSource& stream, const RPassConfig& cfg);

}  // namespace streamhist
