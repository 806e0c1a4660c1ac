#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_set>

#include "streamhist/multipass.hpp"
#include "streamhist/rng.hpp"

namespace streamhist {

CandidateEnumerator::CandidateEnumerator(u64 universe, u64 max_support, i64 coeff_bound)
    : universe_(universe),
      max_support_(std::min(max_support, universe)),
      bound_(coeff_bound) {
    if (coeff_bound < 0) throw InvalidParam("CandidateEnumerator: negative coeff bound");
    start_support_size(0);
}

bool CandidateEnumerator::start_support_size(u64 j) {
    if (j > max_support_ || (j > 0 && bound_ == 0)) {
        done_ = true;
        return false;
    }
    cur_size_ = j;
    support_.resize(j);
    for (u64 i = 0; i < j; ++i) support_[i] = i;
    coeff_idx_.assign(j, 0);
    return true;
}

bool CandidateEnumerator::next(DiscrepancyPolynomial& out) {
    if (done_) return false;

    // emit the current candidate
    out.coeffs.clear();
    out.sparsity_bound = max_support_;
    out.coeff_bound = bound_;
    for (u64 i = 0; i < cur_size_; ++i) {
        u64 idx = coeff_idx_[i];
        i64 value = idx < static_cast<u64>(bound_)
                        ? -bound_ + static_cast<i64>(idx)
                        : static_cast<i64>(idx) - bound_ + 1;
        out.coeffs.emplace(support_[i], value);
    }

    // advance: coefficient odometer, then support combination, then size
    u64 base = 2 * static_cast<u64>(bound_);
    for (u64 i = cur_size_; i-- > 0;) {
        if (++coeff_idx_[i] < base) return true;
        coeff_idx_[i] = 0;
        if (i == 0) break;
    }
    if (cur_size_ == 0) {
        start_support_size(1);
        return true;
    }
    // next lexicographic combination of cur_size_ indices from [universe_)
    u64 k = cur_size_;
    u64 i = k;
    while (i-- > 0) {
        if (support_[i] < universe_ - k + i) {
            ++support_[i];
            for (u64 t = i + 1; t < k; ++t) support_[t] = support_[t - 1] + 1;
            return true;
        }
    }
    start_support_size(cur_size_ + 1);
    return true;
}

namespace {

double binomial_d(u64 n, u64 k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (u64 i = 0; i < k; ++i) r = r * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return r;
}

}  // namespace

double CandidateEnumerator::count_exact(u64 universe, u64 max_support, i64 coeff_bound) {
    double total = 0;
    for (u64 j = 0; j <= std::min(max_support, universe); ++j) {
        total += binomial_d(universe, j) * std::pow(2.0 * static_cast<double>(coeff_bound),
                                                    static_cast<double>(j));
    }
    return total;
}

double CandidateEnumerator::count_cap_formula(u64 universe, u64 max_support, i64 coeff_bound) {
    double total = 0;
    for (u64 j = 0; j <= std::min(max_support, universe); ++j) {
        total += binomial_d(universe, j) *
                 std::pow(2.0 * static_cast<double>(coeff_bound) + 1.0,
                          static_cast<double>(j));
    }
    return total;
}

FieldModulus two_pass_default_q(u64 n, unsigned exponent_cap) {
    static std::mutex mu;
    static std::map<unsigned, FieldModulus> cache;
    unsigned n_eff = static_cast<unsigned>(std::min<u64>(n, exponent_cap));
    n_eff = std::max(n_eff, 1u);
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(n_eff);
        if (it != cache.end()) return it->second;
    }
    Wide lo = pow3(n_eff) + 1;
    Wide hi = 2 * pow3(n_eff) - 1;
    FieldModulus q = find_prime_in(lo, hi);
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(n_eff, q);
    return q;
}

TwoPassResult two_pass_histogram(const StreamSource& stream, const TwoPassConfig& cfg) {
    u64 n = cfg.n ? cfg.n : stream.length();
    if (stream.length() > n) throw InvalidParam("two_pass: stream longer than bound n");
    n = std::max<u64>(n, 1);
    u64 universe = std::max<u64>(stream.universe(), 1);

    // enumeration is exponential by design; refuse instances beyond the cap
    double cap_count =
        CandidateEnumerator::count_cap_formula(universe, cfg.sparsity, cfg.coeff_bound);
    if (cap_count > cfg.enum_cap)
        throw EnumerationCapExceeded("two_pass: candidate family exceeds enumeration cap");

    BucketingPlan plan = BucketingPlan::make(
        n, universe, derive_seed(cfg.seed, "2pass.plan"), cfg.fp_width, cfg.overrides);

    // Pass 1: fingerprint histograms (as in the three-pass algorithm)
    std::vector<FingerprintHistogram> hist(plan.num_buckets,
                                           FingerprintHistogram(plan.fp_width));
    stream.replay([&](u64 x) {
        u64 j = plan.bucket_of(x);
        hist[j].add_observation(plan.fingerprint_of(j, x));
    });

    // Pass 2: global accumulators over a field with q > 3^min(n, cap)
    TwoPassResult res;
    res.q = cfg.q_override ? *cfg.q_override : two_pass_default_q(n, cfg.exponent_cap);
    const Wide& q = res.q.q;
    WidePrf h{derive_seed(cfg.seed, "2pass.h"), res.q};

    Wide acc_true = 0, acc_hist = 0;
    std::map<std::pair<u64, u64>, u64> first_elem;  // (bucket, fp) -> first element
    for (auto& hb : hist) hb.reset_flags();
    stream.replay([&](u64 x) {
        u64 j = plan.bucket_of(x);
        u64 fp = plan.fingerprint_of(j, x);
        FpEntry* e = hist[j].find(fp);
        if (!e) throw Error("two_pass: histogram/stream mismatch");
        Wide hx = h.eval(x);
        acc_true = addmod_wide(acc_true, hx, q);
        if (!e->seen) {
            e->seen = true;
            first_elem.emplace(std::make_pair(j, fp), x);
            acc_hist = addmod_wide(acc_hist, mulmod_wide(hx, Wide(e->count), q), q);
        }
    });
    res.residue = submod_wide(acc_true, acc_hist, q);

    // enumerate candidates in canonical order; first match wins
    std::unordered_map<u64, Wide> hcache;
    auto h_of = [&](u64 x) -> const Wide& {
        auto it = hcache.find(x);
        if (it == hcache.end()) it = hcache.emplace(x, h.eval(x)).first;
        return it->second;
    };
    CandidateEnumerator en(universe, cfg.sparsity, cfg.coeff_bound);
    DiscrepancyPolynomial cand;
    bool matched = false;
    while (en.next(cand)) {
        ++res.candidates_tested;
        Wide v = 0;
        for (const auto& [x, a] : cand.coeffs) {
            Wide term = mulmod_wide(h_of(x), Wide(static_cast<u64>(a < 0 ? -a : a)), q);
            v = a > 0 ? addmod_wide(v, term, q) : submod_wide(v, term, q);
        }
        if (v == res.residue) {
            res.recovered = cand;
            matched = true;
            break;
        }
    }
    if (!matched) throw NoCandidateMatched("two_pass: no candidate polynomial matched");

    // correction on the histogram structure: positive coefficients shrink the
    // collided entry, negative ones get a fresh entry under an unused
    // fingerprint (full name if the fingerprint space is exhausted)
    res.corrected_histograms = hist;
    for (auto& hb : res.corrected_histograms) hb.reset_flags();
    res.corrected_fullname.assign(plan.num_buckets, {});
    for (const auto& [x, a] : res.recovered.coeffs) {
        u64 j = plan.bucket_of(x);
        u64 fp = plan.fingerprint_of(j, x);
        if (a > 0) {
            res.corrected_histograms[j].subtract(fp, static_cast<u64>(a));
        } else {
            auto fresh = res.corrected_histograms[j].smallest_unused_fingerprint(plan.fp_range);
            if (fresh) {
                res.corrected_histograms[j].add_entry(*fresh, static_cast<u64>(-a));
            } else {
                res.corrected_fullname[j].emplace_back(x, static_cast<u64>(-a));
            }
        }
    }

    // assemble the element-keyed output: claimed count (nonzero only for the
    // first element of its fingerprint class) plus the recovered coefficient
    std::unordered_set<u64> seen;
    seen.reserve(stream.length());
    stream.replay([&](u64 x) {
        if (!seen.insert(x).second) return;
        u64 j = plan.bucket_of(x);
        u64 fp = plan.fingerprint_of(j, x);
        auto itf = first_elem.find({j, fp});
        u64 claimed = (itf != first_elem.end() && itf->second == x)
                          ? hist[j].count_of(fp)
                          : 0;
        i64 val = static_cast<i64>(claimed) + res.recovered.coeff(x);
        if (val > 0) res.histogram[x] = static_cast<u64>(val);
    });

    u64 entries = 0;
    for (const auto& hb : res.corrected_histograms) entries += hb.size();
    res.ledger.add_fingerprints(plan.fp_width, entries);
    u64 fullname_entries = 0;
    for (const auto& v : res.corrected_fullname) fullname_entries += v.size();
    res.ledger.fullname_entries = fullname_entries;
    res.ledger.fullname_width = static_cast<unsigned>(
        std::max(1.0, std::ceil(std::log2(static_cast<double>(universe) + 1))));
    res.ledger.counter_bits = static_cast<double>(stream.length());
    res.ledger.hash_bits = plan.hash_description_bits() + 64.0;  // PRF seed
    res.ledger.accumulator_bits = 2.0 * res.q.width;
    res.plan = std::move(plan);
    return res;
}

}  // namespace streamhist
