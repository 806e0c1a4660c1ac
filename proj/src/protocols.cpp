#include "streamhist/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "streamhist/f2.hpp"
#include "streamhist/multiset.hpp"
#include "streamhist/rng.hpp"

namespace streamhist {

PartyInput PartyInput::make(std::vector<u64> elems, u64 n_bound, u64 universe) {
    for (size_t i = 1; i < elems.size(); ++i) {
        if (elems[i] <= elems[i - 1])
            throw InvalidParam("PartyInput: elements must be strictly increasing");
    }
    if (elems.size() > n_bound) throw InvalidParam("PartyInput: |set| exceeds n");
    if (!elems.empty() && elems.back() >= universe)
        throw InvalidParam("PartyInput: element outside universe");
    PartyInput p;
    p.set = std::move(elems);
    p.n_bound = n_bound;
    p.universe = universe;
    return p;
}

std::string Transcript::to_string() const {
    std::ostringstream out;
    for (const auto& m : messages) {
        out << m.sender << '|' << m.descriptor << '|' << m.bits << '\n';
    }
    out << "total|" << total_bits << '\n';
    return out.str();
}

i64 round_half_away(double v) { return static_cast<i64>(std::llround(v)); }

u64 intersection_size(const std::vector<u64>& a, const std::vector<u64>& b) {
    u64 m = 0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (a[i] > b[j]) {
            ++j;
        } else {
            ++m;
            ++i;
            ++j;
        }
    }
    return m;
}

namespace {

double bits_per_element(u64 universe) {
    return std::max(1.0, std::ceil(std::log2(static_cast<double>(universe))));
}

double size_header_bits(u64 n) {
    return std::max(1.0, std::ceil(std::log2(static_cast<double>(std::max<u64>(n, 2)))));
}

double newman_adjustment_bits(u64 universe, u64 n) {
    // ceil(log2 log2 N): index into Newman's randomness family, N = |U|^n
    double log2_n_inputs = static_cast<double>(n) *
                           std::log2(std::max<double>(2.0, static_cast<double>(universe)));
    return std::ceil(std::log2(std::max(2.0, log2_n_inputs)));
}

void check_high_error_regime(const PartyInput& a, const PartyInput& b, double eps) {
    u64 n = std::max(a.n_bound, b.n_bound);
    if (!(eps > 1.0 / std::sqrt(static_cast<double>(std::max<u64>(n, 1)))))
        throw InvalidParam("protocol: eps must exceed 1/sqrt(n)");
    if (a.universe != b.universe) throw InvalidParam("protocol: universe mismatch");
}

double sampling_probability(double c, u64 n, double eps) {
    double p = c / (static_cast<double>(n) * eps * eps);
    return std::clamp(p, 0.0, 1.0);  // p >= 1 means "send everything"
}

ProtocolOutcome make_outcome(i64 estimate, i64 truth, double eps, u64 n) {
    ProtocolOutcome out;
    out.estimate = estimate;
    out.truth = truth;
    out.eps = eps;
    out.n = n;
    out.within_eps = std::llabs(estimate - truth) <=
                     static_cast<i64>(std::floor(eps * static_cast<double>(n)));
    return out;
}

ProtocolOutcome make_abort(i64 truth, double eps, u64 n) {
    ProtocolOutcome out;
    out.aborted = true;
    out.truth = truth;
    out.eps = eps;
    out.n = n;
    out.within_eps = false;
    return out;
}

}  // namespace

std::pair<ProtocolOutcome, Transcript> alg1_oneway_sample(const PartyInput& a,
                                                          const PartyInput& b,
                                                          const ProtocolConfig& cfg) {
    check_high_error_regime(a, b, cfg.eps);
    u64 n = std::max(a.n_bound, b.n_bound);
    double p = sampling_probability(cfg.c, n, cfg.eps);
    i64 truth = static_cast<i64>(intersection_size(a.set, b.set));

    Rng rng(derive_seed(cfg.seed, "alg1.sample"));
    std::vector<u64> sample;
    for (u64 x : a.set) {
        if (rng.bernoulli(p)) sample.push_back(x);
    }

    Transcript tr;
    if (!a.set.empty() &&
        static_cast<double>(sample.size()) >= 10.0 * p * static_cast<double>(a.size())) {
        tr.add('A', "abort", 1);
        return {make_abort(truth, cfg.eps, n), tr};
    }
    tr.add('A', "size+sample",
           static_cast<double>(sample.size()) * bits_per_element(a.universe) +
               size_header_bits(n));
    u64 hit = intersection_size(sample, b.set);
    i64 est = p > 0 ? round_half_away(static_cast<double>(hit) / p) : 0;
    return {make_outcome(est, truth, cfg.eps, n), tr};
}

std::vector<u64> shared_subsample(const std::vector<u64>& set, const Prf64& h, double pn) {
    std::vector<u64> out;
    for (u64 x : set) {
        if (static_cast<double>(h.eval(x)) < pn) out.push_back(x);
    }
    return out;
}

std::pair<ProtocolOutcome, Transcript> alg2_subsample_exact(const PartyInput& a,
                                                            const PartyInput& b,
                                                            const ProtocolConfig& cfg) {
    check_high_error_regime(a, b, cfg.eps);
    u64 n = std::max(a.n_bound, b.n_bound);
    double p = sampling_probability(cfg.c, n, cfg.eps);
    i64 truth = static_cast<i64>(intersection_size(a.set, b.set));

    Prf64 h{derive_seed(cfg.seed, "alg2.shared-h"), std::max<u64>(n, 1)};
    std::vector<u64> sa = shared_subsample(a.set, h, p * static_cast<double>(n));
    std::vector<u64> sb = shared_subsample(b.set, h, p * static_cast<double>(n));

    Transcript tr;
    double size_cap = 10.0 * cfg.c / (cfg.eps * cfg.eps);
    if (static_cast<double>(sa.size()) >= size_cap) {
        tr.add('A', "abort", 1);
        return {make_abort(truth, cfg.eps, n), tr};
    }
    if (static_cast<double>(sb.size()) >= size_cap) {
        tr.add('B', "abort", 1);
        return {make_abort(truth, cfg.eps, n), tr};
    }

    PartyInput pa = PartyInput::make(std::move(sa), n, a.universe);
    PartyInput pb = PartyInput::make(std::move(sb), n, b.universe);
    auto [hit, sub_tr] = exact_intersection_subroutine(pa, pb, cfg.subroutine_cap);
    tr.append(sub_tr);
    if (cfg.newman_private_coins) {
        tr.add('A', "newman-index", newman_adjustment_bits(a.universe, n));
    }
    i64 est = p > 0 ? round_half_away(static_cast<double>(hit) / p) : 0;
    return {make_outcome(est, truth, cfg.eps, n), tr};
}

std::pair<ProtocolOutcome, Transcript> alg3_oneway_composed(const PartyInput& a,
                                                            const PartyInput& b,
                                                            const ProtocolConfig& cfg) {
    check_high_error_regime(a, b, cfg.eps);
    u64 n = std::max(a.n_bound, b.n_bound);
    double p = sampling_probability(cfg.c, n, cfg.eps);
    i64 truth = static_cast<i64>(intersection_size(a.set, b.set));

    Prf64 h{derive_seed(cfg.seed, "alg3.shared-h"), std::max<u64>(n, 1)};
    std::vector<u64> sa = shared_subsample(a.set, h, p * static_cast<double>(n));
    std::vector<u64> sb = shared_subsample(b.set, h, p * static_cast<double>(n));

    Transcript tr;
    double size_cap = 10.0 * cfg.c / (cfg.eps * cfg.eps);
    if (static_cast<double>(sa.size()) >= size_cap) {
        tr.add('A', "abort", 1);
        return {make_abort(truth, cfg.eps, n), tr};
    }
    if (static_cast<double>(sb.size()) >= size_cap) {
        // Bob knows his own sample size from shared randomness alone; in the
        // one-way setting the abort is his output, nothing travels backwards
        return {make_abort(truth, cfg.eps, n), tr};
    }

    // subroutine error budget: inner additive error <= ratio * eps * n * p,
    // so after the 1/p rescale it stays within ratio * eps * n
    double inner_budget = cfg.inner_budget_ratio * cfg.eps * static_cast<double>(n) * p;
    double k_sub = std::max(1.0, size_cap);
    double eps_inner = std::clamp(inner_budget / (2.0 * k_sub), 1e-6, 1.0);

    PartyInput pa = PartyInput::make(std::move(sa), n, a.universe);
    PartyInput pb = PartyInput::make(std::move(sb), n, b.universe);
    auto [inner_out, inner_tr] =
        int_via_f2(pa, pb, eps_inner, derive_seed(cfg.seed, "alg3.inner"),
                   cfg.inner_constant_c);
    tr.append(inner_tr);
    if (cfg.newman_private_coins) {
        tr.add('A', "newman-index", newman_adjustment_bits(a.universe, n));
    }
    i64 est = p > 0 ? round_half_away(static_cast<double>(inner_out.estimate) / p) : 0;
    return {make_outcome(est, truth, cfg.eps, n), tr};
}

std::pair<ProtocolOutcome, Transcript> int_via_f2(const PartyInput& a,
                                                  const PartyInput& b, double eps,
                                                  u64 seed, double constant_c) {
    if (a.universe != b.universe) throw InvalidParam("int_via_f2: universe mismatch");
    u64 n = std::max(a.n_bound, b.n_bound);
    i64 truth = static_cast<i64>(intersection_size(a.set, b.set));

    F2Config cfg;
    cfg.epsilon = eps;
    cfg.constant_c = constant_c;
    cfg.seed = derive_seed(seed, "f2red.hash");
    F2Sketch sk = F2Sketch::make(cfg, std::max<u64>(a.universe, 1));
    for (u64 x : a.set) sk.feed(x);

    Transcript tr;
    double state_bits = ms_info_bits(sk.n_seen(), sk.m()) +
                        sk.hash().description_bits() + size_header_bits(n);
    tr.add('A', "sketch-state", state_bits);

    for (u64 x : b.set) sk.feed(x);
    double z = sk.estimate();
    i64 est = round_half_away(
        (z - static_cast<double>(a.size()) - static_cast<double>(b.size())) / 2.0);
    // the reduction bound: |est - truth| <= 2 eps n when the estimator succeeds
    return {make_outcome(est, truth, 2.0 * eps, n), tr};
}

std::pair<u64, Transcript> exact_intersection_subroutine(const PartyInput& a,
                                                         const PartyInput& b,
                                                         u64 cap) {
    if (a.size() > cap || b.size() > cap)
        throw CapExceeded("exact_intersection_subroutine: sample above cap");
    Transcript tr;
    tr.add('A', "direct-exchange",
           static_cast<double>(a.size()) * bits_per_element(a.universe));
    return {intersection_size(a.set, b.set), tr};
}

std::pair<PartyInput, PartyInput> ghd_blowup(const std::vector<u8>& x,
                                             const std::vector<u8>& y, u64 n) {
    if (x.size() != y.size() || x.empty())
        throw InvalidParam("ghd_blowup: strings must be nonempty and equal length");
    u64 k = x.size();
    if (n % k != 0) throw NotDivisible("ghd_blowup: k must divide n");
    u64 block = n / k;
    std::vector<u64> av, bv;
    av.reserve(n);
    bv.reserve(n);
    for (u64 i = 0; i < k; ++i) {
        for (u64 t = 0; t < block; ++t) {
            av.push_back(static_cast<u64>(x[i]) * n + i * block + t);
            bv.push_back(static_cast<u64>(y[i]) * n + i * block + t);
        }
    }
    std::sort(av.begin(), av.end());
    std::sort(bv.begin(), bv.end());
    return {PartyInput::make(std::move(av), n, 2 * n),
            PartyInput::make(std::move(bv), n, 2 * n)};
}

}  // namespace streamhist
