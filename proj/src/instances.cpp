#include "streamhist/instances.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "streamhist/rng.hpp"

namespace streamhist {

BlockUniformParams BlockUniformParams::from_block_size(u64 n, u64 block_size) {
    if (n < 1 || block_size < 1)
        throw InvalidParam("BlockUniformParams: n and block_size must be >= 1");
    return {n, block_size};
}

BlockUniformParams BlockUniformParams::from_alpha(u64 n, double alpha) {
    if (!(alpha > 0.0 && alpha < 0.5))
        throw InvalidParam("BlockUniformParams: alpha must lie in (0, 1/2)");
    u64 block = static_cast<u64>(
        std::ceil(std::pow(static_cast<double>(n), alpha)));
    return from_block_size(n, std::max<u64>(block, 1));
}

std::vector<u64> sample_block_uniform(const BlockUniformParams& params, u64 seed) {
    Rng rng(derive_seed(seed, "blockuniform"));
    std::vector<u64> out;
    out.reserve(params.n);
    for (u64 i = 0; i < params.n; ++i) {
        out.push_back(i * params.block_size + rng.uniform_below(params.block_size));
    }
    return out;
}

std::pair<std::vector<u64>, std::vector<u64>> sample_disjoint_pair(
    const BlockUniformParams& params, u64 seed) {
    if (params.block_size < 2)
        throw InvalidParam("sample_disjoint_pair: needs block_size >= 2");
    Rng rng(derive_seed(seed, "blockuniform.pair"));
    std::vector<u64> x, y;
    x.reserve(params.n);
    y.reserve(params.n);
    for (u64 i = 0; i < params.n; ++i) {
        u64 base = i * params.block_size;
        u64 a = rng.uniform_below(params.block_size);
        u64 b = rng.uniform_below(params.block_size - 1);
        if (b >= a) ++b;
        x.push_back(base + a);
        y.push_back(base + b);
    }
    return {std::move(x), std::move(y)};
}

u64 default_pairwise_cap(u64 n) {
    return static_cast<u64>(std::ceil(static_cast<double>(n) / 400.0));
}

namespace {

u64 sorted_intersection(const std::vector<u64>& a, const std::vector<u64>& b) {
    u64 m = 0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) ++i;
        else if (a[i] > b[j]) ++j;
        else { ++m; ++i; ++j; }
    }
    return m;
}

}  // namespace

DesignFamily build_design(const BlockUniformParams& params, u64 target_count,
                          u64 max_pairwise, u64 seed, u64 attempt_budget_factor) {
    DesignFamily fam;
    fam.max_pairwise = max_pairwise;
    u64 budget = std::max<u64>(1, attempt_budget_factor) * std::max<u64>(1, target_count);
    for (u64 attempt = 0; attempt < budget && fam.sets.size() < target_count; ++attempt) {
        ++fam.attempts_used;
        std::vector<u64> cand =
            sample_block_uniform(params, derive_seed(seed, "design.attempt", attempt));
        bool ok = true;
        for (const auto& kept : fam.sets) {
            if (sorted_intersection(cand, kept) > max_pairwise) {
                ok = false;
                break;
            }
        }
        if (ok) fam.sets.push_back(std::move(cand));
    }
    if (fam.sets.size() < target_count) {
        double mu = params.mu();
        u64 feasible = static_cast<u64>(std::ceil(mu + 6.0 * std::sqrt(mu)));
        std::ostringstream msg;
        msg << "build_design: kept " << fam.sets.size() << " of " << target_count
            << " sets within cap " << max_pairwise
            << "; expected pairwise intersection is " << mu
            << ", a feasible cap is about " << feasible;
        throw BudgetExhausted(fam.sets.size(), msg.str());
    }
    return fam;
}

PromiseLabel intp_label(u64 intersection, const BlockUniformParams& params,
                        double gap_factor) {
    double mu = params.mu();
    double gap = gap_factor * std::sqrt(mu);
    double z = static_cast<double>(intersection);
    if (z > mu + gap) return PromiseLabel::Yes;
    if (z < mu - gap) return PromiseLabel::No;
    return PromiseLabel::Gap;  // boundary values are excluded by the promise
}

DistinguishResult distinguishing_experiment(const std::vector<u64>& x,
                                            const std::vector<u64>& xp,
                                            const BlockUniformParams& params,
                                            u64 trials, u64 seed,
                                            double gap_factor) {
    u64 span = params.universe_span();
    std::vector<u8> in_x(span, 0), in_xp(span, 0);
    for (u64 v : x) {
        if (v >= span) throw InvalidParam("distinguishing_experiment: X not block-aligned");
        in_x[v] = 1;
    }
    for (u64 v : xp) {
        if (v >= span) throw InvalidParam("distinguishing_experiment: X' not block-aligned");
        in_xp[v] = 1;
    }

    DistinguishResult res;
    res.trials = trials;
    for (u64 t = 0; t < trials; ++t) {
        Rng rng(derive_seed(seed, "distinguish.trial", t));
        u64 zx = 0, zxp = 0;
        for (u64 i = 0; i < params.n; ++i) {
            u64 y = i * params.block_size + rng.uniform_below(params.block_size);
            zx += in_x[y];
            zxp += in_xp[y];
        }
        PromiseLabel lx = intp_label(zx, params, gap_factor);
        PromiseLabel lxp = intp_label(zxp, params, gap_factor);
        if (lx == PromiseLabel::Gap || lxp == PromiseLabel::Gap) ++res.gap_events;
        bool dist = (lx == PromiseLabel::Yes && lxp == PromiseLabel::No) ||
                    (lx == PromiseLabel::No && lxp == PromiseLabel::Yes);
        if (dist) ++res.distinguishing;
    }
    res.rate = trials ? static_cast<double>(res.distinguishing) / trials : 0.0;
    return res;
}

}  // namespace streamhist
