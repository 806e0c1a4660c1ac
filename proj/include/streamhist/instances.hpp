#pragma once

#include <vector>

#include "streamhist/common.hpp"

namespace streamhist {

struct BudgetExhausted : Error {
    u64 kept;
    BudgetExhausted(u64 kept_count, const std::string& what)
        : Error(what), kept(kept_count) {}
};

struct BlockUniformParams {
    u64 n = 0;           // number of blocks = set size
    u64 block_size = 1;  // n^alpha, rounded up

    static BlockUniformParams from_block_size(u64 n, u64 block_size);
    // alpha specified indirectly so blocks stay integral
    static BlockUniformParams from_alpha(u64 n, double alpha);

    u64 universe_span() const { return n * block_size; }
    double mu() const {  // expected |X n Y| for two independent samples
        return static_cast<double>(n) / static_cast<double>(block_size);
    }
};

// one uniform element per block; output sorted by construction
std::vector<u64> sample_block_uniform(const BlockUniformParams& params, u64 seed);

// second sample avoiding the first in every block (disjoint by construction)
std::pair<std::vector<u64>, std::vector<u64>> sample_disjoint_pair(
    const BlockUniformParams& params, u64 seed);

u64 default_pairwise_cap(u64 n);  // ceil(n / 400)

struct DesignFamily {
    std::vector<std::vector<u64>> sets;
    u64 max_pairwise = 0;
    u64 attempts_used = 0;
};

// Greedy rejection sampling: keep a block-uniform sample only if it meets the
// pairwise cap against everything kept so far. Throws BudgetExhausted (with
// the achieved count) when attempts run out.
DesignFamily build_design(const BlockUniformParams& params, u64 target_count,
                          u64 max_pairwise, u64 seed,
                          u64 attempt_budget_factor = 50);

enum class PromiseLabel { Yes, No, Gap };

// Yes iff |X n Y| > mu + gap_factor*sqrt(mu), No iff < mu - gap_factor*sqrt(mu);
// values at or between the thresholds fall in the promise gap.
PromiseLabel intp_label(u64 intersection, const BlockUniformParams& params,
                        double gap_factor = 0.5);

struct DistinguishResult {
    u64 trials = 0;
    u64 distinguishing = 0;  // one of (X,Y),(X',Y) labeled Yes, the other No
    u64 gap_events = 0;      // trials where either pair fell in the promise gap
    double rate = 0;
};

DistinguishResult distinguishing_experiment(const std::vector<u64>& x,
                                            const std::vector<u64>& xp,
                                            const BlockUniformParams& params,
                                            u64 trials, u64 seed,
                                            double gap_factor = 0.5);

}  // namespace streamhist
