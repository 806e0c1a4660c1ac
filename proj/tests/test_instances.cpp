#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "streamhist/instances.hpp"
#include "streamhist/rng.hpp"

using namespace streamhist;

namespace {

u64 sorted_isect(const std::vector<u64>& a, const std::vector<u64>& b) {
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

TEST_CASE("block-uniform samples pick exactly one element per block") {
    auto params = BlockUniformParams::from_block_size(4, 2);
    for (u64 s = 0; s < 50; ++s) {
        auto x = sample_block_uniform(params, s);
        REQUIRE(x.size() == 4);
        for (u64 i = 0; i < 4; ++i) {
            CHECK(x[i] >= 2 * i);
            CHECK(x[i] < 2 * (i + 1));
        }
    }
    // degenerate blocks: X = [n] deterministically
    auto unit = BlockUniformParams::from_block_size(6, 1);
    auto x = sample_block_uniform(unit, 9);
    CHECK(x == std::vector<u64>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("alpha parameterization rounds the block size up") {
    auto p = BlockUniformParams::from_alpha(4096, 1.0 / 3.0);
    CHECK(p.block_size == 16);
    CHECK(p.universe_span() == 4096 * 16);
    CHECK_THROWS_AS(BlockUniformParams::from_alpha(100, 0.7), InvalidParam);
}

TEST_CASE("mean pairwise intersection tracks n^(1-alpha)") {
    auto params = BlockUniformParams::from_block_size(1 << 12, 1 << 4);
    const u64 trials = 1000;
    double sum = 0;
    for (u64 t = 0; t < trials; ++t) {
        auto x = sample_block_uniform(params, derive_seed(1, "meanA", t));
        auto y = sample_block_uniform(params, derive_seed(2, "meanB", t));
        sum += static_cast<double>(sorted_isect(x, y));
    }
    double mean = sum / trials;
    double mu = params.mu();  // 256
    double sigma_mean = std::sqrt(mu * (1.0 - 1.0 / 16.0) / trials);
    CHECK(std::fabs(mean - mu) <= 3.0 * sigma_mean);
}

TEST_CASE("design families respect their declared cap") {
    auto params = BlockUniformParams::from_block_size(1 << 10, 1 << 5);
    // mu = 32, so a cap of 64 is comfortably feasible
    DesignFamily fam = build_design(params, 10, 64, 5);
    REQUIRE(fam.sets.size() == 10);
    CHECK(fam.max_pairwise == 64);
    for (size_t i = 0; i < fam.sets.size(); ++i) {
        for (size_t j = i + 1; j < fam.sets.size(); ++j) {
            CHECK(sorted_isect(fam.sets[i], fam.sets[j]) <= 64);
        }
    }
}

TEST_CASE("single-set targets always succeed; vacuous caps keep everything") {
    auto params = BlockUniformParams::from_block_size(256, 4);
    DesignFamily one = build_design(params, 1, default_pairwise_cap(256), 3);
    CHECK(one.sets.size() == 1);
    CHECK(one.attempts_used == 1);
    DesignFamily all = build_design(params, 8, 256, 4);
    CHECK(all.sets.size() == 8);
    CHECK(all.attempts_used == 8);  // every sample kept
}

TEST_CASE("infeasible caps exhaust the budget and report progress") {
    // mu = 32 but the default cap is ceil(1024/400) = 3
    auto params = BlockUniformParams::from_block_size(1 << 10, 1 << 5);
    u64 cap = default_pairwise_cap(1 << 10);
    CHECK(cap == 3);
    try {
        build_design(params, 2, cap, 11, 50);
        FAIL("expected BudgetExhausted");
    } catch (const BudgetExhausted& e) {
        CHECK(e.kept == 1);  // the first sample is always kept
        CHECK(std::string(e.what()).find("feasible cap") != std::string::npos);
    }
}

TEST_CASE("promise labels honor the gap") {
    auto params = BlockUniformParams::from_block_size(16, 4);  // mu = 4, gap = 1
    CHECK(intp_label(6, params) == PromiseLabel::Yes);
    CHECK(intp_label(5, params) == PromiseLabel::Gap);  // exactly mu + gap
    CHECK(intp_label(4, params) == PromiseLabel::Gap);
    CHECK(intp_label(3, params) == PromiseLabel::Gap);  // exactly mu - gap
    CHECK(intp_label(2, params) == PromiseLabel::No);
}

TEST_CASE("identical sets never distinguish, even with zero gap") {
    auto params = BlockUniformParams::from_block_size(256, 4);
    auto x = sample_block_uniform(params, 77);
    auto r = distinguishing_experiment(x, x, params, 500, 3);
    CHECK(r.distinguishing == 0);
    CHECK(r.rate == 0.0);
    auto r0 = distinguishing_experiment(x, x, params, 500, 3, 0.0);
    CHECK(r0.rate == 0.0);
}

TEST_CASE("disjoint pairs distinguish at a measurable rate") {
    auto params = BlockUniformParams::from_block_size(1 << 12, 1 << 4);
    auto [x, xp] = sample_disjoint_pair(params, 12);
    CHECK(sorted_isect(x, xp) == 0);
    auto r = distinguishing_experiment(x, xp, params, 2000, 8);
    CHECK(r.trials == 2000);
    CHECK(r.rate >= 0.01);
    CHECK(r.gap_events + r.distinguishing <= 2 * r.trials);
}
