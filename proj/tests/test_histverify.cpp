#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "streamhist/histverify.hpp"
#include "streamhist/rng.hpp"

using namespace streamhist;

namespace {

FingerprintHistogram hist_of(std::initializer_list<std::pair<u64, u64>> entries,
                             unsigned width = 8) {
    FingerprintHistogram h(width);
    for (auto [fp, c] : entries) h.add_entry(fp, c);
    return h;
}

}  // namespace

TEST_CASE("first arrival moves both accumulators by h(x)") {
    const u64 q = 101;
    KWiseHash h = KWiseHash::make(2, 50, q, 7);
    FingerprintHistogram hist = hist_of({{3, 1}});
    VerifyAccumulators acc{0, 0, q};
    verify_step(acc, 10, 3, hist, h);
    u64 hx = h.eval(10) % q;
    CHECK(acc.acc_true == hx);
    CHECK(acc.acc_hist == hx);
    CHECK(verify_decide(acc));
}

TEST_CASE("repeat fingerprints only move accTrue") {
    const u64 q = 101;
    KWiseHash h = KWiseHash::make(2, 50, q, 8);
    FingerprintHistogram hist = hist_of({{3, 2}});
    VerifyAccumulators acc{0, 0, q};
    verify_step(acc, 10, 3, hist, h);
    u64 after_first_hist = acc.acc_hist;
    verify_step(acc, 10, 3, hist, h);
    CHECK(acc.acc_hist == after_first_hist);
    CHECK(acc.acc_true == 2 * (h.eval(10) % q) % q);
}

TEST_CASE("colliding pair evaluates TrueSum=z_a+z_b against HistSum=2*z_a") {
    const u64 q = 1009;
    KWiseHash h = KWiseHash::make(2, 50, q, 55);
    // stream [a, b] where both share fingerprint 4 with counter 2
    FingerprintHistogram hist = hist_of({{4, 2}});
    VerifyAccumulators acc{0, 0, q};
    u64 a = 12, b = 37;
    verify_step(acc, a, 4, hist, h);
    verify_step(acc, b, 4, hist, h);
    CHECK(acc.acc_true == (h.eval(a) + h.eval(b)) % q);
    CHECK(acc.acc_hist == 2 * h.eval(a) % q);
}

TEST_CASE("exhaustive q=7 soundness: accept rate is exactly 1/7") {
    // the degree-1 hash sweeps all (h(a), h(b)) pairs in [7]^2 exactly once
    const u64 q = 7;
    u64 accepts = 0, total = 0;
    for (u64 c0 = 0; c0 < q; ++c0) {
        for (u64 c1 = 0; c1 < q; ++c1) {
            KWiseHash h = KWiseHash::from_coeffs({c0, c1}, q, 50, q);
            FingerprintHistogram hist = hist_of({{4, 2}});
            VerifyAccumulators acc{0, 0, q};
            verify_step(acc, 1, 4, hist, h);
            verify_step(acc, 2, 4, hist, h);
            ++total;
            if (verify_decide(acc)) ++accepts;
        }
    }
    CHECK(total == 49);
    CHECK(accepts == 7);  // h(b) == h(a)
}

TEST_CASE("empty bucket verifies true") {
    VerifyAccumulators acc{0, 0, 101};
    CHECK(verify_decide(acc));
}

TEST_CASE("completeness: injective fingerprints always accept") {
    Rng rng(2718);
    const u64 q = 1009;
    for (int trial = 0; trial < 1000; ++trial) {
        KWiseHash h = KWiseHash::make(2, 1000, q, derive_seed(3, "complete", trial));
        FingerprintHistogram hist(10);
        u64 m = 1 + rng.uniform_below(20);
        std::vector<std::pair<u64, u64>> elems;  // (element, count), fp = element
        for (u64 i = 0; i < m; ++i) elems.push_back({i * 13 % 997, 1 + rng.uniform_below(4)});
        for (auto [x, c] : elems) hist.add_entry(x % 1024, c);
        VerifyAccumulators acc{0, 0, q};
        for (auto [x, c] : elems) {
            for (u64 k = 0; k < c; ++k) verify_step(acc, x, x % 1024, hist, h);
        }
        CHECK(verify_decide(acc));
        hist.reset_flags();
    }
}

TEST_CASE("soundness at q=1009 over 10^4 seeds stays under 2/q") {
    const u64 q = 1009;
    u64 accepts = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
        KWiseHash h = KWiseHash::make(2, 50, q, derive_seed(17, "sound", t));
        FingerprintHistogram hist = hist_of({{4, 2}});
        VerifyAccumulators acc{0, 0, q};
        verify_step(acc, 1, 4, hist, h);
        verify_step(acc, 2, 4, hist, h);
        if (verify_decide(acc)) ++accepts;
    }
    double rate = static_cast<double>(accepts) / trials;
    CHECK(rate <= 2.0 / static_cast<double>(q));
}

TEST_CASE("flags reset between passes reproduce identical decisions") {
    const u64 q = 101;
    KWiseHash h = KWiseHash::make(2, 50, q, 4);
    FingerprintHistogram hist = hist_of({{1, 1}, {2, 3}});
    auto run_pass = [&]() {
        hist.reset_flags();
        VerifyAccumulators acc{0, 0, q};
        verify_step(acc, 5, 1, hist, h);
        for (int i = 0; i < 3; ++i) verify_step(acc, 9, 2, hist, h);
        return verify_decide(acc);
    };
    bool first = run_pass();
    bool second = run_pass();
    CHECK(first == second);
    CHECK(first == true);
}

TEST_CASE("unknown fingerprints are a histogram/stream mismatch") {
    const u64 q = 101;
    KWiseHash h = KWiseHash::make(2, 50, q, 4);
    FingerprintHistogram hist = hist_of({{1, 1}});
    VerifyAccumulators acc{0, 0, q};
    CHECK_THROWS_AS(verify_step(acc, 5, 99, hist, h), UnknownFingerprint);
}

TEST_CASE("histogram edit helpers used by the two-pass correction") {
    FingerprintHistogram hist = hist_of({{0, 5}, {2, 1}});
    hist.subtract(0, 2);
    CHECK(hist.count_of(0) == 3);
    hist.subtract(2, 1);  // removed at zero
    CHECK(hist.find(2) == nullptr);
    CHECK(hist.smallest_unused_fingerprint(4).value() == 1);
    hist.add_entry(1, 7);
    hist.add_entry(2, 7);
    hist.add_entry(3, 7);
    CHECK_FALSE(hist.smallest_unused_fingerprint(4).has_value());
}
