#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include "streamhist/multipass.hpp"
#include "streamhist/oracle.hpp"
#include "streamhist/rng.hpp"

using namespace streamhist;

namespace {

VectorStream make_stream(std::vector<u64> data, u64 universe) {
    return VectorStream(std::move(data), universe);
}

bool equals_oracle(const std::unordered_map<u64, u64>& got, const StreamSource& s) {
    auto want = oracle_histogram(s);
    return got == want;
}

}  // namespace

TEST_CASE("bucketing plan derives the default parameters with rounding") {
    BucketingPlan plan = BucketingPlan::make(4096, 4096ULL * 4096, 1);
    CHECK(plan.num_buckets == 342);  // ceil(4096 / 12)
    CHECK(plan.b.k == 72);           // ceil(6 * 12)
    CHECK(plan.fp_width == 36);      // ceil(10 * log2(12))
    CHECK(plan.g.size() == plan.num_buckets);
    // tiny n stays clamped
    BucketingPlan tiny = BucketingPlan::make(1, 4, 1);
    CHECK(tiny.num_buckets >= 1);
    CHECK(tiny.fp_width >= 1);
}

TEST_CASE("three passes recover an all-distinct stream exactly") {
    std::vector<u64> data(256);
    for (u64 i = 0; i < 256; ++i) data[i] = i * 37 % 65536;
    VectorStream s = make_stream(data, 65536);
    MultipassConfig cfg;
    cfg.seed = 99;
    auto res = three_pass_histogram(s, cfg);
    CHECK(equals_oracle(res.histogram, s));
    CHECK(res.failed_buckets.empty());
}

TEST_CASE("three passes on duplicated generator streams match the oracle") {
    for (double dup : {0.0, 0.3, 0.9}) {
        StreamGenSpec spec{2048, 0, dup, derive_seed(5, "3p", u64(dup * 10))};
        VectorStream s = make_stream(generate_stream(spec), spec.effective_universe());
        MultipassConfig cfg;
        cfg.seed = 7;
        auto res = three_pass_histogram(s, cfg);
        CHECK(equals_oracle(res.histogram, s));
    }
}

TEST_CASE("a rigged collision is caught, rebuilt by full name, and corrected") {
    // two elements forced into bucket 0 with equal fingerprints, unequal counts
    std::vector<u64> data{11, 11, 22, 33, 44};
    VectorStream s = make_stream(data, 100);
    MultipassConfig cfg;
    cfg.seed = 123;
    cfg.abort_threshold = 100;  // toy n collapses the default to 1
    cfg.overrides.bucket[11] = 0;
    cfg.overrides.bucket[22] = 0;
    cfg.overrides.fingerprint[11] = 5;
    cfg.overrides.fingerprint[22] = 5;
    auto res = three_pass_histogram(s, cfg);
    CHECK(std::count(res.failed_buckets.begin(), res.failed_buckets.end(), 0) == 1);
    CHECK(equals_oracle(res.histogram, s));
    CHECK(res.ledger.fullname_entries >= 2);

    // oracle audit agrees bucket 0 truly collides
    auto bad = buckets_with_true_collisions(s, res.plan);
    CHECK(std::count(bad.begin(), bad.end(), 0) == 1);
}

TEST_CASE("abort threshold zero turns any failure into Aborted") {
    std::vector<u64> data{11, 11, 22};
    VectorStream s = make_stream(data, 100);
    MultipassConfig cfg;
    cfg.seed = 123;
    cfg.abort_threshold = 0;
    cfg.overrides.bucket[11] = 0;
    cfg.overrides.bucket[22] = 0;
    cfg.overrides.fingerprint[11] = 5;
    cfg.overrides.fingerprint[22] = 5;
    CHECK_THROWS_AS(three_pass_histogram(s, cfg), Aborted);
}

TEST_CASE("force-all-failed rebuilds everything by full name and stays exact") {
    StreamGenSpec spec{512, 0, 0.4, 71};
    VectorStream s = make_stream(generate_stream(spec), spec.effective_universe());
    MultipassConfig cfg;
    cfg.seed = 3;
    cfg.abort_threshold = ~u64(0);
    cfg.overrides.force_all_verify_fail = true;
    auto res = three_pass_histogram(s, cfg);
    CHECK(equals_oracle(res.histogram, s));
    CHECK(res.ledger.fingerprint_bits() == 0.0);
    CHECK(res.ledger.fullname_entries == oracle_histogram(s).size());
}

TEST_CASE("three-pass ledger categories") {
    VectorStream empty = make_stream({}, 16);
    MultipassConfig cfg;
    cfg.n = 16;
    auto res = three_pass_histogram(empty, cfg);
    CHECK(res.ledger.fingerprint_bits() == 0.0);
    CHECK(res.ledger.fullname_bits() == 0.0);
    CHECK(res.ledger.counter_bits == 0.0);
    CHECK(res.ledger.hash_bits > 0.0);

    StreamGenSpec spec{1 << 16, 0, 0.0, 2};
    VectorStream s = make_stream(generate_stream(spec), spec.effective_universe());
    MultipassConfig big;
    big.seed = 2;
    auto r2 = three_pass_histogram(s, big);
    // collision-free run: every distinct element is one fingerprint entry
    CHECK(r2.ledger.fingerprint_bits() <= 65536.0 * 40);  // n * 10 log2 log2 n
    CHECK(r2.ledger.counter_bits == 65536.0);
}

TEST_CASE("candidate enumeration is canonical, total, and deterministic") {
    CandidateEnumerator en(3, 2, 1);
    std::vector<DiscrepancyPolynomial> all;
    DiscrepancyPolynomial p;
    while (en.next(p)) all.push_back(p);
    // 1 + C(3,1)*2 + C(3,2)*4 = 19
    CHECK(all.size() == 19);
    CHECK(all[0].coeffs.empty());
    CHECK(all[1].coeffs == std::map<u64, i64>{{0, -1}});
    CHECK(all[2].coeffs == std::map<u64, i64>{{0, 1}});
    CHECK(all[3].coeffs == std::map<u64, i64>{{1, -1}});
    CHECK(all[6].coeffs == std::map<u64, i64>{{2, 1}});
    CHECK(all[7].coeffs == std::map<u64, i64>{{0, -1}, {1, -1}});
    CHECK(all[8].coeffs == std::map<u64, i64>{{0, -1}, {1, 1}});
    CHECK(all[18].coeffs == std::map<u64, i64>{{1, 1}, {2, 1}});

    CandidateEnumerator en2(3, 2, 1);
    std::vector<DiscrepancyPolynomial> again;
    while (en2.next(p)) again.push_back(p);
    REQUIRE(again.size() == all.size());
    for (size_t i = 0; i < all.size(); ++i) CHECK(again[i].coeffs == all[i].coeffs);
}

TEST_CASE("enumeration count matches the closed formula up to |U|=8, s<=3, b<=3") {
    for (u64 u = 1; u <= 8; ++u) {
        for (u64 s = 0; s <= 3; ++s) {
            for (i64 b = 1; b <= 3; ++b) {
                CandidateEnumerator en(u, s, b);
                DiscrepancyPolynomial p;
                u64 count = 0;
                while (en.next(p)) ++count;
                CHECK(static_cast<double>(count) ==
                      CandidateEnumerator::count_exact(u, s, b));
            }
        }
    }
}

TEST_CASE("two passes on a collision-free toy stream recover the zero polynomial") {
    std::vector<u64> data{0, 1, 2, 3, 4, 5};
    VectorStream s = make_stream(data, 6);
    TwoPassConfig cfg;
    cfg.sparsity = 2;
    cfg.coeff_bound = 3;
    cfg.seed = 10;
    auto res = two_pass_histogram(s, cfg);
    CHECK(res.residue == 0);
    CHECK(res.recovered.coeffs.empty());
    CHECK(res.candidates_tested == 1);  // the zero polynomial is first
    CHECK(equals_oracle(res.histogram, s));
}

TEST_CASE("two passes recover a rigged collision coefficient-for-coefficient") {
    // elements 1 (count 2, first) and 5 (count 1) share bucket 0, fingerprint 9
    std::vector<u64> data{1, 5, 1, 7, 3};
    VectorStream s = make_stream(data, 8);
    TwoPassConfig cfg;
    cfg.n = 64;  // large q = smallest prime > 3^64
    cfg.sparsity = 3;
    cfg.coeff_bound = 3;
    cfg.seed = 77;
    cfg.overrides.bucket[1] = 0;
    cfg.overrides.bucket[5] = 0;
    cfg.overrides.fingerprint[1] = 9;
    cfg.overrides.fingerprint[5] = 9;
    cfg.overrides.bucket[7] = 1;  // keep bucket 0 to the rigged pair
    cfg.overrides.bucket[3] = 1;
    auto res = two_pass_histogram(s, cfg);

    auto delta = oracle_discrepancy(s, res.plan);
    CHECK(res.recovered.same_coeffs(delta));
    // TrueSum - HistSum: +count on the shadowed element, -count on the first
    CHECK(res.recovered.coeff(5) == 1);
    CHECK(res.recovered.coeff(1) == -1);
    CHECK(res.recovered.coeffs.size() == 2);
    CHECK(equals_oracle(res.histogram, s));

    // corrected bucket structure: the multiset of counts matches the truth
    std::multiset<u64> counts;
    for (const auto& e : res.corrected_histograms[0].entries()) counts.insert(e.count);
    for (const auto& [x, c] : res.corrected_fullname[0]) counts.insert(c);
    CHECK(counts == std::multiset<u64>{1, 2});
}

TEST_CASE("two-pass q override to 5 still terminates, possibly wrongly") {
    std::vector<u64> data{1, 5, 1, 7, 3};
    VectorStream s = make_stream(data, 8);
    u64 wrong = 0, aborted = 0;
    for (u64 t = 0; t < 50; ++t) {
        TwoPassConfig cfg;
        cfg.sparsity = 3;
        cfg.coeff_bound = 3;
        cfg.seed = derive_seed(4, "tinyq", t);
        cfg.q_override = FieldModulus::from_u64(5);
        cfg.overrides.bucket[1] = 0;
        cfg.overrides.bucket[5] = 0;
        cfg.overrides.fingerprint[1] = 9;
        cfg.overrides.fingerprint[5] = 9;
        try {
            auto res = two_pass_histogram(s, cfg);
            if (!equals_oracle(res.histogram, s)) ++wrong;
        } catch (const NoCandidateMatched&) {
            ++aborted;
        }
    }
    // with q=5 the soundness bound |D|/q is vacuous; just record behavior
    CHECK(wrong + aborted <= 50);
}

TEST_CASE("enumeration cap trips before any pass") {
    std::vector<u64> data{1, 2, 3};
    VectorStream s = make_stream(data, 1 << 20);
    TwoPassConfig cfg;
    cfg.sparsity = 3;
    cfg.coeff_bound = 3;
    cfg.enum_cap = 10;
    CHECK_THROWS_AS(two_pass_histogram(s, cfg), EnumerationCapExceeded);
}

TEST_CASE("no candidate match aborts") {
    // rig a collision but allow only the zero polynomial as a candidate
    std::vector<u64> data{1, 5};
    VectorStream s = make_stream(data, 8);
    TwoPassConfig cfg;
    cfg.n = 32;
    cfg.sparsity = 0;
    cfg.coeff_bound = 1;
    cfg.seed = 9;
    cfg.overrides.bucket[1] = 0;
    cfg.overrides.bucket[5] = 0;
    cfg.overrides.fingerprint[1] = 9;
    cfg.overrides.fingerprint[5] = 9;
    CHECK_THROWS_AS(two_pass_histogram(s, cfg), NoCandidateMatched);
}

TEST_CASE("tree config iterates logs and limits depth") {
    TreeConfig tc = TreeConfig::make(3, 1 << 16, 1 << 20);
    CHECK(tc.level_values == std::vector<u64>{65536, 16, 4, 2});
    CHECK(tc.nodes_at[0] == 32768);  // ceil(n / L_3)
    CHECK(tc.nodes_at[3] == 1);
    CHECK_THROWS_AS(TreeConfig::make(4, 1 << 16, 1 << 20), DepthTooLarge);
    for (const auto& q : tc.q_level) CHECK(is_prime_u64(q.q64()));
}

TEST_CASE("M and D aggregate leaf histograms structurally") {
    TreeConfig tc = TreeConfig::make(1, 64, 4096);
    RPassState st;
    st.config = tc;
    st.leaves.assign(tc.leaves(), FingerprintHistogram(8));
    st.leaves[0].add_entry(1, 3);
    st.leaves[0].add_entry(2, 1);
    CHECK(st.compute_M(0, 0) == 4);
    CHECK(st.compute_D(0, 0) == 2);
    CHECK(st.compute_M(0, 1) == 0);
    CHECK(st.compute_D(0, 1) == 0);
    // root aggregates all leaves
    st.leaves[3].add_entry(9, 5);
    u64 total = 0;
    for (u64 u = 0; u < tc.leaves(); ++u) total += st.compute_M(0, u);
    CHECK(st.compute_M(1, 0) == total);
}

TEST_CASE("r=1 matches the oracle and uses 3 passes") {
    StreamGenSpec spec{4096, 0, 0.3, 21};
    VectorStream s = make_stream(generate_stream(spec), spec.effective_universe());
    RPassConfig cfg;
    cfg.r = 1;
    cfg.seed = 5;
    auto res = r_pass_histogram(s, cfg);
    CHECK(res.passes == 3);
    CHECK(equals_oracle(res.histogram, s));

    RPassConfig cfg2;
    cfg2.r = 2;
    cfg2.seed = 5;
    auto res2 = r_pass_histogram(s, cfg2);
    CHECK(res2.passes == 5);
    CHECK(equals_oracle(res2.histogram, s));
}

TEST_CASE("huge fields and no rigs touch no rebuild pass") {
    StreamGenSpec spec{4096, 0, 0.5, 31};
    VectorStream s = make_stream(generate_stream(spec), spec.effective_universe());
    RPassConfig cfg;
    cfg.r = 2;
    cfg.seed = 11;
    cfg.force_huge_fields = true;
    auto res = r_pass_histogram(s, cfg);
    for (u64 rebuilt : res.rebuilt_leaves_at_step) CHECK(rebuilt == 0);
    CHECK(equals_oracle(res.histogram, s));
}

TEST_CASE("a heavy leaf is marked failed without the verifier and rebuilt") {
    std::vector<u64> data;
    for (u64 i = 0; i < 64; ++i) data.push_back(i % 8);
    VectorStream s = make_stream(data, 4096);
    RPassConfig cfg;
    cfg.r = 1;
    cfg.seed = 13;
    cfg.leaf_heavy_threshold_override = 2;
    for (u64 x = 0; x < 8; ++x) cfg.overrides.bucket[x] = 0;  // all in leaf 0
    auto res = r_pass_histogram(s, cfg);
    CHECK(res.failed_nodes_at_step[0] >= 1);
    CHECK(res.rebuilt_leaves_at_step[0] >= 1);
    CHECK(equals_oracle(res.histogram, s));
}

TEST_CASE("a rigged generation-0 collision is repaired by the rebuild") {
    std::vector<u64> data{10, 20, 10, 30, 40, 50};
    VectorStream s = make_stream(data, 4096);
    RPassConfig cfg;
    cfg.r = 1;
    cfg.seed = 17;
    cfg.overrides.bucket[10] = 0;
    cfg.overrides.bucket[20] = 0;
    cfg.overrides.fingerprint[10] = 3;
    cfg.overrides.fingerprint[20] = 3;
    auto res = r_pass_histogram(s, cfg);
    CHECK(res.failed_nodes_at_step[0] >= 1);
    CHECK(res.rebuilt_leaves_at_step[0] >= 1);
    CHECK(equals_oracle(res.histogram, s));
}

TEST_CASE("light buckets and few collisions at n = 2^14, default widths") {
    // the two load predicates behind the three-pass analysis, checked empirically
    const u64 n = 1 << 14;
    const u64 runs = 100;
    u64 light_ok = 0, collision_free = 0;
    double lg = clamped_log2(static_cast<double>(n));
    u64 light_limit = static_cast<u64>(std::ceil(6.0 * lg));
    u64 collision_threshold = std::max<u64>(
        1, static_cast<u64>(std::ceil(n / std::pow(lg, 6.0))));
    for (u64 t = 0; t < runs; ++t) {
        StreamGenSpec spec{n, 0, 0.2, derive_seed(88, "pred.stream", t)};
        VectorStream s = VectorStream(generate_stream(spec), spec.effective_universe());
        BucketingPlan plan =
            BucketingPlan::make(n, s.universe(), derive_seed(88, "pred.plan", t));

        std::unordered_map<u64, std::set<u64>> distinct_per_bucket;
        s.replay([&](u64 x) { distinct_per_bucket[plan.bucket_of(x)].insert(x); });
        u64 max_distinct = 0;
        for (const auto& [j, elems] : distinct_per_bucket)
            max_distinct = std::max<u64>(max_distinct, elems.size());
        if (max_distinct <= light_limit) ++light_ok;

        if (buckets_with_true_collisions(s, plan).size() < collision_threshold)
            ++collision_free;
    }
    CHECK(light_ok >= 99);
    CHECK(collision_free >= 99);
}

TEST_CASE("failed buckets charge full names at ceil(log2 |U|) bits") {
    std::vector<u64> data{11, 11, 22, 33};
    VectorStream s(data, 100);
    MultipassConfig cfg;
    cfg.seed = 5;
    cfg.abort_threshold = 100;
    cfg.overrides.bucket[11] = 0;
    cfg.overrides.bucket[22] = 0;
    cfg.overrides.fingerprint[11] = 5;
    cfg.overrides.fingerprint[22] = 5;
    auto res = three_pass_histogram(s, cfg);
    REQUIRE(res.ledger.fullname_entries > 0);
    CHECK(res.ledger.fullname_width == 7);  // ceil(log2 101)
    CHECK(res.ledger.fullname_bits() ==
          static_cast<double>(res.ledger.fullname_entries) * 7.0);
}

TEST_CASE("generator streams replay identically") {
    StreamGenSpec spec{1000, 0, 0.5, 2024};
    GeneratorStream g(spec);
    CHECK(g.checksum() == g.checksum());
    VectorStream v = make_stream(generate_stream(spec), spec.effective_universe());
    CHECK(g.checksum() == v.checksum());
}

TEST_CASE("two-pass default field sits between 3^n and 2*3^n") {
    FieldModulus q = two_pass_default_q(40);
    CHECK(q.q > pow3(40));
    CHECK(q.q < 2 * pow3(40));
    CHECK(is_prime_wide(q.q));
    // the exponent cap keeps the width under 256 bits
    FieldModulus big = two_pass_default_q(100000);
    CHECK(big.q > pow3(150));
    CHECK(big.width <= 256);
}
