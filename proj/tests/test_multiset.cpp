#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "streamhist/multiset.hpp"
#include "streamhist/rng.hpp"

using namespace streamhist;

namespace {

// oracle: f2 as the number of equal ordered pairs, straight from the stream
u64 brute_f2(const std::vector<u64>& stream) {
    u64 pairs = 0;
    for (u64 a : stream) {
        for (u64 b : stream) {
            if (a == b) ++pairs;
        }
    }
    return pairs;
}

u128 binom_u128(u64 n, u64 k) {
    if (k > n) return 0;
    u128 r = 1;
    for (u64 i = 0; i < k; ++i) {
        r = r * (n - i) / (i + 1);
    }
    return r;
}

}  // namespace

TEST_CASE("insert maintains counts and totals") {
    CompactMultiset ms(10);
    CHECK(ms.total() == 0);
    ms.insert(3);
    CHECK(ms.count_of(3) == 1);
    CHECK(ms.total() == 1);
    ms.insert(3);
    CHECK(ms.count_of(3) == 2);
    CHECK(ms.total() == 2);
    CHECK_THROWS_AS(ms.insert(10), OutOfRange);
    CHECK_THROWS_AS(ms.insert(999), OutOfRange);
}

TEST_CASE("f2 on small fixed multisets") {
    CompactMultiset empty(5);
    CHECK(empty.f2() == 0);

    CompactMultiset distinct(5);
    distinct.insert(1);
    distinct.insert(2);
    distinct.insert(3);
    CHECK(distinct.f2() == 3);

    CompactMultiset mixed(5);
    for (u64 v : {1, 1, 2, 2, 3}) mixed.insert(v);
    CHECK(mixed.f2() == 9);  // 4 + 4 + 1
}

TEST_CASE("f2 agrees with the ordered-pair oracle on random multisets") {
    Rng rng(411);
    for (int trial = 0; trial < 1000; ++trial) {
        u64 range = 1 + rng.uniform_below(30);
        u64 len = rng.uniform_below(50);
        std::vector<u64> stream;
        CompactMultiset ms(range);
        for (u64 i = 0; i < len; ++i) {
            u64 v = rng.uniform_below(range);
            stream.push_back(v);
            ms.insert(v);
        }
        CHECK(ms.f2() == brute_f2(stream));
    }
}

TEST_CASE("insert order never affects f2 or the stored map") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<u64> stream;
        for (int i = 0; i < 64; ++i) stream.push_back(rng.uniform_below(16));
        CompactMultiset a(16);
        for (u64 v : stream) a.insert(v);
        std::mt19937_64 shuffler(trial);
        std::shuffle(stream.begin(), stream.end(), shuffler);
        CompactMultiset b(16);
        for (u64 v : stream) b.insert(v);
        CHECK(a.f2() == b.f2());
        CHECK(a.to_map() == b.to_map());
    }
}

TEST_CASE("grow preserves contents") {
    CompactMultiset ms(100000, 2);
    for (u64 v = 0; v < 5000; ++v) ms.insert(v * 7 % 100000);
    CHECK(ms.total() == 5000);
    CHECK(ms.distinct() == 5000);
    CHECK(ms.f2() == 5000);
}

TEST_CASE("info bits on known binomials") {
    CHECK(ms_info_bits(0, 7) == doctest::Approx(0.0));
    CHECK(ms_info_bits(5, 1) == doctest::Approx(0.0));
    CHECK(ms_info_bits(1, 8) == doctest::Approx(3.0));
    // C(7,4) = 35
    CHECK(ms_info_bits(4, 4) == doctest::Approx(std::log2(35.0)).epsilon(1e-9));
    CHECK_THROWS_AS(ms_info_bits(4, 0), InvalidParam);

    // exact small-case oracle via integer binomials
    for (u64 n = 1; n <= 20; ++n) {
        for (u64 m = 1; m <= 20; ++m) {
            double exact = std::log2(static_cast<double>(binom_u128(n + m - 1, n)));
            CHECK(ms_info_bits(n, m) == doctest::Approx(exact).epsilon(1e-9));
        }
    }
}

TEST_CASE("info bits respect the n log(2 + m/n) storage bound") {
    for (u64 n : {u64(10), u64(1000), u64(100000), u64(1000000)}) {
        for (u64 m : {u64(1), u64(100), u64(10000), u64(1000000)}) {
            double bound = static_cast<double>(n) *
                           (std::log2(2.0 + static_cast<double>(m) / n) + 2.0);
            CHECK(ms_info_bits(n, m) <= bound);
        }
    }
}

TEST_CASE("bit budget reports the ceiled information bound") {
    CompactMultiset ms(4);
    for (u64 v : {0, 1, 1, 3}) ms.insert(v);
    BitBudget b = ms.bit_budget("table");
    CHECK(b.label == "table");
    CHECK(b.content_bits == doctest::Approx(std::ceil(ms_info_bits(4, 4))));
    CHECK(b.content_bits >= 0.0);
    CHECK(b.total() >= b.content_bits);
}
