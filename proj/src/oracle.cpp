#include "streamhist/oracle.hpp"

#include <map>
#include <set>

namespace streamhist {

std::unordered_map<u64, u64> oracle_histogram(const StreamSource& stream) {
    std::unordered_map<u64, u64> freq;
    freq.reserve(stream.length());
    stream.replay([&](u64 x) { ++freq[x]; });
    return freq;
}

std::vector<u64> buckets_with_true_collisions(const StreamSource& stream,
                                              const BucketingPlan& plan) {
    // (bucket, fingerprint) -> set of distinct elements
    std::map<std::pair<u64, u64>, std::set<u64>> classes;
    stream.replay([&](u64 x) {
        u64 j = plan.bucket_of(x);
        classes[{j, plan.fingerprint_of(j, x)}].insert(x);
    });
    std::set<u64> bad;
    for (const auto& [key, elems] : classes) {
        if (elems.size() > 1) bad.insert(key.first);
    }
    return {bad.begin(), bad.end()};
}

DiscrepancyPolynomial oracle_discrepancy(const StreamSource& stream,
                                         const BucketingPlan& plan) {
    std::unordered_map<u64, u64> freq = oracle_histogram(stream);
    // first element of each (bucket, fingerprint) class, in stream order
    std::map<std::pair<u64, u64>, u64> first_elem;
    std::map<std::pair<u64, u64>, u64> class_total;
    stream.replay([&](u64 x) {
        u64 j = plan.bucket_of(x);
        auto key = std::make_pair(j, plan.fingerprint_of(j, x));
        first_elem.emplace(key, x);
        ++class_total[key];
    });
    DiscrepancyPolynomial delta;
    for (const auto& [x, fx] : freq) {
        u64 j = plan.bucket_of(x);
        auto key = std::make_pair(j, plan.fingerprint_of(j, x));
        u64 claimed = first_elem[key] == x ? class_total[key] : 0;
        delta.set(x, static_cast<i64>(fx) - static_cast<i64>(claimed));
    }
    return delta;
}

}  // namespace streamhist
