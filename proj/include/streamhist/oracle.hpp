#pragma once

#include "streamhist/multipass.hpp"
#include "streamhist/stream_io.hpp"

namespace streamhist {

// Reference computations with full access to element names. These back the
// test oracles and run audits; algorithm code never calls them.

std::unordered_map<u64, u64> oracle_histogram(const StreamSource& stream);

// buckets whose element sets contain a true fingerprint collision under the
// plan's hashes
std::vector<u64> buckets_with_true_collisions(const StreamSource& stream,
                                              const BucketingPlan& plan);

// the discrepancy polynomial TrueSum - HistSum computed directly from the
// stream: coefficient of x is f_x minus the histogram count claimed for x
// (nonzero only for the first element of its fingerprint class)
DiscrepancyPolynomial oracle_discrepancy(const StreamSource& stream,
                                         const BucketingPlan& plan);

}  // namespace streamhist
