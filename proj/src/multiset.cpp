#include "streamhist/multiset.hpp"

#include <cmath>

namespace streamhist {

double ms_info_bits(u64 n, u64 m) {
    if (m < 1) throw InvalidParam("ms_info_bits: m must be >= 1");
    if (n == 0 || m == 1) return 0.0;
    // log2 C(n+m-1, n) via log-gamma to avoid overflow
    double a = std::lgamma(static_cast<double>(n + m));
    double b = std::lgamma(static_cast<double>(n + 1));
    double c = std::lgamma(static_cast<double>(m));
    return (a - b - c) / std::log(2.0);
}

BitBudget CompactMultiset::bit_budget(std::string label) const {
    BitBudget budget;
    budget.label = std::move(label);
    budget.content_bits = std::ceil(ms_info_bits(total_, range_));
    // self-description: the (n, m) header
    budget.overhead_bits = std::ceil(std::log2(static_cast<double>(total_ + 2))) +
                           std::ceil(std::log2(static_cast<double>(range_ + 1)));
    return budget;
}

}  // namespace streamhist
