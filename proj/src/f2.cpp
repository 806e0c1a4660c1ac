#include "streamhist/f2.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace streamhist {

u64 f2_config_m(const F2Config& cfg) {
    if (!(cfg.epsilon > 0.0) || cfg.epsilon > 1.0)
        throw InvalidParam("F2Config: epsilon must be in (0, 1]");
    if (!(cfg.constant_c > 0.0))
        throw InvalidParam("F2Config: constant_c must be positive");
    long double ratio = static_cast<long double>(cfg.constant_c) /
                        (static_cast<long double>(cfg.epsilon) * cfg.epsilon);
    // guard against 201/0.1^2 style float dust just above the true integer
    return static_cast<u64>(std::ceil(ratio - 1e-9L));
}

u64 exact_f2(std::span<const u64> stream) {
    std::unordered_map<u64, u64> freq;
    freq.reserve(stream.size());
    for (u64 x : stream) ++freq[x];
    u128 acc = 0;
    for (const auto& [x, c] : freq) acc += static_cast<u128>(c) * c;
    if (acc > static_cast<u128>(~0ULL)) throw Error("exact_f2: overflow");
    return static_cast<u64>(acc);
}

F2Sketch F2Sketch::make(const F2Config& cfg, u64 universe_size) {
    u64 m = f2_config_m(cfg);
    KWiseHash h = KWiseHash::make(4, universe_size, m, cfg.seed);
    return F2Sketch(m, std::move(h));
}

double F2Sketch::estimate() const {
    if (m_ < 2) throw DegenerateM("F2Sketch: m must be >= 2");
    u64 f = table_.f2();
    // (m*F - n^2) / (m - 1), exact in integers before the division
    __int128 num = static_cast<__int128>(m_) * f -
                   static_cast<__int128>(n_seen_) * n_seen_;
    return static_cast<double>(num) / static_cast<double>(m_ - 1);
}

double F2Sketch::estimate_clamped() const {
    double lo = static_cast<double>(n_seen_);
    double hi = lo * lo;
    return std::clamp(estimate(), lo, hi);
}

}  // namespace streamhist
