#pragma once

#include <functional>
#include <optional>
#include <string>

#include "streamhist/instances.hpp"
#include "streamhist/multipass.hpp"
#include "streamhist/protocols.hpp"
#include "streamhist/report.hpp"
#include "streamhist/stream_io.hpp"

namespace streamhist {

// Runs fn(0..trials-1); trial seeds derive from (seed, index), so results are
// identical for any job count. Callers store per-index results.
void parallel_trials(u64 trials, unsigned jobs, const std::function<void(u64)>& fn);

struct EstimateF2Params {
    double eps = 0.1;
    double const_c = 201.0;
    u64 trials = 1;
    u64 seed = 0;
    unsigned jobs = 1;
};
RunReport cmd_estimate_f2(const VectorStream& stream, const EstimateF2Params& params);

struct HistogramParams {
    std::string mode = "3pass";  // 3pass | 2pass | rpass
    u64 trials = 1;
    u64 seed = 0;
    unsigned jobs = 1;
    unsigned fp_width = 0;
    std::optional<double> abort_frac;  // threshold = max(1, ceil(n * frac))
    double enum_cap = 1e7;
    u64 sparsity = 3;
    i64 coeff_bound = 3;
    unsigned r = 1;
    std::optional<u64> q_override;  // 2pass: forced small field
    bool force_all_failed = false;  // 3pass fault injection
};
RunReport cmd_histogram(const StreamSource& stream, const HistogramParams& params);

struct ProtocolParams {
    std::string protocol = "alg1";  // alg1 | alg2 | alg3 | f2red
    double eps = 0.1;
    double c = 40.0;
    u64 trials = 1;
    u64 seed = 0;
    unsigned jobs = 1;
};
RunReport cmd_protocol(const PartyInput& a, const PartyInput& b,
                       const ProtocolParams& params);

// generators behind `gen`; all deterministic in the seed
void cmd_gen_stream(const StreamGenSpec& spec, bool binary, const std::string& out);
void cmd_gen_setpair(u64 n, u64 universe, double overlap, u64 seed,
                     const std::string& out);
void cmd_gen_ghd(const std::string& xbits, const std::string& ybits, u64 n,
                 const std::string& out);
void cmd_gen_design(u64 n, u64 block_size, u64 target, u64 cap, u64 seed,
                    const std::string& out);

std::string iso_timestamp();

}  // namespace streamhist
