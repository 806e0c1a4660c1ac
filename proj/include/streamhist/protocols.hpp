#pragma once

#include <string>
#include <vector>

#include "streamhist/common.hpp"
#include "streamhist/field.hpp"

namespace streamhist {

struct CapExceeded : Error {
    using Error::Error;
};
struct NotDivisible : Error {
    using Error::Error;
};

struct PartyInput {
    std::vector<u64> set;  // strictly increasing
    u64 n_bound = 0;
    u64 universe = 0;

    static PartyInput make(std::vector<u64> elems, u64 n_bound, u64 universe);
    u64 size() const { return set.size(); }
};

struct Message {
    char sender = 'A';  // 'A' or 'B'
    std::string descriptor;
    double bits = 0;
};

struct Transcript {
    std::vector<Message> messages;
    double total_bits = 0;

    void add(char sender, std::string descriptor, double bits) {
        messages.push_back({sender, std::move(descriptor), bits});
        total_bits += bits;
    }
    void append(const Transcript& other) {
        for (const auto& m : other.messages) messages.push_back(m);
        total_bits += other.total_bits;
    }
    std::string to_string() const;  // byte-stable rendering
};

struct ProtocolOutcome {
    bool aborted = false;
    i64 estimate = 0;  // meaningful only when !aborted
    i64 truth = 0;
    double eps = 0;  // the additive-error budget used for within_eps
    u64 n = 0;
    bool within_eps = false;  // |estimate - truth| <= eps * n
};

struct ProtocolConfig {
    double eps = 0.1;
    double c = 40.0;
    u64 seed = 0;
    // ledger-only private-coin adjustment: +ceil(log2 log2 N) bits, N = |U|^n
    bool newman_private_coins = false;
    // alg3: fraction of the eps*n budget handed to the inner estimator
    double inner_budget_ratio = 0.5;
    double inner_constant_c = 201.0;
    u64 subroutine_cap = ~u64(0);
};

i64 round_half_away(double v);
u64 intersection_size(const std::vector<u64>& a, const std::vector<u64>& b);

// shared-randomness subsample used by alg2/alg3: keep x iff h(x) < p*n, so an
// element of the intersection is in both samples or in neither
std::vector<u64> shared_subsample(const std::vector<u64>& set, const Prf64& h,
                                  double pn);

// One-way sampling protocol: Alice sends a p-sample of her set, Bob rescales.
std::pair<ProtocolOutcome, Transcript> alg1_oneway_sample(const PartyInput& a,
                                                          const PartyInput& b,
                                                          const ProtocolConfig& cfg);

// Shared-hash subsampling plus an exact intersection subroutine on the
// samples; two-way.
std::pair<ProtocolOutcome, Transcript> alg2_subsample_exact(const PartyInput& a,
                                                            const PartyInput& b,
                                                            const ProtocolConfig& cfg);

// As alg2 but the subroutine is the one-way F2-reduction estimator, keeping
// the whole protocol one-way.
std::pair<ProtocolOutcome, Transcript> alg3_oneway_composed(const PartyInput& a,
                                                            const PartyInput& b,
                                                            const ProtocolConfig& cfg);

// F2 -> INT reduction: Alice streams her set into an F2 sketch and ships the
// state; Bob resumes and inverts F2(S) = |A| + |B| + 2|A n B|.
// outcome.within_eps uses the 2*eps*n reduction bound.
std::pair<ProtocolOutcome, Transcript> int_via_f2(const PartyInput& a,
                                                  const PartyInput& b, double eps,
                                                  u64 seed,
                                                  double constant_c = 201.0);

// Default exact-intersection subroutine: direct exchange of the sample at
// |A'| * ceil(log2 |U|) bits. Pluggable; an O(k)-bit protocol could drop in.
std::pair<u64, Transcript> exact_intersection_subroutine(const PartyInput& a,
                                                         const PartyInput& b,
                                                         u64 cap = ~u64(0));

// GHD blow-up: each string coordinate becomes a block of n/k elements;
// |A' n B'| = n - (n/k) * hamming(x, y).
std::pair<PartyInput, PartyInput> ghd_blowup(const std::vector<u8>& x,
                                             const std::vector<u8>& y, u64 n);

}  // namespace streamhist
