#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "streamhist/common.hpp"

namespace streamhist {

// Replayable element source: every replay() yields the identical sequence, so
// multipass algorithms can make several passes over the same stream.
class StreamSource {
public:
    virtual ~StreamSource() = default;
    virtual u64 length() const = 0;
    virtual u64 universe() const = 0;
    virtual void replay(const std::function<void(u64)>& fn) const = 0;

    u64 checksum() const;  // order-sensitive digest, for replay assertions
};

class VectorStream final : public StreamSource {
public:
    VectorStream(std::vector<u64> data, u64 universe)
        : data_(std::move(data)), universe_(universe) {}

    u64 length() const override { return data_.size(); }
    u64 universe() const override { return universe_; }
    void replay(const std::function<void(u64)>& fn) const override {
        for (u64 x : data_) fn(x);
    }

    std::span<const u64> data() const { return data_; }

private:
    std::vector<u64> data_;
    u64 universe_;
};

struct StreamGenSpec {
    u64 n = 0;
    u64 universe = 0;  // 0 -> n^2
    double dup_rate = 0.0;
    u64 seed = 0;

    u64 effective_universe() const { return universe ? universe : n * n; }
};

// Deterministic stream with a controlled duplication profile: a pool of
// ~n*(1-dup_rate) distinct values, each appearing at least once, the rest of
// the stream drawn uniformly from the pool.
std::vector<u64> generate_stream(const StreamGenSpec& spec);

// Re-derives the sequence from the seed on every replay.
class GeneratorStream final : public StreamSource {
public:
    explicit GeneratorStream(StreamGenSpec spec) : spec_(spec) {}

    u64 length() const override { return spec_.n; }
    u64 universe() const override { return spec_.effective_universe(); }
    void replay(const std::function<void(u64)>& fn) const override {
        for (u64 x : generate_stream(spec_)) fn(x);
    }

private:
    StreamGenSpec spec_;
};

// stream files: `streamv1 n=<N> universe=<U>` + one decimal element per line,
// or `streambin1 ...` + fixed 8-byte little-endian elements
void write_stream_text(const std::string& path, std::span<const u64> data, u64 universe);
void write_stream_binary(const std::string& path, std::span<const u64> data, u64 universe);
VectorStream read_stream(const std::string& path);

// set-pair files: `setpairv1 n=<N> universe=<U>` + `A: ...` + `B: ...`
void write_setpair(const std::string& path, std::span<const u64> a,
                   std::span<const u64> b, u64 n_bound, u64 universe);
struct SetPairFile {
    std::vector<u64> a;
    std::vector<u64> b;
    u64 n_bound = 0;
    u64 universe = 0;
};
SetPairFile read_setpair(const std::string& path);

// design files: `designv1 n=<N> block=<B> count=<K> cap=<C>` + one set per line
void write_design(const std::string& path, const std::vector<std::vector<u64>>& sets,
                  u64 n, u64 block_size, u64 cap);

}  // namespace streamhist
