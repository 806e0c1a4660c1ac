#include "streamhist/stream_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "streamhist/rng.hpp"

namespace streamhist {

u64 StreamSource::checksum() const {
    u64 h = 0xcbf29ce484222325ULL;
    replay([&](u64 x) {
        h ^= x;
        h *= 0x100000001b3ULL;
        h ^= h >> 29;
    });
    return h;
}

std::vector<u64> generate_stream(const StreamGenSpec& spec) {
    if (spec.n == 0) return {};
    if (!(spec.dup_rate >= 0.0 && spec.dup_rate <= 1.0))
        throw InvalidParam("generate_stream: dup_rate outside [0,1]");
    u64 universe = spec.effective_universe();
    u64 pool_size = static_cast<u64>(
        std::llround(static_cast<double>(spec.n) * (1.0 - spec.dup_rate)));
    pool_size = std::clamp<u64>(pool_size, 1, spec.n);
    if (universe < pool_size)
        throw InvalidParam("generate_stream: universe smaller than distinct pool");

    Rng rng(derive_seed(spec.seed, "stream.gen"));
    std::vector<u64> pool;
    pool.reserve(pool_size);
    if (universe <= 4 * pool_size) {
        // selection sampling over [0, universe)
        u64 need = pool_size;
        for (u64 v = 0; v < universe && need > 0; ++v) {
            if (rng.uniform_below(universe - v) < need) {
                pool.push_back(v);
                --need;
            }
        }
    } else {
        std::unordered_set<u64> chosen;
        chosen.reserve(pool_size * 2);
        while (pool.size() < pool_size) {
            u64 v = rng.uniform_below(universe);
            if (chosen.insert(v).second) pool.push_back(v);
        }
    }

    std::vector<u64> stream;
    stream.reserve(spec.n);
    stream.insert(stream.end(), pool.begin(), pool.end());
    while (stream.size() < spec.n) {
        stream.push_back(pool[rng.uniform_below(pool_size)]);
    }
    return stream;
}

namespace {

void parse_header_kv(const std::string& line, const std::string& magic, u64& n,
                     u64& universe) {
    std::istringstream iss(line);
    std::string tok;
    iss >> tok;
    if (tok != magic) throw IoError("bad header magic, expected " + magic);
    n = 0;
    universe = 0;
    while (iss >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw IoError("malformed header field: " + tok);
        std::string key = tok.substr(0, eq);
        u64 val = std::stoull(tok.substr(eq + 1));
        if (key == "n") {
            n = val;
        } else if (key == "universe") {
            universe = val;
        }
    }
}

std::vector<u64> parse_elems(const std::string& line, size_t skip_prefix) {
    std::istringstream iss(line.substr(skip_prefix));
    std::vector<u64> out;
    u64 v;
    while (iss >> v) out.push_back(v);
    return out;
}

}  // namespace

void write_stream_text(const std::string& path, std::span<const u64> data, u64 universe) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "streamv1 n=" << data.size() << " universe=" << universe << "\n";
    for (u64 x : data) out << x << "\n";
    if (!out) throw IoError("write failed: " + path);
}

void write_stream_binary(const std::string& path, std::span<const u64> data, u64 universe) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "streambin1 n=" << data.size() << " universe=" << universe << "\n";
    for (u64 x : data) {
        char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((x >> (8 * i)) & 0xff);
        out.write(buf, 8);
    }
    if (!out) throw IoError("write failed: " + path);
}

VectorStream read_stream(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("empty stream file: " + path);
    u64 n = 0, universe = 0;
    if (header.rfind("streamv1", 0) == 0) {
        parse_header_kv(header, "streamv1", n, universe);
        std::vector<u64> data;
        data.reserve(n);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            data.push_back(std::stoull(line));
        }
        if (data.size() != n) throw IoError("stream length mismatch in " + path);
        return VectorStream(std::move(data), universe);
    }
    if (header.rfind("streambin1", 0) == 0) {
        parse_header_kv(header, "streambin1", n, universe);
        std::vector<u64> data;
        data.reserve(n);
        char buf[8];
        for (u64 i = 0; i < n; ++i) {
            if (!in.read(buf, 8)) throw IoError("truncated binary stream: " + path);
            u64 x = 0;
            for (int b = 7; b >= 0; --b) x = (x << 8) | static_cast<u8>(buf[b]);
            data.push_back(x);
        }
        return VectorStream(std::move(data), universe);
    }
    throw IoError("unknown stream format: " + path);
}

void write_setpair(const std::string& path, std::span<const u64> a,
                   std::span<const u64> b, u64 n_bound, u64 universe) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "setpairv1 n=" << n_bound << " universe=" << universe << "\n";
    out << "A:";
    for (u64 x : a) out << ' ' << x;
    out << "\nB:";
    for (u64 x : b) out << ' ' << x;
    out << "\n";
    if (!out) throw IoError("write failed: " + path);
}

SetPairFile read_setpair(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string header, la, lb;
    if (!std::getline(in, header)) throw IoError("empty setpair file: " + path);
    SetPairFile f;
    parse_header_kv(header, "setpairv1", f.n_bound, f.universe);
    if (!std::getline(in, la) || la.rfind("A:", 0) != 0)
        throw IoError("setpair: missing A line in " + path);
    if (!std::getline(in, lb) || lb.rfind("B:", 0) != 0)
        throw IoError("setpair: missing B line in " + path);
    f.a = parse_elems(la, 2);
    f.b = parse_elems(lb, 2);
    return f;
}

void write_design(const std::string& path, const std::vector<std::vector<u64>>& sets,
                  u64 n, u64 block_size, u64 cap) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "designv1 n=" << n << " block=" << block_size << " count=" << sets.size()
        << " cap=" << cap << "\n";
    for (const auto& s : sets) {
        bool first = true;
        for (u64 x : s) {
            if (!first) out << ' ';
            out << x;
            first = false;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace streamhist
