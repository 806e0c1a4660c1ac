#include <iostream>
#include <memory>

#include "CLI11.hpp"

#include "streamhist/drivers.hpp"
#include "streamhist/rng.hpp"

using namespace streamhist;

namespace {

// stream comes from --stream <file> or from generator flags (--n etc.)
struct StreamArgs {
    std::string path;
    u64 n = 0;
    u64 universe = 0;
    double dup = 0.0;
    u64 seed = 0;
};

VectorStream load_stream(const StreamArgs& args, u64 root_seed) {
    if (!args.path.empty()) return read_stream(args.path);
    if (args.n == 0) throw InvalidParam("need --stream <file> or --n for a generated stream");
    StreamGenSpec spec{args.n, args.universe, args.dup,
                       args.seed ? args.seed : derive_seed(root_seed, "cli.stream")};
    return VectorStream(generate_stream(spec), spec.effective_universe());
}

void add_stream_flags(CLI::App* cmd, StreamArgs& args) {
    cmd->add_option("--stream", args.path, "stream file (streamv1/streambin1)");
    cmd->add_option("--n", args.n, "generated stream length");
    cmd->add_option("--universe", args.universe, "universe size (default n^2)");
    cmd->add_option("--dup", args.dup, "duplication rate in [0,1]");
    cmd->add_option("--stream-seed", args.seed, "generator seed (default derived from --seed)");
}

void emit(const RunReport& rep, const std::string& out, const std::string& csv) {
    if (!out.empty()) rep.write_jsonl(out);
    if (!csv.empty()) rep.write_csv(csv);
    std::cout << rep.summary_json().dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming frequency-moment and exact-histogram toolkit"};
    app.require_subcommand(1);

    u64 seed = 1;
    unsigned jobs = 1;
    std::string out, csv;
    app.add_option("--seed", seed, "root seed; all randomness derives from it");
    app.add_option("--jobs", jobs, "trial-level parallelism (rows stay ordered)");
    app.add_option("--out", out, "write the report as JSON lines");
    app.add_option("--csv", csv, "also write rows as CSV");

    // estimate-f2
    auto* f2cmd = app.add_subcommand("estimate-f2", "run the hashed-multiset F2 estimator");
    StreamArgs f2stream;
    EstimateF2Params f2p;
    add_stream_flags(f2cmd, f2stream);
    f2cmd->add_option("--eps", f2p.eps, "target relative error");
    f2cmd->add_option("--trials", f2p.trials, "number of seeded trials");
    f2cmd->add_option("--const-c", f2p.const_c, "m = ceil(c / eps^2)");

    // histogram
    auto* hcmd = app.add_subcommand("histogram", "exact histogram via 2/3/(2r+1) passes");
    StreamArgs hstream;
    HistogramParams hp;
    double abort_frac = -1.0;
    u64 q_override = 0;
    add_stream_flags(hcmd, hstream);
    hcmd->add_option("--mode", hp.mode, "3pass | 2pass | rpass")->required();
    hcmd->add_option("--trials", hp.trials, "number of seeded trials");
    hcmd->add_option("--fp-width", hp.fp_width, "fingerprint width in bits (0 = default)");
    hcmd->add_option("--abort-frac", abort_frac, "abort threshold as a fraction of n");
    hcmd->add_option("--enum-cap", hp.enum_cap, "2pass candidate enumeration cap");
    hcmd->add_option("--sparsity", hp.sparsity, "2pass sparsity bound s");
    hcmd->add_option("--coeff-bound", hp.coeff_bound, "2pass coefficient bound");
    hcmd->add_option("--r", hp.r, "rpass depth (2r+1 passes)");
    hcmd->add_option("--q", q_override, "2pass field override (small q experiments)");
    hcmd->add_flag("--force-all-failed", hp.force_all_failed,
                   "3pass fault injection: fail every bucket");

    // protocol
    auto* pcmd = app.add_subcommand("protocol", "two-party approximate set intersection");
    ProtocolParams pp;
    std::string instance;
    pcmd->add_option("--proto", pp.protocol, "alg1 | alg2 | alg3 | f2red")->required();
    pcmd->add_option("--instance", instance, "setpairv1 file")->required();
    pcmd->add_option("--eps", pp.eps, "additive error budget eps*n");
    pcmd->add_option("--const-c", pp.c, "sampling constant c");
    pcmd->add_option("--trials", pp.trials, "number of seeded trials");

    // gen
    auto* gcmd = app.add_subcommand("gen", "write instance files");
    std::string kind, gen_out, xbits, ybits;
    u64 gn = 0, guniverse = 0, gblock = 16, gtarget = 1, gcap = 0, gk = 4;
    double gdup = 0.0, goverlap = 0.0;
    bool gbinary = false;
    gcmd->add_option("kind", kind, "stream | setpair | ghd | design")->required();
    gcmd->add_option("--out", gen_out, "output path")->required();
    gcmd->add_option("--n", gn, "size parameter")->required();
    gcmd->add_option("--universe", guniverse, "universe (default n^2)");
    gcmd->add_option("--dup", gdup, "stream duplication rate");
    gcmd->add_option("--overlap", goverlap, "setpair overlap fraction");
    gcmd->add_option("--x", xbits, "ghd bitstring for Alice");
    gcmd->add_option("--y", ybits, "ghd bitstring for Bob");
    gcmd->add_option("--k", gk, "ghd string length");
    gcmd->add_option("--block", gblock, "design block size");
    gcmd->add_option("--target", gtarget, "design family size");
    gcmd->add_option("--cap", gcap, "design pairwise cap (0 = ceil(n/400))");
    gcmd->add_flag("--binary", gbinary, "binary stream format");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*f2cmd) {
            f2p.seed = seed;
            f2p.jobs = jobs;
            VectorStream s = load_stream(f2stream, seed);
            emit(cmd_estimate_f2(s, f2p), out, csv);
        } else if (*hcmd) {
            hp.seed = seed;
            hp.jobs = jobs;
            if (abort_frac >= 0.0) hp.abort_frac = abort_frac;
            if (q_override) hp.q_override = q_override;
            VectorStream s = load_stream(hstream, seed);
            emit(cmd_histogram(s, hp), out, csv);
        } else if (*pcmd) {
            pp.seed = seed;
            pp.jobs = jobs;
            SetPairFile f = read_setpair(instance);
            u64 n = f.n_bound ? f.n_bound : std::max(f.a.size(), f.b.size());
            PartyInput a = PartyInput::make(f.a, n, f.universe);
            PartyInput b = PartyInput::make(f.b, n, f.universe);
            emit(cmd_protocol(a, b, pp), out, csv);
        } else if (*gcmd) {
            if (kind == "stream") {
                StreamGenSpec spec{gn, guniverse, gdup, derive_seed(seed, "cli.gen")};
                cmd_gen_stream(spec, gbinary, gen_out);
            } else if (kind == "setpair") {
                cmd_gen_setpair(gn, guniverse ? guniverse : gn * gn, goverlap,
                                derive_seed(seed, "cli.gen"), gen_out);
            } else if (kind == "ghd") {
                if (xbits.size() != gk || ybits.size() != gk)
                    throw InvalidParam("gen ghd: --x/--y must have length --k");
                cmd_gen_ghd(xbits, ybits, gn, gen_out);
            } else if (kind == "design") {
                cmd_gen_design(gn, gblock, gtarget, gcap, derive_seed(seed, "cli.gen"),
                               gen_out);
            } else {
                throw InvalidParam("gen: unknown kind " + kind);
            }
            std::cout << "wrote " << gen_out << "\n";
        }
    } catch (const InvalidParam& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
