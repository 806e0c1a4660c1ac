#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "streamhist/common.hpp"

namespace streamhist {

using json = nlohmann::json;

struct EmptyInput : Error {
    using Error::Error;
};
struct InsufficientSpan : Error {
    using Error::Error;
};

struct TrialValue {
    double value = 0;
    bool failed = false;  // within_eps false, aborted, or oracle mismatch
};

struct Aggregates {
    u64 count = 0;
    double mean = 0;
    double variance = 0;  // sample variance
    double failure_rate = 0;
    double min = 0;
    double max = 0;
    double q50 = 0;
    double q90 = 0;
    double q99 = 0;

    json to_json() const;
    static Aggregates from_json(const json& j);
};

// stable one-pass (Welford) accumulation; EmptyInput on zero rows
Aggregates aggregate(std::span<const TrialValue> rows);

enum class ScaleModel { Linear, NLogN, NLogLogN };
const char* scale_model_name(ScaleModel m);

// Least-squares fit of bits = a * predictor(n) through the origin; returns the
// normalized residual ||bits - a*pred|| / ||bits||. Needs >= 4 points spanning
// two decades of n.
double slope_check(std::span<const std::pair<double, double>> points, ScaleModel model);

// 64-bit content digest of sorted (element, count) pairs
u64 digest_histogram(const std::map<u64, u64>& hist);
std::string digest_hex(u64 digest);

// One run = one summary object followed by JSON-lines rows. Timestamps live in
// a single summary field so reruns are byte-identical elsewhere.
struct RunReport {
    int schema_version = 1;
    std::string run_id;
    std::string algorithm;
    std::string timestamp;
    json params = json::object();
    std::vector<json> rows;
    std::string value_field;   // row field the aggregates summarize
    Aggregates aggregates;

    // recompute aggregates from rows using value_field and "failed"
    void finalize(const std::string& value_field_name);

    json summary_json() const;
    void write_jsonl(const std::string& path) const;
    void write_csv(const std::string& path) const;

    // parses and re-aggregates; throws if stored aggregates do not match
    static RunReport read_jsonl(const std::string& path);
};

}  // namespace streamhist
