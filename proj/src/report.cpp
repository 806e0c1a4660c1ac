#include "streamhist/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace streamhist {

json Aggregates::to_json() const {
    return json{{"count", count},       {"mean", mean},
                {"variance", variance}, {"failure_rate", failure_rate},
                {"min", min},           {"max", max},
                {"q50", q50},           {"q90", q90},
                {"q99", q99}};
}

Aggregates Aggregates::from_json(const json& j) {
    Aggregates a;
    a.count = j.at("count").get<u64>();
    a.mean = j.at("mean").get<double>();
    a.variance = j.at("variance").get<double>();
    a.failure_rate = j.at("failure_rate").get<double>();
    a.min = j.at("min").get<double>();
    a.max = j.at("max").get<double>();
    a.q50 = j.at("q50").get<double>();
    a.q90 = j.at("q90").get<double>();
    a.q99 = j.at("q99").get<double>();
    return a;
}

Aggregates aggregate(std::span<const TrialValue> rows) {
    if (rows.empty()) throw EmptyInput("aggregate: no rows");
    Aggregates a;
    a.count = rows.size();
    double mean = 0, m2 = 0;
    u64 failures = 0;
    std::vector<double> values;
    values.reserve(rows.size());
    u64 k = 0;
    for (const auto& r : rows) {
        ++k;
        double d = r.value - mean;
        mean += d / static_cast<double>(k);
        m2 += d * (r.value - mean);
        if (r.failed) ++failures;
        values.push_back(r.value);
    }
    a.mean = mean;
    a.variance = rows.size() > 1 ? m2 / static_cast<double>(rows.size() - 1) : 0.0;
    a.failure_rate = static_cast<double>(failures) / static_cast<double>(rows.size());
    std::sort(values.begin(), values.end());
    a.min = values.front();
    a.max = values.back();
    auto quantile = [&](double q) {
        size_t idx = static_cast<size_t>(q * static_cast<double>(values.size()));
        return values[std::min(idx, values.size() - 1)];
    };
    a.q50 = quantile(0.50);
    a.q90 = quantile(0.90);
    a.q99 = quantile(0.99);
    return a;
}

const char* scale_model_name(ScaleModel m) {
    switch (m) {
        case ScaleModel::Linear: return "n";
        case ScaleModel::NLogN: return "n*log n";
        case ScaleModel::NLogLogN: return "n*loglog n";
    }
    return "?";
}

double slope_check(std::span<const std::pair<double, double>> points, ScaleModel model) {
    if (points.size() < 4)
        throw InsufficientSpan("slope_check: need at least 4 points");
    double lo = points.front().first, hi = points.front().first;
    for (const auto& [n, bits] : points) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    if (!(hi >= 100.0 * lo))
        throw InsufficientSpan("slope_check: points must span two decades of n");

    auto predictor = [&](double n) {
        switch (model) {
            case ScaleModel::Linear: return n;
            case ScaleModel::NLogN: return n * std::log2(std::max(n, 2.0));
            case ScaleModel::NLogLogN:
                return n * std::log2(std::max(2.0, std::log2(std::max(n, 2.0))));
        }
        return n;
    };
    double spp = 0, spy = 0, syy = 0;
    for (const auto& [n, bits] : points) {
        double p = predictor(n);
        spp += p * p;
        spy += p * bits;
        syy += bits * bits;
    }
    double a = spp > 0 ? spy / spp : 0.0;
    double ss = 0;
    for (const auto& [n, bits] : points) {
        double r = bits - a * predictor(n);
        ss += r * r;
    }
    return syy > 0 ? std::sqrt(ss / syy) : 0.0;
}

u64 digest_histogram(const std::map<u64, u64>& hist) {
    u64 h = 0xcbf29ce484222325ULL;
    auto mix = [&](u64 v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [k, c] : hist) {
        mix(k);
        mix(c);
    }
    return h;
}

std::string digest_hex(u64 digest) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(digest));
    return buf;
}

void RunReport::finalize(const std::string& value_field_name) {
    value_field = value_field_name;
    std::vector<TrialValue> tv;
    tv.reserve(rows.size());
    for (const auto& r : rows) {
        TrialValue v;
        v.value = r.contains(value_field) ? r.at(value_field).get<double>() : 0.0;
        v.failed = r.contains("failed") && r.at("failed").get<bool>();
        tv.push_back(v);
    }
    aggregates = aggregate(tv);
}

json RunReport::summary_json() const {
    return json{{"schema_version", schema_version},
                {"run_id", run_id},
                {"algorithm", algorithm},
                {"timestamp", timestamp},
                {"params", params},
                {"value_field", value_field},
                {"aggregates", aggregates.to_json()},
                {"rows", rows.size()}};
}

void RunReport::write_jsonl(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << summary_json().dump() << "\n";
    for (const auto& r : rows) out << r.dump() << "\n";
    if (!out) throw IoError("write failed: " + path);
}

void RunReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    std::set<std::string> cols;
    for (const auto& r : rows) {
        for (auto it = r.begin(); it != r.end(); ++it) cols.insert(it.key());
    }
    bool first = true;
    for (const auto& c : cols) {
        if (!first) out << ',';
        out << c;
        first = false;
    }
    out << "\n";
    auto emit_field = [&out](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) {
            out << s;
            return;
        }
        out << '"';
        for (char ch : s) {
            if (ch == '"') out << '"';
            out << ch;
        }
        out << '"';
    };
    for (const auto& r : rows) {
        first = true;
        for (const auto& c : cols) {
            if (!first) out << ',';
            first = false;
            if (r.contains(c)) {
                const json& v = r.at(c);
                emit_field(v.is_string() ? v.get<std::string>() : v.dump());
            }
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

RunReport RunReport::read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty report: " + path);
    json summary = json::parse(line);
    RunReport rep;
    rep.schema_version = summary.at("schema_version").get<int>();
    rep.run_id = summary.at("run_id").get<std::string>();
    rep.algorithm = summary.at("algorithm").get<std::string>();
    rep.timestamp = summary.at("timestamp").get<std::string>();
    rep.params = summary.at("params");
    rep.value_field = summary.at("value_field").get<std::string>();
    Aggregates stored = Aggregates::from_json(summary.at("aggregates"));
    while (std::getline(in, line)) {
        if (!line.empty()) rep.rows.push_back(json::parse(line));
    }
    rep.finalize(rep.value_field);
    auto close = [](double a, double b) {
        double scale = std::max({std::fabs(a), std::fabs(b), 1.0});
        return std::fabs(a - b) <= 1e-12 * scale;
    };
    if (stored.count != rep.aggregates.count || !close(stored.mean, rep.aggregates.mean) ||
        !close(stored.variance, rep.aggregates.variance) ||
        !close(stored.failure_rate, rep.aggregates.failure_rate) ||
        !close(stored.min, rep.aggregates.min) || !close(stored.max, rep.aggregates.max) ||
        !close(stored.q50, rep.aggregates.q50) || !close(stored.q90, rep.aggregates.q90) ||
        !close(stored.q99, rep.aggregates.q99)) {
        throw IoError("report aggregates do not match rows: " + path);
    }
    return rep;
}

}  // namespace streamhist
