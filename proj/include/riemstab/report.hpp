#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "riemstab/common.hpp"

namespace riemstab {

// ordered_json keeps insertion order, which makes report bytes a pure
// function of (config, seed)
using json = nlohmann::ordered_json;

enum class Verdict { Consistent, Violation, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Consistent: return "consistent";
    case Verdict::Violation: return "violation";
    case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

struct ExperimentReport {
    std::string id;
    std::string kind;
    std::string inputs_digest;
    Verdict verdict = Verdict::Inconclusive;
    json tolerances = json::object();
    json summary = json::object();  // experiment-level results (not CSV rows)
    std::vector<json> records;
    // a violation always carries the offending case's full inputs for replay
    json violation = json::object();
    std::string error;  // populated when the experiment itself failed

    json to_json() const {
        json j;
        j["id"] = id;
        j["kind"] = kind;
        j["inputs_digest"] = inputs_digest;
        j["verdict"] = to_string(verdict);
        j["tolerances"] = tolerances;
        if (!summary.empty()) j["summary"] = summary;
        j["records"] = records;
        if (!violation.empty()) j["violation"] = violation;
        if (!error.empty()) j["error"] = error;
        return j;
    }

    // one CSV table per experiment: columns from the first record's keys
    std::string csv() const {
        std::string out;
        if (records.empty()) return out;
        bool first = true;
        for (auto it = records.front().begin(); it != records.front().end(); ++it) {
            if (!first) out += ",";
            out += it.key();
            first = false;
        }
        out += "\n";
        for (const auto& rec : records) {
            first = true;
            for (auto it = records.front().begin(); it != records.front().end(); ++it) {
                if (!first) out += ",";
                first = false;
                if (!rec.contains(it.key())) continue;
                const auto& cell = rec[it.key()];
                if (cell.is_string()) out += cell.get<std::string>();
                else out += cell.dump();
            }
            out += "\n";
        }
        return out;
    }
};

// FNV-1a digest of the canonical config text; identifies a report's inputs.
inline std::string fnv1a_digest(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// least-squares slope of log(err) against log(h); the fitted convergence order
inline double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
    const std::size_t n = h.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(h[i]);
        const double y = std::log(std::max(err[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    return denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

} // namespace riemstab
