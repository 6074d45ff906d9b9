#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "riemstab/experiments.hpp"
#include "riemstab/report.hpp"

namespace riemstab {

// Registry of preset factories; configs may register custom presets (a name
// bound to a builtin kind plus fixed parameters) next to the builtins.
struct PresetRegistry {
    std::map<std::string, std::pair<std::string, std::vector<double>>> metrics;
    std::map<std::string, std::pair<std::string, std::vector<double>>> nonlinearities;

    Chart chart(const std::string& name, std::vector<double> params) const {
        if (auto it = metrics.find(name); it != metrics.end())
            return make_chart(it->second.first,
                              params.empty() ? it->second.second : std::move(params));
        throw ConfigInvalid("unknown metric preset '" + name + "'");
    }
    Nonlinearity nonlinearity(const std::string& name, std::vector<double> params) const {
        if (auto it = nonlinearities.find(name); it != nonlinearities.end())
            return make_nonlinearity(it->second.first,
                                     params.empty() ? it->second.second : std::move(params));
        throw ConfigInvalid("unknown nonlinearity preset '" + name + "'");
    }
};

inline PresetRegistry builtin_registry() {
    PresetRegistry reg;
#ifndef RIEMSTAB_EMPTY_PRESET_REGISTRY
    for (const auto& doc : metric_preset_docs()) reg.metrics[doc.name] = {doc.name, {}};
    for (const auto& doc : nonlinearity_preset_docs())
        reg.nonlinearities[doc.name] = {doc.name, {}};
#endif
    return reg;
}

struct ExperimentSpec {
    std::string id;
    std::string kind;
    json options;  // validated per kind at parse time
};

struct RunConfig {
    std::string chart_preset = "flat_torus";
    std::vector<double> chart_params;
    std::vector<int> grid;
    std::string nonlinearity_preset = "allen_cahn";
    std::vector<double> nonlinearity_params;
    std::uint64_t seed = 0;
    std::string out_dir = "runs/out";
    int jobs = 0;  // 0: one per hardware thread
    PresetRegistry registry = builtin_registry();
    std::vector<ExperimentSpec> experiments;
    json raw;  // canonical parsed config (digest + replay source)
};

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
    throw ConfigInvalid("at " + (path.empty() ? "/" : path) + ": " + what);
}

inline void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                                const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const auto& k : allowed) known |= it.key() == k;
        if (!known) config_error(path + "/" + it.key(), "unknown key");
    }
}

inline std::vector<double> number_list(const json& j, const std::string& path) {
    if (!j.is_array()) config_error(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) config_error(path, "expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

// per-kind allowed option keys
inline const std::map<std::string, std::vector<std::string>>& experiment_schemas() {
    static const std::map<std::string, std::vector<std::string>> schemas = {
        {"bochner_sweep", {"id", "kind", "resolutions", "functions", "interior_margin"}},
        {"hessian_inequality_scan", {"id", "kind", "grid_n", "functions", "eps_grad"}},
        {"liouville_compact",
         {"id", "kind", "grid_n", "starts", "flow_time", "amplitude", "constancy_factor"}},
        {"volume_growth", {"id", "kind", "dim", "radii", "spacing"}},
        {"parabolicity_capacity",
         {"id", "kind", "dim", "radii", "spacing", "inner_radius", "rel_tol"}},
        {"level_set_geodesic",
         {"id", "kind", "field", "level", "eps_grad", "grid_n", "expect_geodesic",
          "geodesic_tol", "expect_defect", "defect_rel_tol"}},
        {"stability_inequality",
         {"id", "kind", "grid_n", "initial", "test_functions", "margin_factor"}},
        {"poincare", {"id", "kind", "grid_n", "initial", "test_functions", "margin_factor"}},
    };
    return schemas;
}

} // namespace detail

inline RunConfig parse_config(const json& j) {
    if (!j.is_object()) detail::config_error("", "config must be a JSON object");
    detail::reject_unknown_keys(j,
                                {"chart", "grid", "nonlinearity", "seed", "out", "jobs",
                                 "custom_presets", "experiments"},
                                "");
    RunConfig cfg;
    cfg.raw = j;

    if (j.contains("custom_presets")) {
        const auto& cp = j["custom_presets"];
        detail::reject_unknown_keys(cp, {"metrics", "nonlinearities"}, "/custom_presets");
        auto load = [&](const char* key, auto& table) {
            if (!cp.contains(key)) return;
            int idx = 0;
            for (const auto& entry : cp[key]) {
                const std::string path =
                    std::string("/custom_presets/") + key + "/" + std::to_string(idx++);
                detail::reject_unknown_keys(entry, {"name", "preset", "params"}, path);
                if (!entry.contains("name") || !entry.contains("preset"))
                    detail::config_error(path, "custom preset needs 'name' and 'preset'");
                table[entry["name"].get<std::string>()] = {
                    entry["preset"].get<std::string>(),
                    entry.contains("params") ? detail::number_list(entry["params"], path)
                                             : std::vector<double>{}};
            }
        };
        load("metrics", cfg.registry.metrics);
        load("nonlinearities", cfg.registry.nonlinearities);
    }

    if (j.contains("chart")) {
        detail::reject_unknown_keys(j["chart"], {"preset", "params"}, "/chart");
        if (j["chart"].contains("preset"))
            cfg.chart_preset = j["chart"]["preset"].get<std::string>();
        if (j["chart"].contains("params"))
            cfg.chart_params = detail::number_list(j["chart"]["params"], "/chart/params");
    }
    if (j.contains("nonlinearity")) {
        detail::reject_unknown_keys(j["nonlinearity"], {"preset", "params"}, "/nonlinearity");
        if (j["nonlinearity"].contains("preset"))
            cfg.nonlinearity_preset = j["nonlinearity"]["preset"].get<std::string>();
        if (j["nonlinearity"].contains("params"))
            cfg.nonlinearity_params =
                detail::number_list(j["nonlinearity"]["params"], "/nonlinearity/params");
    }
    if (j.contains("grid"))
        for (const auto& n : j["grid"]) cfg.grid.push_back(n.get<int>());
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out")) cfg.out_dir = j["out"].get<std::string>();
    if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();

    // fail fast on unknown presets so the error carries the name
    cfg.registry.chart(cfg.chart_preset, cfg.chart_params);
    cfg.registry.nonlinearity(cfg.nonlinearity_preset, cfg.nonlinearity_params);

    if (j.contains("experiments")) {
        if (!j["experiments"].is_array())
            detail::config_error("/experiments", "expected an array");
        int idx = 0;
        for (const auto& e : j["experiments"]) {
            const std::string path = "/experiments/" + std::to_string(idx);
            if (!e.contains("kind")) detail::config_error(path, "experiment needs a 'kind'");
            const std::string kind = e["kind"].get<std::string>();
            const auto& schemas = detail::experiment_schemas();
            auto it = schemas.find(kind);
            if (it == schemas.end())
                detail::config_error(path + "/kind", "unknown experiment kind '" + kind + "'");
            detail::reject_unknown_keys(e, it->second, path);
            ExperimentSpec spec;
            spec.kind = kind;
            spec.id = e.contains("id") ? e["id"].get<std::string>()
                                       : "exp" + std::to_string(idx) + "_" + kind;
            spec.options = e;
            cfg.experiments.push_back(std::move(spec));
            ++idx;
        }
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot read config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigInvalid("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

} // namespace riemstab
