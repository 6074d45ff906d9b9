#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "riemstab/riemstab.hpp"

namespace {

int cmd_run(const std::string& config_path, int jobs, long long seed,
            const std::string& out_dir) {
    riemstab::RunConfig cfg;
    try {
        cfg = riemstab::load_config(config_path);
    } catch (const riemstab::ConfigInvalid& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    if (jobs > 0) cfg.jobs = jobs;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    const auto result = riemstab::run_config(cfg);
    riemstab::write_reports(cfg.out_dir, cfg, result);
    for (const auto& rep : result.reports)
        std::printf("%-28s %-26s %s%s\n", rep.id.c_str(), rep.kind.c_str(),
                    riemstab::to_string(rep.verdict),
                    rep.error.empty() ? "" : ("  [failed: " + rep.error + "]").c_str());
    std::printf("reports written to %s\n", cfg.out_dir.c_str());
    if (result.any_failure) return 1;
    return result.any_violation ? 1 : 0;
}

int cmd_check(const std::string& config_path) {
    try {
        riemstab::load_config(config_path);
    } catch (const riemstab::ConfigInvalid& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    std::printf("config ok\n");
    return 0;
}

int cmd_list_presets(const std::string& config_path) {
    riemstab::PresetRegistry registry = riemstab::builtin_registry();
    if (!config_path.empty()) {
        try {
            registry = riemstab::load_config(config_path).registry;
        } catch (const riemstab::ConfigInvalid& e) {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 2;
        }
    }
    std::printf("metric presets:\n");
    for (const auto& doc : riemstab::metric_preset_docs())
        if (registry.metrics.count(doc.name))
            std::printf("  %-12s params %-44s %s\n", doc.name.c_str(), doc.params.c_str(),
                        doc.summary.c_str());
    for (const auto& [name, def] : registry.metrics)
        if (name != def.first)
            std::printf("  %-12s custom: %s with fixed params\n", name.c_str(),
                        def.first.c_str());
    std::printf("nonlinearity presets:\n");
    for (const auto& doc : riemstab::nonlinearity_preset_docs())
        if (registry.nonlinearities.count(doc.name))
            std::printf("  %-22s params %-34s %s\n", doc.name.c_str(), doc.params.c_str(),
                        doc.summary.c_str());
    for (const auto& [name, def] : registry.nonlinearities)
        if (name != def.first)
            std::printf("  %-22s custom: %s with fixed params\n", name.c_str(),
                        def.first.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical experiments for stable solutions of symmetric elliptic "
                 "systems on Riemannian charts"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int jobs = 0;
    long long seed = -1;

    auto* run = app.add_subcommand("run", "run all experiments in a config");
    run->add_option("--config", config_path, "config file (JSON)")->required();
    run->add_option("--jobs", jobs, "worker pool size (default: hardware threads)");
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "override the output directory");

    auto* check = app.add_subcommand("check-config", "validate a config and exit");
    check->add_option("--config", config_path, "config file (JSON)")->required();

    auto* list = app.add_subcommand("list-presets", "list metric and nonlinearity presets");
    list->add_option("--config", config_path, "include custom presets from a config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, jobs, seed, out_dir);
        if (check->parsed()) return cmd_check(config_path);
        if (list->parsed()) return cmd_list_presets(config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
