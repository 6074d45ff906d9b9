#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "riemstab/config.hpp"
#include "riemstab/contour.hpp"
#include "riemstab/stability.hpp"

namespace riemstab {

// ---------------------------------------------------------------------------
// Logging, gated by the RIEMSTAB_LOG environment variable
// (off|error|warn|info|debug; default warn).
// ---------------------------------------------------------------------------

enum class LogLevel { Off = 0, Error, Warn, Info, Debug };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("RIEMSTAB_LOG");
        if (!env) return LogLevel::Warn;
        const std::string s(env);
        if (s == "off") return LogLevel::Off;
        if (s == "error") return LogLevel::Error;
        if (s == "warn") return LogLevel::Warn;
        if (s == "info") return LogLevel::Info;
        if (s == "debug") return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

inline void log(LogLevel level, const std::string& msg) {
    static const char* names[] = {"off", "error", "warn", "info", "debug"};
    if (static_cast<int>(level) <= static_cast<int>(log_level()))
        std::fprintf(stderr, "[riemstab:%s] %s\n", names[static_cast<int>(level)], msg.c_str());
}

// ---------------------------------------------------------------------------
// Initial data presets for solves: constant, random(seed, amplitude), bump,
// or a binary field dump per component.
// ---------------------------------------------------------------------------

inline SolutionState make_initial_state(const GridPtr& grid, int m, const json& spec,
                                        std::uint64_t seed) {
    SolutionState state(grid, m);
    const std::string kind = spec.contains("kind") ? spec["kind"].get<std::string>() : "constant";
    if (kind == "constant") {
        std::vector<double> values(m, 0.0);
        if (spec.contains("values")) {
            values.clear();
            for (const auto& v : spec["values"]) values.push_back(v.get<double>());
            if (static_cast<int>(values.size()) != m)
                throw ConfigInvalid("initial values must list one constant per component");
        }
        for (int c = 0; c < m; ++c)
            std::fill(state.u[c].v.begin(), state.u[c].v.end(), values[c]);
    } else if (kind == "random") {
        const double amp = spec.contains("amplitude") ? spec["amplitude"].get<double>() : 0.5;
        Rng rng(spec.contains("seed") ? spec["seed"].get<std::uint64_t>() : seed);
        for (int c = 0; c < m; ++c)
            for (auto& v : state.u[c].v) v = rng.symmetric(amp);
    } else if (kind == "bump") {
        const double amp = spec.contains("amplitude") ? spec["amplitude"].get<double>() : 0.5;
        TestFunctionFamily fam(TestFunctionFamily::Kind::RandomBump, 1, m,
                               spec.contains("seed") ? spec["seed"].get<std::uint64_t>() : seed,
                               0.5 * amp, amp);
        const auto bumps = fam.member(grid, 0);
        std::vector<double> base(m, 0.0);
        if (spec.contains("values"))
            for (int c = 0; c < m && c < static_cast<int>(spec["values"].size()); ++c)
                base[c] = spec["values"][c].get<double>();
        for (int c = 0; c < m; ++c)
            for (std::size_t p = 0; p < grid->size(); ++p)
                state.u[c].v[p] = base[c] + bumps[c].v[p];
    } else if (kind == "file") {
        if (!spec.contains("paths") || spec["paths"].size() != static_cast<std::size_t>(m))
            throw ConfigInvalid("initial kind 'file' needs one dump path per component");
        for (int c = 0; c < m; ++c) {
            std::ifstream in(spec["paths"][c].get<std::string>(), std::ios::binary);
            if (!in) throw ConfigInvalid("cannot read initial field dump");
            state.u[c] = read_binary(grid, in);
        }
    } else {
        throw ConfigInvalid("unknown initial data kind '" + kind + "'");
    }
    return state;
}

// ---------------------------------------------------------------------------
// Experiment dispatch
// ---------------------------------------------------------------------------

namespace detail {

// solve -> classify -> margin pipeline shared by the two inequality
// experiments
inline ExperimentReport inequality_experiment(const RunConfig& cfg, const ExperimentSpec& spec,
                                              bool poincare) {
    ExperimentReport report;
    report.kind = spec.kind;
    const auto& o = spec.options;
    auto chart = cfg.registry.chart(cfg.chart_preset, cfg.chart_params);
    auto nl = cfg.registry.nonlinearity(cfg.nonlinearity_preset, cfg.nonlinearity_params);
    const int grid_n = o.contains("grid_n") ? o["grid_n"].get<int>()
                       : cfg.grid.empty()   ? 64
                                            : cfg.grid[0];
    auto grid = Grid::create(chart, std::vector<int>(chart.dim(), grid_n));
    const auto L = assemble_laplacian(grid);

    auto state = make_initial_state(grid, nl.components(),
                                    o.contains("initial") ? o["initial"] : json::object(),
                                    derive_seed(cfg.seed, 0x111));
    NewtonOptions newton;
    newton.pin_mean = true;
    const auto solve = newton_solve(L, nl, state, newton);
    const auto cls = classify_stability(L, nl, state);
    json summary = {{"converged", solve.converged},
                    {"residual", solve.final_residual},
                    {"mu1", cls.mu1},
                    {"classification", cls.verdict == StabilityVerdict::Stable    ? "stable"
                                       : cls.verdict == StabilityVerdict::Unstable ? "unstable"
                                                                                   : "indeterminate"}};
    if (cls.verdict != StabilityVerdict::Stable) {
        report.verdict = Verdict::Inconclusive;
        summary["note"] = "state not classified Stable; margins not evaluated";
        report.records.push_back(std::move(summary));
        return report;
    }

    int bumps = 1000, trig = 16;
    if (o.contains("test_functions")) {
        reject_unknown_keys(o["test_functions"], {"bumps", "trig"}, "/test_functions");
        if (o["test_functions"].contains("bumps"))
            bumps = o["test_functions"]["bumps"].get<int>();
        if (o["test_functions"].contains("trig")) trig = o["test_functions"]["trig"].get<int>();
    }
    const double factor =
        o.contains("margin_factor") ? o["margin_factor"].get<double>() : (poincare ? 1e-5 : 1e-6);
    report.tolerances = {{"margin_factor", factor}};
    const auto families =
        default_families(chart.spec, nl.components(), bumps, derive_seed(cfg.seed, 0x7e57), trig);
    InequalityOptions iopt;
    iopt.require_stable = false;  // classification already done above
    const MarginReport margins =
        poincare ? poincare_check(L, nl, state, families, iopt)
                 : stability_inequality_check(L, nl, state, families, iopt);

    // absolute floor keeps the relative criterion meaningful when the
    // solution is constant and both sides vanish
    const double tiny = 1e-12 * grid->total_volume() * (1.0 + sqr(state.sup_norm()));
    bool ok = true;
    std::map<std::string, std::uint64_t> family_seeds;
    for (const auto& fam : families)
        family_seeds[detail::family_name(fam.kind())] = fam.seed();
    for (const auto& row : margins.rows) {
        const bool row_ok = row.margin >= -(factor * row.rhs + tiny);
        ok &= row_ok;
        if (!row_ok && report.violation.empty())
            report.violation = {{"family", row.family}, {"index", row.index},
                                {"margin", row.margin}, {"rhs", row.rhs}};
        report.records.push_back({{"family", row.family},
                                  {"index", row.index},
                                  {"seed", derive_seed(family_seeds[row.family], row.index)},
                                  {"lhs", row.lhs},
                                  {"rhs", row.rhs},
                                  {"margin", row.margin},
                                  {"margin_literal", row.margin_literal}});
    }
    summary["min_margin"] = margins.min_margin;
    summary["min_margin_literal"] = margins.min_margin_literal;
    summary["max_rhs"] = margins.max_rhs;
    log(LogLevel::Info, spec.id + ": min margin " + std::to_string(margins.min_margin));
    report.verdict = ok ? Verdict::Consistent : Verdict::Violation;
    report.summary = std::move(summary);
    return report;
}

} // namespace detail

inline ExperimentReport run_experiment(const RunConfig& cfg, const ExperimentSpec& spec) {
    const auto& o = spec.options;
    auto chart = [&] { return cfg.registry.chart(cfg.chart_preset, cfg.chart_params); };
    ExperimentReport report;
    if (spec.kind == "bochner_sweep") {
        BochnerSweepOptions opt;
        if (o.contains("resolutions")) {
            opt.resolutions.clear();
            for (const auto& n : o["resolutions"]) opt.resolutions.push_back(n.get<int>());
        }
        if (o.contains("functions")) opt.functions = o["functions"].get<int>();
        if (o.contains("interior_margin")) opt.interior_margin = o["interior_margin"].get<int>();
        opt.seed = derive_seed(cfg.seed, 0xB0C);
        report = bochner_sweep(chart(), opt);
    } else if (spec.kind == "hessian_inequality_scan") {
        HessianScanOptions opt;
        if (o.contains("grid_n")) opt.grid_n = o["grid_n"].get<int>();
        if (o.contains("functions")) opt.functions = o["functions"].get<int>();
        if (o.contains("eps_grad")) opt.eps_grad = o["eps_grad"].get<double>();
        opt.seed = derive_seed(cfg.seed, 0x4E5);
        report = hessian_inequality_scan(chart(), opt);
    } else if (spec.kind == "liouville_compact") {
        LiouvilleOptions opt;
        if (o.contains("grid_n")) opt.grid_n = o["grid_n"].get<int>();
        if (o.contains("starts")) opt.starts = o["starts"].get<int>();
        if (o.contains("flow_time")) opt.flow_time = o["flow_time"].get<double>();
        if (o.contains("amplitude")) opt.amplitude = o["amplitude"].get<double>();
        if (o.contains("constancy_factor"))
            opt.constancy_factor = o["constancy_factor"].get<double>();
        opt.seed = derive_seed(cfg.seed, 0x110);
        report = liouville_compact(
            chart(), cfg.registry.nonlinearity(cfg.nonlinearity_preset, cfg.nonlinearity_params),
            opt);
    } else if (spec.kind == "volume_growth") {
        VolumeGrowthOptions opt;
        if (o.contains("dim")) opt.dim = o["dim"].get<int>();
        if (o.contains("radii")) opt.radii = detail::number_list(o["radii"], "/radii");
        if (o.contains("spacing")) opt.spacing = o["spacing"].get<double>();
        report = volume_growth(opt);
    } else if (spec.kind == "parabolicity_capacity") {
        CapacityOptions opt;
        if (o.contains("dim")) opt.dim = o["dim"].get<int>();
        if (o.contains("radii")) opt.radii = detail::number_list(o["radii"], "/radii");
        if (o.contains("spacing")) opt.spacing = o["spacing"].get<double>();
        if (o.contains("inner_radius")) opt.inner_radius = o["inner_radius"].get<double>();
        if (o.contains("rel_tol")) opt.rel_tol = o["rel_tol"].get<double>();
        report = parabolicity_capacity(opt);
        report.records.push_back(
            {{"R", 0.0}, {"capacity", nullptr}, {"capacity_h", nullptr},
             {"capacity_2h", nullptr}, {"closed_form", nullptr}, {"rel_err", nullptr},
             {"note", "capacity criterion for the parabolicity definition"}});
    } else if (spec.kind == "level_set_geodesic") {
        const int grid_n = o.contains("grid_n") ? o["grid_n"].get<int>()
                           : cfg.grid.empty()   ? 128
                                                : cfg.grid[0];
        auto ch = chart();
        auto grid = Grid::create(ch, std::vector<int>(ch.dim(), grid_n));
        const std::string field =
            o.contains("field") ? o["field"].get<std::string>() : "cos_axis0";
        DiscreteScalarField u;
        if (field == "cos_axis0") u = sample(grid, AnalyticScalar::cosine_axis(ch.dim(), 0));
        else if (field == "coordinate1") u = sample(grid, AnalyticScalar::coordinate(ch.dim(), 1));
        else throw ConfigInvalid("unknown level-set field preset '" + field + "'");
        LevelSetOptions opt;
        if (o.contains("level")) opt.level = o["level"].get<double>();
        if (o.contains("eps_grad")) opt.eps_grad = o["eps_grad"].get<double>();
        if (o.contains("expect_geodesic")) opt.expect_geodesic = o["expect_geodesic"].get<bool>();
        if (o.contains("geodesic_tol")) opt.geodesic_tol = o["geodesic_tol"].get<double>();
        if (o.contains("expect_defect")) opt.expect_defect = o["expect_defect"].get<double>();
        if (o.contains("defect_rel_tol")) opt.defect_rel_tol = o["defect_rel_tol"].get<double>();
        report = level_set_geodesic_check(u, opt);
    } else if (spec.kind == "stability_inequality") {
        report = detail::inequality_experiment(cfg, spec, /*poincare=*/false);
    } else if (spec.kind == "poincare") {
        report = detail::inequality_experiment(cfg, spec, /*poincare=*/true);
    } else {
        throw ConfigInvalid("unknown experiment kind '" + spec.kind + "'");
    }
    report.id = spec.id;
    report.inputs_digest = fnv1a_digest(cfg.raw.dump() + "#" + spec.id);
    return report;
}

// ---------------------------------------------------------------------------
// Run orchestration: a bounded worker pool over independent experiment jobs;
// reports land in job order regardless of scheduling.
// ---------------------------------------------------------------------------

struct RunResult {
    std::vector<ExperimentReport> reports;
    bool any_violation = false;
    bool any_failure = false;
};

inline RunResult run_config(const RunConfig& cfg) {
    RunResult result;
    result.reports.resize(cfg.experiments.size());
    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int jobs = std::max(1, std::min<int>(cfg.jobs > 0 ? cfg.jobs : std::max(hw, 1),
                                               static_cast<int>(cfg.experiments.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= cfg.experiments.size()) return;
            const auto& spec = cfg.experiments[k];
            log(LogLevel::Info, "running " + spec.id);
            try {
                result.reports[k] = run_experiment(cfg, spec);
            } catch (const std::exception& e) {
                ExperimentReport rep;
                rep.id = spec.id;
                rep.kind = spec.kind;
                rep.inputs_digest = fnv1a_digest(cfg.raw.dump() + "#" + spec.id);
                rep.verdict = Verdict::Inconclusive;
                rep.error = e.what();
                result.reports[k] = std::move(rep);
                log(LogLevel::Error, spec.id + " failed: " + e.what());
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& rep : result.reports) {
        result.any_violation |= rep.verdict == Verdict::Violation;
        result.any_failure |= !rep.error.empty();
    }
    return result;
}

inline void write_reports(const std::string& out_dir, const RunConfig& cfg,
                          const RunResult& result) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    json run;
    run["run"] = {{"digest", fnv1a_digest(cfg.raw.dump())}, {"seed", cfg.seed}};
    run["experiments"] = json::array();
    for (const auto& rep : result.reports) run["experiments"].push_back(rep.to_json());
    std::ofstream(out_dir + "/report.json") << run.dump(2) << "\n";
    for (const auto& rep : result.reports) {
        const auto table = rep.csv();
        if (!table.empty()) std::ofstream(out_dir + "/" + rep.id + ".csv") << table;
    }
    json replay = cfg.raw;
    replay["seed"] = cfg.seed;
    std::ofstream(out_dir + "/replay.json") << replay.dump(2) << "\n";
}

} // namespace riemstab
