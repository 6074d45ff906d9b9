// Acceptance suite: one test per criterion, each printing a single
// [acceptance] line with its measured numbers. Tolerances are fixed here,
// not configurable.

#include <gtest/gtest.h>

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "riemstab/riemstab.hpp"

using namespace riemstab;
namespace fs = std::filesystem;

namespace {

const double kPi = M_PI;

class Timer {
public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

void criterion_line(int k, const char* name, bool pass, const std::string& detail) {
    std::printf("[acceptance] criterion %02d %-22s %s  (%s)\n", k, name,
                pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

GridPtr torus_grid(int n) {
    return Grid::create(make_chart("flat_torus", {2 * kPi, 2 * kPi}), {n, n});
}

SolutionState constant_state(const GridPtr& grid, std::vector<double> values) {
    SolutionState s(grid, static_cast<int>(values.size()));
    for (std::size_t c = 0; c < values.size(); ++c)
        std::fill(s.u[c].v.begin(), s.u[c].v.end(), values[c]);
    return s;
}

// flow + Newton from a bump-perturbed constant; the pipeline every
// numerically-Stable solution in the suite comes from
SolutionState solve_from(const GridPtr& grid, const SparseOperator& L, const Nonlinearity& nl,
                         std::vector<double> base, double flow_time, std::uint64_t seed) {
    auto state = constant_state(grid, std::move(base));
    TestFunctionFamily bumps(TestFunctionFamily::Kind::RandomBump, 1, nl.components(), seed,
                             0.1, 0.25);
    const auto noise = bumps.member(grid, 0);
    for (int c = 0; c < nl.components(); ++c)
        for (std::size_t p = 0; p < grid->size(); ++p) state.u[c].v[p] += noise[c].v[p];
    const double dt = stable_dt(*grid);
    const int steps = static_cast<int>(std::ceil(flow_time / dt));
    state = gradient_flow(L, nl, state, flow_time / steps, steps);
    NewtonOptions opt;
    opt.pin_mean = true;
    const auto report = newton_solve(L, nl, state, opt);
    EXPECT_TRUE(report.converged);
    return state;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

// --------------------------------------------------------------------------
// 1. Sphere Christoffel/Ricci closed forms to 1e-10 at 100 random points;
//    flat presets exactly zero. Runtime < 1 s.
// --------------------------------------------------------------------------
TEST(Acceptance, C01_GeometryOracles) {
    Timer timer;
    double worst = 0.0;
    auto sphere = make_chart("sphere", {1.0, 0.15});
    Rng rng(0xC1);
    for (int trial = 0; trial < 100; ++trial) {
        auto p = sphere.random_interior_point(rng);
        const double t = p[0];
        const auto gamma = christoffel(sphere.metric, p.data());
        worst = std::max(worst, std::abs(gamma[0](1, 1) + std::sin(t) * std::cos(t)));
        worst = std::max(worst, std::abs(gamma[1](0, 1) - std::cos(t) / std::sin(t)));
        worst = std::max(worst, std::abs(gamma[0](0, 0)));
        worst = std::max(worst, std::abs(gamma[0](0, 1)));
        worst = std::max(worst, std::abs(gamma[1](0, 0)));
        worst = std::max(worst, std::abs(gamma[1](1, 1)));
        const Mat ric = ricci(sphere.metric, p.data());
        worst = std::max(worst, (ric - sphere.metric.g(p.data())).max_abs());
    }
    double flat_worst = 0.0;
    for (const char* preset : {"flat_torus", "flat_rect", "scaled_flat", "flat_skew"}) {
        auto chart = std::string(preset) == "scaled_flat"
                         ? make_chart(preset, {2.5, 2 * kPi, 2 * kPi})
                     : std::string(preset) == "flat_skew"
                         ? make_chart(preset, {2.0, 0.5, 1.0, 2 * kPi, 2 * kPi})
                         : make_chart(preset, {2 * kPi, 2 * kPi});
        for (int trial = 0; trial < 20; ++trial) {
            auto p = chart.random_interior_point(rng);
            for (const auto& gk : christoffel(chart.metric, p.data()))
                flat_worst = std::max(flat_worst, gk.max_abs());
            flat_worst = std::max(flat_worst, ricci(chart.metric, p.data()).max_abs());
        }
    }
    const double elapsed = timer.seconds();
    const bool pass = worst <= 1e-10 && flat_worst == 0.0 && elapsed < 1.0;
    criterion_line(1, "geometry oracles", pass,
                   fmt("sphere max dev %.2e, flat max %.1e, %.2fs", worst, flat_worst, elapsed));
    EXPECT_LE(worst, 1e-10);
    EXPECT_EQ(flat_worst, 0.0);
    EXPECT_LT(elapsed, 1.0);
}

// --------------------------------------------------------------------------
// 2. Bochner identity: fitted order in [1.8, 2.2] for 10 trig functions on
//    the torus and the sphere band over {32^2, 64^2, 128^2}. Runtime < 30 s.
// --------------------------------------------------------------------------
TEST(Acceptance, C02_BochnerConvergence) {
    Timer timer;
    double order_lo = 1e9, order_hi = -1e9;
    bool all_ok = true;
    for (const char* preset : {"flat_torus", "sphere"}) {
        auto chart = std::string(preset) == "sphere" ? make_chart("sphere", {1.0, 0.15})
                                                     : make_chart(preset, {2 * kPi, 2 * kPi});
        BochnerSweepOptions opt;
        opt.resolutions = {32, 64, 128};
        opt.functions = 10;
        opt.seed = 0xB0C + (std::string(preset) == "sphere");
        const auto report = bochner_sweep(chart, opt);
        all_ok &= report.verdict == Verdict::Consistent;
        for (const auto& rec : report.records)
            if (rec["n"].get<int>() == 0) {
                const double order = rec["fitted_order"].get<double>();
                order_lo = std::min(order_lo, order);
                order_hi = std::max(order_hi, order);
            }
    }
    const double elapsed = timer.seconds();
    const bool pass = all_ok && order_lo >= 1.8 && order_hi <= 2.2 && elapsed < 30.0;
    criterion_line(2, "bochner convergence", pass,
                   fmt("orders in [%.3f, %.3f], %.1fs", order_lo, order_hi, elapsed));
    EXPECT_GE(order_lo, 1.8);
    EXPECT_LE(order_hi, 2.2);
    EXPECT_LT(elapsed, 30.0);
}

// --------------------------------------------------------------------------
// 3. Discrete eigenfunctions: -sin x on the torus and -2 cos(theta) on the
//    sphere band, max error <= C h^2 with refinement ratios >= 3.6.
// --------------------------------------------------------------------------
TEST(Acceptance, C03_Eigenfunctions) {
    auto run_case = [](const Chart& chart, const AnalyticScalar& f, auto lap_exact, int margin,
                       std::vector<double>& errs, std::vector<double>& hs) {
        for (int n : {32, 64, 128}) {
            auto grid = Grid::create(chart, {n, n});
            const auto L = assemble_laplacian(grid);
            const auto lf = L.apply(sample(grid, f).v);
            double err = 0.0;
            for (std::size_t p = 0; p < grid->size(); ++p) {
                if (grid->boundary_margin(p) < margin) continue;
                err = std::max(err, std::abs(lf[p] - lap_exact(grid->coords(p).data())));
            }
            errs.push_back(err);
            hs.push_back(grid->spacing(0));
        }
    };
    std::vector<double> torus_err, torus_h, sphere_err, sphere_h;
    run_case(make_chart("flat_torus", {2 * kPi, 2 * kPi}), AnalyticScalar::sine_axis(2, 0),
             [](const double* p) { return -std::sin(p[0]); }, 0, torus_err, torus_h);
    run_case(make_chart("sphere", {1.0, 0.15}), AnalyticScalar::cosine_axis(2, 0),
             [](const double* p) { return -2.0 * std::cos(p[0]); }, 3, sphere_err, sphere_h);

    double min_ratio = 1e18, c_torus = 0.0, c_sphere = 0.0;
    for (std::size_t k = 1; k < torus_err.size(); ++k) {
        min_ratio = std::min(min_ratio, torus_err[k - 1] / torus_err[k]);
        min_ratio = std::min(min_ratio, sphere_err[k - 1] / sphere_err[k]);
    }
    for (std::size_t k = 0; k < torus_err.size(); ++k) {
        c_torus = std::max(c_torus, torus_err[k] / sqr(torus_h[k]));
        c_sphere = std::max(c_sphere, sphere_err[k] / sqr(sphere_h[k]));
    }
    const bool pass = min_ratio >= 3.6;
    criterion_line(3, "eigenfunction checks", pass,
                   fmt("refinement ratio >= %.2f, C_torus %.3f, C_sphere %.3f", min_ratio,
                       c_torus, c_sphere));
    EXPECT_GE(min_ratio, 3.6);
}

// --------------------------------------------------------------------------
// 4. Stability inequality: analytic margin 6 pi^2 +- 1% for Allen-Cahn at
//    u = 1 with phi = sin x at 128^2; for numerically Stable bose and
//    gradient_double_well solutions, 1000 seeded test functions all give
//    margin >= -1e-6 RHS. Runtime < 2 min.
// --------------------------------------------------------------------------
TEST(Acceptance, C04_StabilityInequality) {
    Timer timer;
    // analytic case at 128^2
    double analytic_margin = 0.0;
    {
        auto grid = torus_grid(128);
        const auto L = assemble_laplacian(grid);
        auto ac = make_nonlinearity("allen_cahn", {});
        const StabilityInequalityContext ctx(L, ac, constant_state(grid, {1.0}));
        analytic_margin = ctx.row_for({sample(grid, AnalyticScalar::sine_axis(2, 0))}).margin;
    }
    const double expected = 6.0 * kPi * kPi;
    const bool analytic_ok = std::abs(analytic_margin - expected) <= 0.01 * expected;

    // property run over Stable solutions of the coupled presets
    auto grid = torus_grid(64);
    const auto L = assemble_laplacian(grid);
    double worst_rel_margin = 1e18;
    bool all_stable = true;
    int members = 0;
    for (const char* preset : {"bose", "gradient_double_well"}) {
        auto nl = make_nonlinearity(preset, {});
        const auto state = solve_from(grid, L, nl,
                                      std::string(preset) == "bose"
                                          ? std::vector<double>{0.8, 0.3}
                                          : std::vector<double>{0.7, 0.7},
                                      3.0, 0xC4);
        const auto cls = classify_stability(L, nl, state);
        all_stable &= cls.verdict == StabilityVerdict::Stable;
        const StabilityInequalityContext ctx(L, nl, state);
        const auto families = default_families(grid->chart().spec, nl.components(), 984,
                                               derive_seed(0xC4, 1), 16);
        for (const auto& fam : families)
            for (int idx = 0; idx < fam.count(); ++idx) {
                const auto row = ctx.row_for(fam.member(grid, idx));
                worst_rel_margin = std::min(worst_rel_margin,
                                            row.margin / std::max(row.rhs, 1e-300));
                ++members;
            }
    }
    const double elapsed = timer.seconds();
    const bool property_ok = all_stable && worst_rel_margin >= -1e-6;
    const bool pass = analytic_ok && property_ok && elapsed < 120.0;
    criterion_line(4, "stability inequality", pass,
                   fmt("analytic margin %.4f vs %.4f, %d members, min margin/RHS %.2e, %.1fs",
                       analytic_margin, expected, members, worst_rel_margin, elapsed));
    EXPECT_TRUE(analytic_ok);
    EXPECT_TRUE(all_stable);
    EXPECT_GE(worst_rel_margin, -1e-6);
    EXPECT_EQ(members, 2000);
    EXPECT_LT(elapsed, 120.0);
}

// --------------------------------------------------------------------------
// 5. Poincare inequality: margins >= -1e-5 RHS for 100 seeded eta on every
//    Stable solution in the preset suite (absolute roundoff floor documented
//    in the runner).
// --------------------------------------------------------------------------
TEST(Acceptance, C05_PoincareInequality) {
    auto grid = torus_grid(64);
    const auto L = assemble_laplacian(grid);
    double worst = 1e18;
    int solutions = 0;
    for (const char* preset : {"allen_cahn", "bose", "gradient_double_well"}) {
        auto nl = make_nonlinearity(preset, {});
        SolutionState state =
            std::string(preset) == "allen_cahn"
                ? constant_state(grid, {1.0})
                : solve_from(grid, L, nl,
                             std::string(preset) == "bose" ? std::vector<double>{0.8, 0.3}
                                                           : std::vector<double>{0.7, 0.7},
                             3.0, 0xC5);
        const auto cls = classify_stability(L, nl, state);
        ASSERT_EQ(cls.verdict, StabilityVerdict::Stable) << preset;
        ++solutions;
        const PoincareContext ctx(L, nl, state);
        TestFunctionFamily fam(TestFunctionFamily::Kind::RandomBump, 100, nl.components(),
                               derive_seed(0xC5, 7));
        const double tiny = 1e-12 * grid->total_volume() * (1.0 + sqr(state.sup_norm()));
        for (int idx = 0; idx < fam.count(); ++idx) {
            const auto row = ctx.row_for(fam.member(grid, idx));
            worst = std::min(worst, (row.margin + tiny) / std::max(row.rhs, tiny));
        }
    }
    const bool pass = worst >= -1e-5;
    criterion_line(5, "poincare inequality", pass,
                   fmt("%d stable solutions, min margin/RHS %.2e", solutions, worst));
    EXPECT_GE(worst, -1e-5);
}

// --------------------------------------------------------------------------
// 6. Liouville consistency: 20-start experiments on the flat torus (bose)
//    and the sphere band (allen_cahn) produce zero Stable-and-nonconstant
//    outcomes; the unstable constant control has mu1 = -1 +- 5%.
//    Runtime < 5 min.
// --------------------------------------------------------------------------
TEST(Acceptance, C06_LiouvilleConsistency) {
    Timer timer;
    int stable_total = 0;
    bool consistent = true;
    {
        LiouvilleOptions opt;
        opt.grid_n = 64;
        opt.starts = 20;
        opt.flow_time = 3.0;
        opt.seed = 0xC6;
        const auto report = liouville_compact(make_chart("flat_torus", {2 * kPi, 2 * kPi}),
                                              make_nonlinearity("bose", {}), opt);
        consistent &= report.verdict == Verdict::Consistent;
        for (const auto& rec : report.records)
            if (rec.contains("classification") && rec["classification"] == "stable")
                ++stable_total;
    }
    {
        LiouvilleOptions opt;
        opt.grid_n = 32;
        opt.starts = 20;
        opt.flow_time = 1.0;
        opt.seed = 0xC6 + 1;
        const auto report = liouville_compact(make_chart("sphere", {1.0, 0.15}),
                                              make_nonlinearity("allen_cahn", {}), opt);
        consistent &= report.verdict == Verdict::Consistent;
        for (const auto& rec : report.records)
            if (rec.contains("classification") && rec["classification"] == "stable")
                ++stable_total;
    }
    // negative control: Allen-Cahn at u = 0 must be Unstable with mu1 = -1
    double mu1 = 0.0;
    {
        auto grid = torus_grid(64);
        const auto L = assemble_laplacian(grid);
        auto ac = make_nonlinearity("allen_cahn", {});
        const auto cls = classify_stability(L, ac, constant_state(grid, {0.0}));
        mu1 = cls.mu1;
        consistent &= cls.verdict == StabilityVerdict::Unstable;
    }
    const double elapsed = timer.seconds();
    const bool control_ok = std::abs(mu1 + 1.0) <= 0.05;
    const bool pass = consistent && control_ok && stable_total > 0 && elapsed < 300.0;
    criterion_line(6, "liouville consistency", pass,
                   fmt("%d stable outcomes all constant, control mu1 %.4f, %.1fs",
                       stable_total, mu1, elapsed));
    EXPECT_TRUE(consistent);
    EXPECT_GT(stable_total, 0);
    EXPECT_NEAR(mu1, -1.0, 0.05);
    EXPECT_LT(elapsed, 300.0);
}

// --------------------------------------------------------------------------
// 7. Volume growth: R^-4 |B_R| decreases by 4 +- 15% per doubling in flat 2D
//    and by 2 +- 15% in flat 3D.
// --------------------------------------------------------------------------
TEST(Acceptance, C07_VolumeGrowth) {
    auto factors_of = [](int dim, std::vector<double> radii, double h) {
        VolumeGrowthOptions opt;
        opt.dim = dim;
        opt.radii = std::move(radii);
        opt.spacing = h;
        const auto report = volume_growth(opt);
        std::vector<double> factors;
        for (const auto& rec : report.records)
            if (rec["doubling_factor"].get<double>() > 0.0)
                factors.push_back(rec["doubling_factor"].get<double>());
        return factors;
    };
    const auto f2 = factors_of(2, {4.0, 8.0, 16.0}, 0.5);
    const auto f3 = factors_of(3, {3.0, 6.0, 12.0}, 0.5);
    bool pass = f2.size() == 2 && f3.size() == 2;
    double w2 = 0.0, w3 = 0.0;
    for (double f : f2) {
        pass &= std::abs(f - 4.0) <= 0.15 * 4.0;
        w2 = std::max(w2, std::abs(f - 4.0) / 4.0);
    }
    for (double f : f3) {
        pass &= std::abs(f - 2.0) <= 0.15 * 2.0;
        w3 = std::max(w3, std::abs(f - 2.0) / 2.0);
    }
    criterion_line(7, "volume growth", pass,
                   fmt("2D factor dev %.1f%%, 3D factor dev %.1f%%", 100 * w2, 100 * w3));
    EXPECT_TRUE(pass);
}

// --------------------------------------------------------------------------
// 8. Parabolicity via capacity: planar capacities match 2 pi / ln R within
//    5% for R in {8, 16, 32}; 3D capacities plateau at 4 pi within 5%.
// --------------------------------------------------------------------------
TEST(Acceptance, C08_ParabolicityCapacity) {
    Timer timer;
    bool pass2 = true;
    double worst2 = 0.0;
    {
        CapacityOptions opt;
        opt.dim = 2;
        opt.radii = {8.0, 16.0, 32.0};
        opt.spacing = 0.125;
        opt.rel_tol = 0.05;
        const auto report = parabolicity_capacity(opt);
        pass2 = report.verdict == Verdict::Consistent;
        for (const auto& rec : report.records)
            if (!rec["rel_err"].is_null())
                worst2 = std::max(worst2, rec["rel_err"].get<double>());
    }
    double plateau_err = 1.0;
    {
        CapacityOptions opt;
        opt.dim = 3;
        opt.radii = {4.0, 6.0, 8.0};
        opt.spacing = 0.125;
        opt.rel_tol = 0.05;
        const auto report = parabolicity_capacity(opt);
        for (const auto& rec : report.records)
            if (rec["note"] == "plateau extrapolation at 1/R -> 0")
                plateau_err = rec["rel_err"].get<double>();
    }
    const double elapsed = timer.seconds();
    const bool pass = pass2 && worst2 <= 0.05 && plateau_err <= 0.05;
    criterion_line(8, "parabolicity capacity", pass,
                   fmt("2D worst %.2f%%, 3D plateau dev %.2f%%, %.1fs", 100 * worst2,
                       100 * plateau_err, elapsed));
    EXPECT_TRUE(pass2);
    EXPECT_LE(worst2, 0.05);
    EXPECT_LE(plateau_err, 0.05);
}

// --------------------------------------------------------------------------
// 9. Level-set geodesy at 128^2: equator of cos(theta) has defect <= 2e-3;
//    the latitude circle at theta = pi/3 reports defect 0.577 +- 5%.
// --------------------------------------------------------------------------
TEST(Acceptance, C09_LevelSetGeodesy) {
    auto grid = Grid::create(make_chart("sphere", {1.0, 0.15}), {128, 128});
    auto u = sample(grid, AnalyticScalar::cosine_axis(2, 0));

    LevelSetOptions equator;
    equator.level = 0.0;
    equator.expect_geodesic = true;
    equator.geodesic_tol = 2e-3;
    const auto eq_report = level_set_geodesic_check(u, equator);
    const double eq_defect = eq_report.records[0]["max_defect"].get<double>();

    LevelSetOptions latitude;
    latitude.level = std::cos(kPi / 3.0);
    latitude.expect_defect = 1.0 / std::sqrt(3.0);
    latitude.defect_rel_tol = 0.05;
    const auto lat_report = level_set_geodesic_check(u, latitude);
    const double lat_defect = lat_report.records[0]["mean_defect"].get<double>();

    const bool pass = eq_report.verdict == Verdict::Consistent &&
                      lat_report.verdict == Verdict::Consistent;
    criterion_line(9, "level-set geodesy", pass,
                   fmt("equator defect %.2e, latitude defect %.4f (target 0.5774)", eq_defect,
                       lat_defect));
    EXPECT_EQ(eq_report.verdict, Verdict::Consistent);
    EXPECT_EQ(lat_report.verdict, Verdict::Consistent);
    EXPECT_LE(eq_defect, 2e-3);
    EXPECT_NEAR(lat_defect, 0.5773502691896258, 0.05 * 0.5773502691896258);
}

// --------------------------------------------------------------------------
// 10. Determinism: identical config + seed produce byte-identical reports.
// --------------------------------------------------------------------------
TEST(Acceptance, C10_Determinism) {
    const auto cfg = parse_config(json::parse(R"({
      "chart": {"preset": "flat_torus", "params": [6.283185307179586, 6.283185307179586]},
      "nonlinearity": {"preset": "bose"},
      "seed": 424242,
      "experiments": [
        {"kind": "bochner_sweep", "resolutions": [8, 16, 32], "functions": 2},
        {"kind": "hessian_inequality_scan", "grid_n": 16, "functions": 2},
        {"kind": "volume_growth", "dim": 2, "radii": [2.0, 4.0], "spacing": 0.5},
        {"kind": "liouville_compact", "grid_n": 16, "starts": 2, "flow_time": 0.5}
      ]
    })"));
    const fs::path out_a = fs::temp_directory_path() / "riemstab_acc_a";
    const fs::path out_b = fs::temp_directory_path() / "riemstab_acc_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    write_reports(out_a.string(), cfg, run_config(cfg));
    write_reports(out_b.string(), cfg, run_config(cfg));
    bool identical = true;
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(out_a)) {
        ++files;
        identical &= slurp(entry.path()) == slurp(out_b / entry.path().filename());
    }
    const bool pass = identical && files >= 3;
    criterion_line(10, "determinism", pass, fmt("%zu report files byte-identical", files));
    EXPECT_TRUE(identical);
    fs::remove_all(out_a);
    fs::remove_all(out_b);
}
