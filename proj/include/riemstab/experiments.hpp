#pragma once

#include <string>
#include <vector>

#include "riemstab/contour.hpp"
#include "riemstab/distance.hpp"
#include "riemstab/report.hpp"
#include "riemstab/stability.hpp"

namespace riemstab {

// ---------------------------------------------------------------------------
// Bochner identity sweep: discrete residual of
//   1/2 Lap|grad f|^2 = |H_f|^2 + grad(Lap f).grad f + Ric(grad f, grad f)
// over a resolution ladder, fitted convergence order per test function.
// ---------------------------------------------------------------------------

struct BochnerSweepOptions {
    std::vector<int> resolutions = {32, 64, 128};
    int functions = 10;
    int interior_margin = 3;         // stencil rows skipped near chart boundaries
    double band_margin_frac = 0.15;  // fixed sub-band fraction excluded per
                                     // non-periodic end, so the measurement
                                     // region does not creep toward the caps
                                     // (where metric factors diverge) as the
                                     // grid refines
    int max_mode = 2;                // highest trig mode per axis; metric
                                     // stretching multiplies effective
                                     // frequencies near band edges, so sweeps
                                     // on warped charts keep this low
    double order_lo = 1.8, order_hi = 2.2;
    std::uint64_t seed = 1;
};

// nodes outside the fixed interior sub-band of non-periodic axes
inline bool in_interior_band(const Grid& g, std::size_t p, double frac) {
    const auto coords = g.coords(p);
    for (int k = 0; k < g.dim(); ++k) {
        if (g.periodic(k)) continue;
        const double lo = g.chart().spec.ranges[k][0];
        const double len = g.chart().spec.length(k);
        if (coords[k] < lo + frac * len || coords[k] > lo + (1.0 - frac) * len) return false;
    }
    return true;
}

inline DiscreteScalarField bochner_discrete_residual(const GridPtr& grid,
                                                     const SparseOperator& L,
                                                     const DiscreteScalarField& f,
                                                     const GeometryTables& tables) {
    const auto grad_sq = grad_norm_sq(f);
    std::vector<double> half_lap_g(grid->size());
    L.apply(grad_sq.v.data(), half_lap_g.data());
    const auto hess_sq = hessian_norm_sq_field(f, tables);
    DiscreteScalarField lap_f(grid);
    L.apply(f.v.data(), lap_f.v.data());
    const auto dot = grad_inner(covariant_partials(lap_f), covariant_partials(f));
    const auto ric = ricci_quadratic_field(f, tables);
    DiscreteScalarField res(grid);
    for (std::size_t p = 0; p < grid->size(); ++p)
        res.v[p] = 0.5 * half_lap_g[p] - (hess_sq.v[p] + dot.v[p] + ric.v[p]);
    return res;
}

inline DiscreteScalarField bochner_discrete_residual(const GridPtr& grid,
                                                     const SparseOperator& L,
                                                     const DiscreteScalarField& f) {
    return bochner_discrete_residual(grid, L, f, geometry_tables(*grid));
}

inline ExperimentReport bochner_sweep(const Chart& chart, const BochnerSweepOptions& opt = {}) {
    ExperimentReport report;
    report.kind = "bochner_sweep";
    report.tolerances = {{"order_lo", opt.order_lo}, {"order_hi", opt.order_hi}};
    if (opt.resolutions.size() < 3)
        throw ConfigInvalid("bochner_sweep needs at least 3 resolutions");

    const auto base = trig_base_freq(chart.spec);
    std::vector<AnalyticScalar> functions;
    for (int fn = 0; fn < opt.functions; ++fn) {
        Rng rng(derive_seed(opt.seed, fn));
        functions.push_back(
            AnalyticScalar::random_trig(chart.dim(), base, rng, 3, opt.max_mode));
    }

    std::vector<std::vector<double>> errs(opt.functions);
    std::vector<double> hs;
    for (int n : opt.resolutions) {
        auto grid = Grid::create(chart, std::vector<int>(chart.dim(), n));
        const auto L = assemble_laplacian(grid);
        const auto tables = geometry_tables(*grid);
        hs.push_back(grid->spacing(0));
        for (int fn = 0; fn < opt.functions; ++fn) {
            const auto res =
                bochner_discrete_residual(grid, L, sample(grid, functions[fn]), tables);
            double err = 0.0;
            for (std::size_t p = 0; p < grid->size(); ++p) {
                if (grid->boundary_margin(p) < opt.interior_margin) continue;
                if (!in_interior_band(*grid, p, opt.band_margin_frac)) continue;
                err = std::max(err, std::abs(res.v[p]));
            }
            errs[fn].push_back(err);
        }
    }

    bool all_orders_ok = true;
    for (int fn = 0; fn < opt.functions; ++fn) {
        for (std::size_t k = 0; k < hs.size(); ++k)
            report.records.push_back({{"function", fn},
                                      {"n", opt.resolutions[k]},
                                      {"max_residual", errs[fn][k]},
                                      {"fitted_order", 0.0}});
        const double order = fitted_order(hs, errs[fn]);
        report.records.push_back(
            {{"function", fn}, {"n", 0}, {"max_residual", 0.0}, {"fitted_order", order}});
        const bool ok = order >= opt.order_lo && order <= opt.order_hi;
        if (!ok && report.violation.empty())
            report.violation = {{"function", fn}, {"fitted_order", order}, {"seed", opt.seed}};
        all_orders_ok &= ok;
    }
    report.verdict = all_orders_ok ? Verdict::Consistent : Verdict::Violation;
    return report;
}

// ---------------------------------------------------------------------------
// Pointwise Hessian inequality scan |grad|grad f||^2 <= |H_f|^2 with the
// collinearity defect of the equality case at near-equality nodes.
// ---------------------------------------------------------------------------

struct HessianScanOptions {
    int grid_n = 64;
    int functions = 6;
    double eps_grad = 1e-8;
    double tol = 1e-8;           // violation slack: lhs - rhs <= tol*(1+rhs)
    double near_equality = 1e-6; // |lhs-rhs| <= near*(1+rhs) marks equality nodes
    std::uint64_t seed = 2;
};

inline ExperimentReport hessian_inequality_scan(const Chart& chart,
                                                const HessianScanOptions& opt = {}) {
    ExperimentReport report;
    report.kind = "hessian_inequality_scan";
    report.tolerances = {{"tol", opt.tol}, {"eps_grad", opt.eps_grad}};
    auto grid = Grid::create(chart, std::vector<int>(chart.dim(), opt.grid_n));
    const auto base = trig_base_freq(chart.spec);
    bool ok = true;
    for (int fn = 0; fn <= opt.functions; ++fn) {
        // function 0 is the 1D profile sin(x_0): equality everywhere
        AnalyticScalar f = AnalyticScalar::sine_axis(chart.dim(), 0, base[0]);
        if (fn > 0) {
            Rng rng(derive_seed(opt.seed, fn));
            f = AnalyticScalar::random_trig(chart.dim(), base, rng);
        }
        double worst = -std::numeric_limits<double>::infinity();
        double max_collinearity = 0.0;
        std::size_t scanned = 0, equality_nodes = 0;
        for (std::size_t p = 0; p < grid->size(); ++p) {
            const auto coords = grid->coords(p);
            const auto v = hessian_inequality(chart.metric, f, coords.data(), opt.eps_grad);
            if (v.grad_norm <= opt.eps_grad) continue;
            ++scanned;
            worst = std::max(worst, v.lhs - v.rhs - opt.tol * (1.0 + v.rhs));
            if (std::abs(v.lhs - v.rhs) <= opt.near_equality * (1.0 + v.rhs)) {
                ++equality_nodes;
                max_collinearity = std::max(max_collinearity, v.collinearity_defect);
            }
        }
        const bool fn_ok = scanned == 0 || worst <= 0.0;
        ok &= fn_ok;
        if (!fn_ok && report.violation.empty())
            report.violation = {{"function", fn}, {"excess", worst}, {"seed", opt.seed}};
        report.records.push_back({{"function", fn},
                                  {"nodes_scanned", scanned},
                                  {"equality_nodes", equality_nodes},
                                  {"max_excess_over_tol", scanned ? worst : 0.0},
                                  {"max_collinearity_defect", max_collinearity}});
    }
    report.verdict = ok ? Verdict::Consistent : Verdict::Violation;
    return report;
}

// ---------------------------------------------------------------------------
// Liouville consistency on compact charts: random starts -> flow -> Newton ->
// classification; every Stable outcome must be constant to tolerance.
// ---------------------------------------------------------------------------

struct LiouvilleOptions {
    int grid_n = 64;
    int starts = 20;
    double flow_time = 2.0;
    double amplitude = 0.5;      // initial data scale around a random constant
    double constancy_factor = 1e-6;
    NewtonOptions newton;
    std::uint64_t seed = 3;
};

inline ExperimentReport liouville_compact(const Chart& chart, const Nonlinearity& nl,
                                          const LiouvilleOptions& opt = {}) {
    ExperimentReport report;
    report.kind = "liouville_compact";
    report.tolerances = {{"constancy_factor", opt.constancy_factor}};
    auto grid = Grid::create(chart, std::vector<int>(chart.dim(), opt.grid_n));
    const auto L = assemble_laplacian(grid);
    const int m = nl.components();

    NewtonOptions newton = opt.newton;
    newton.pin_mean = true;  // flat directions (e.g. decoupled components) are common

    bool consistent = true;
    for (int start = 0; start < opt.starts; ++start) {
        Rng rng(derive_seed(opt.seed, start));
        SolutionState state(grid, m);
        TestFunctionFamily bumps(TestFunctionFamily::Kind::RandomBump, 1, m,
                                 derive_seed(opt.seed, 1000 + start), 0.5, 1.0);
        const auto noise = bumps.member(grid, 0);
        for (int c = 0; c < m; ++c) {
            const double base = rng.uniform(-0.9, 0.9);
            for (std::size_t p = 0; p < grid->size(); ++p)
                state.u[c].v[p] = base + opt.amplitude * noise[c].v[p];
        }

        json rec = {{"start", start}};
        try {
            const double dt = stable_dt(*grid);
            const int steps = static_cast<int>(std::ceil(opt.flow_time / dt));
            state = gradient_flow(L, nl, state, opt.flow_time / steps, steps);
            const auto solve = newton_solve(L, nl, state, newton);
            rec["converged"] = solve.converged;
            rec["residual"] = solve.final_residual;

            const auto cls = classify_stability(L, nl, state);
            rec["classification"] = cls.verdict == StabilityVerdict::Stable    ? "stable"
                                    : cls.verdict == StabilityVerdict::Unstable ? "unstable"
                                                                                : "indeterminate";
            rec["mu1"] = cls.mu1;
            double defect = 0.0;
            for (int c = 0; c < m; ++c) defect = std::max(defect, state.u[c].oscillation());
            const double tol_const = opt.constancy_factor * (1.0 + state.sup_norm());
            rec["constancy_defect"] = defect;
            rec["tol_const"] = tol_const;
            const bool stable = cls.verdict == StabilityVerdict::Stable;
            rec["stable_and_nonconstant"] = stable && defect > tol_const;
            if (stable && defect > tol_const) {
                consistent = false;
                if (report.violation.empty())
                    report.violation = {{"start", start},
                                        {"seed", opt.seed},
                                        {"defect", defect},
                                        {"tol_const", tol_const},
                                        {"chart", chart.spec.metric_preset},
                                        {"nonlinearity", nl.name()},
                                        {"grid_n", opt.grid_n},
                                        {"amplitude", opt.amplitude},
                                        {"flow_time", opt.flow_time}};
            }
        } catch (const Error& e) {
            rec["converged"] = false;
            rec["error"] = e.what();
        }
        report.records.push_back(std::move(rec));
    }
    report.verdict = consistent ? Verdict::Consistent : Verdict::Violation;
    return report;
}

// ---------------------------------------------------------------------------
// Volume growth R^{-4} |B_R| on flat charts of dimension 2 or 3: the decay
// feeding the low-dimension Liouville theorem.
// ---------------------------------------------------------------------------

struct VolumeGrowthOptions {
    int dim = 2;
    std::vector<double> radii = {4.0, 8.0, 16.0};
    double spacing = 0.5;
};

inline ExperimentReport volume_growth(const VolumeGrowthOptions& opt = {}) {
    ExperimentReport report;
    report.kind = "volume_growth";
    if (opt.dim != 2 && opt.dim != 3)
        throw ConfigInvalid("volume_growth runs on flat charts of dimension 2 or 3");
    double r_max = 0.0;
    for (double r : opt.radii) r_max = std::max(r_max, r);
    const double extent = 2.0 * (r_max * 1.1);
    const int n = std::max(5, static_cast<int>(std::lround(extent / opt.spacing))) | 1;
    auto chart = make_chart("flat_rect", std::vector<double>(opt.dim, extent));
    auto grid = Grid::create(chart, std::vector<int>(opt.dim, n));
    std::vector<int> mid(opt.dim, n / 2);
    const auto dist = geodesic_distance(grid, grid->index(mid.data()));

    std::vector<double> ratios;
    std::vector<bool> resolved;
    for (double r : opt.radii) {
        const double vol = ball_volume(dist, r);
        const double ratio = vol / (r * r * r * r);
        const bool is_resolved = r >= 2.0 * grid->spacing(0);
        ratios.push_back(ratio);
        resolved.push_back(is_resolved);
        report.records.push_back({{"R", r},
                                  {"volume", vol},
                                  {"ratio_R4", ratio},
                                  {"resolved", is_resolved},
                                  {"doubling_factor", 0.0}});
    }
    // decay factors between doubled radii present in the list
    bool decreasing = true;
    for (std::size_t i = 0; i < opt.radii.size(); ++i)
        for (std::size_t j = 0; j < opt.radii.size(); ++j) {
            if (std::abs(opt.radii[j] - 2.0 * opt.radii[i]) > 1e-12) continue;
            if (!resolved[i] || !resolved[j]) continue;
            const double factor = ratios[i] / ratios[j];
            report.records.push_back({{"R", opt.radii[i]},
                                      {"volume", 0.0},
                                      {"ratio_R4", 0.0},
                                      {"resolved", true},
                                      {"doubling_factor", factor}});
            decreasing &= factor > 1.0;
        }
    bool any_resolved = false;
    for (bool r : resolved) any_resolved |= r;
    report.verdict = !any_resolved ? Verdict::Inconclusive
                     : decreasing  ? Verdict::Consistent
                                   : Verdict::Violation;
    if (report.verdict == Verdict::Violation)
        report.violation = {{"dim", opt.dim}, {"spacing", opt.spacing}};
    return report;
}

// ---------------------------------------------------------------------------
// Parabolicity via annulus capacity: minimize int |grad f|^2 over f = 1 on
// B_1, f = 0 outside B_R, by solving the discrete Laplace problem on the
// annulus. Planar capacities 2 pi / ln R decay (parabolic); 3D capacities
// plateau near 4 pi (non-parabolic).
// ---------------------------------------------------------------------------

struct CapacityOptions {
    int dim = 2;
    std::vector<double> radii = {8.0, 16.0, 32.0};
    double spacing = 0.125;
    double inner_radius = 1.0;
    double rel_tol = 0.05;      // agreement with the closed form
    double cg_tol = 1e-10;
    double domain_extent = 0.0; // 0: sized automatically from the radius list
};

namespace detail {

// discrete capacity between {d <= inner} at potential 1 and {d >= R} grounded:
// reduced W*L solve on the annulus, energy from the Dirichlet form
inline double annulus_capacity(const GridPtr& grid, const DiscreteScalarField& dist,
                               double inner, double R, double cg_tol) {
    DiscreteScalarField u(grid);
    std::vector<char> free_node(grid->size(), 0);
    for (std::size_t p = 0; p < grid->size(); ++p) {
        if (dist.v[p] <= inner) u.v[p] = 1.0;
        else if (dist.v[p] < R) free_node[p] = 1;
    }
    std::vector<std::int64_t> free_index;
    std::vector<std::int64_t> compress(grid->size(), -1);
    for (std::size_t p = 0; p < grid->size(); ++p)
        if (free_node[p]) {
            compress[p] = static_cast<std::int64_t>(free_index.size());
            free_index.push_back(static_cast<std::int64_t>(p));
        }
    // reduced W*L system over free nodes, constrained values into the RHS
    std::vector<Triplet> aff;
    std::vector<double> rhs(free_index.size(), 0.0);
    laplacian_flux_triplets(*grid, [&](std::int64_t r, std::int64_t c, double v) {
        const double half = 0.5 * v;  // symmetrized: (M + M^T)/2 entrywise
        for (const auto& [rr, cc] : {std::pair{r, c}, std::pair{c, r}}) {
            if (compress[rr] < 0) continue;
            if (compress[cc] >= 0)
                aff.push_back({compress[rr], compress[cc], half});
            else
                rhs[compress[rr]] -= half * u.v[cc];
        }
    });
    auto A_ff =
        SparseOperator::from_triplets(free_index.size(), free_index.size(), std::move(aff));
    // -W L is SPD on the constrained subspace (plain inner product)
    const LinOp A = [&](const double* x, double* y) {
        A_ff.apply(x, y);
        for (std::size_t k = 0; k < free_index.size(); ++k) y[k] = -y[k];
    };
    for (auto& v : rhs) v = -v;
    auto diag = A_ff.diagonal();
    for (auto& d : diag) d = -d;
    std::vector<double> ones(free_index.size(), 1.0);
    std::vector<double> x(free_index.size(), 0.0);
    CgOptions cg;
    cg.tol = cg_tol;
    const auto res = cg_weighted(A, rhs, x, ones, diag, cg);
    if (!res.converged) throw NoConvergence("capacity CG did not converge");
    for (std::size_t k = 0; k < free_index.size(); ++k) u.v[free_index[k]] = x[k];

    double energy = 0.0;
    laplacian_flux_triplets(*grid, [&](std::int64_t r, std::int64_t c, double v) {
        energy -= u.v[r] * v * u.v[c];
    });
    return energy;
}

} // namespace detail

inline ExperimentReport parabolicity_capacity(const CapacityOptions& opt = {}) {
    ExperimentReport report;
    report.kind = "parabolicity_capacity";
    report.tolerances = {{"rel_tol", opt.rel_tol}};
    if (opt.dim != 2 && opt.dim != 3)
        throw ConfigInvalid("parabolicity_capacity runs on flat charts of dimension 2 or 3");
    double r_max = 0.0;
    for (double r : opt.radii) r_max = std::max(r_max, r);
    const double extent =
        opt.domain_extent > 0.0 ? opt.domain_extent : 2.0 * (r_max + 2.0);

    // Electrode digitization carries an O(h) radius bias; capacities are
    // solved at h and 2h per radius and Richardson-extrapolated, leaving
    // O(h^2) plus staircase quantization noise.
    GridPtr grids[2];
    DiscreteScalarField dists[2];
    for (int lvl = 0; lvl < 2; ++lvl) {
        const double h = lvl == 0 ? opt.spacing : 2.0 * opt.spacing;
        const int n = std::max(5, static_cast<int>(std::lround(extent / h))) | 1;
        auto chart = make_chart("flat_rect", std::vector<double>(opt.dim, extent));
        grids[lvl] = Grid::create(chart, std::vector<int>(opt.dim, n));
        std::vector<int> mid(opt.dim, n / 2);
        // electrode balls from the exact flat-chart distance: the graph
        // metric's directional inflation would distort the electrode shapes
        dists[lvl] = flat_exact_distance(grids[lvl], grids[lvl]->index(mid.data()));
        for (std::size_t p = 0; p < grids[lvl]->size(); ++p)
            if (grids[lvl]->is_boundary(p) && dists[lvl].v[p] <= r_max)
                throw BallExceedsDomain("outer capacity ball reaches the chart boundary");
    }

    double prev_cap = std::numeric_limits<double>::infinity();
    bool ok = true, monotone = true;
    std::vector<double> caps, valid_radii;
    for (double R : opt.radii) {
        json rec = {{"R", R}, {"capacity", nullptr}, {"capacity_h", nullptr},
                    {"capacity_2h", nullptr}, {"closed_form", nullptr},
                    {"rel_err", nullptr}, {"note", ""}};
        if (R <= opt.inner_radius) {
            rec["note"] = "degenerate annulus: infinite capacity";
            report.records.push_back(std::move(rec));
            continue;
        }
        const double cap_h =
            detail::annulus_capacity(grids[0], dists[0], opt.inner_radius, R, opt.cg_tol);
        const double cap_2h =
            detail::annulus_capacity(grids[1], dists[1], opt.inner_radius, R, opt.cg_tol);
        const double energy = 2.0 * cap_h - cap_2h;
        const double closed_form = opt.dim == 2 ? 2.0 * M_PI / std::log(R / opt.inner_radius)
                                                : 4.0 * M_PI / (1.0 / opt.inner_radius - 1.0 / R);
        const double rel_err = std::abs(energy - closed_form) / closed_form;
        rec["capacity"] = energy;
        rec["capacity_h"] = cap_h;
        rec["capacity_2h"] = cap_2h;
        rec["closed_form"] = closed_form;
        rec["rel_err"] = rel_err;
        report.records.push_back(std::move(rec));
        caps.push_back(energy);
        valid_radii.push_back(R);
        monotone &= energy <= prev_cap + 1e-12;
        prev_cap = energy;
        ok &= rel_err <= opt.rel_tol;
    }
    // 3D plateau estimate: linear fit of 1/cap against 1/R extrapolated to R -> inf
    if (opt.dim == 3 && caps.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < caps.size(); ++i) {
            const double xv = 1.0 / valid_radii[i], yv = 1.0 / caps[i];
            sx += xv;
            sy += yv;
            sxx += xv * xv;
            sxy += xv * yv;
        }
        const double nn = static_cast<double>(caps.size());
        const double intercept = (sy * sxx - sx * sxy) / (nn * sxx - sx * sx);
        const double plateau = 1.0 / intercept;
        report.records.push_back({{"R", 0.0},
                                  {"capacity", plateau},
                                  {"capacity_h", nullptr},
                                  {"capacity_2h", nullptr},
                                  {"closed_form", 4.0 * M_PI},
                                  {"rel_err", std::abs(plateau - 4 * M_PI) / (4 * M_PI)},
                                  {"note", "plateau extrapolation at 1/R -> 0"}});
    }
    if (!monotone || !ok)
        report.violation = {{"dim", opt.dim}, {"spacing", opt.spacing}, {"radii", opt.radii}};
    report.verdict = caps.empty() ? Verdict::Inconclusive
                     : (ok && monotone) ? Verdict::Consistent
                                        : Verdict::Violation;
    return report;
}

// ---------------------------------------------------------------------------
// Level-set geodesy: extract a level curve, reparameterize to unit g-speed,
// report the geodesic defect. Straight-in-chart level sets of stable-type
// fields should be geodesics; latitude circles are the negative control.
// ---------------------------------------------------------------------------

struct LevelSetOptions {
    double level = 0.0;
    double eps_grad = 1e-6;
    std::size_t min_points = 10;
    double resample_factor = 3.0;       // spacing = factor * max grid spacing
    // expectation drives the verdict: geodesic within tol, or a frozen
    // defect value within rel_tol (negative control)
    bool expect_geodesic = false;
    double geodesic_tol = 2e-3;
    double expect_defect = -1.0;
    double defect_rel_tol = 0.05;
};

inline ExperimentReport level_set_geodesic_check(const DiscreteScalarField& u,
                                                 const LevelSetOptions& opt = {}) {
    ExperimentReport report;
    report.kind = "level_set_geodesic_check";
    report.tolerances = {{"eps_grad", opt.eps_grad},
                         {"geodesic_tol", opt.geodesic_tol},
                         {"defect_rel_tol", opt.defect_rel_tol}};
    const Chart& chart = u.grid->chart();
    auto curves = extract_level_curves(u, opt.level);

    // gradient floor: the curve must cross the region |grad u| > eps_grad
    const auto grad_sq = grad_norm_sq(u);
    const double dx0 = u.grid->spacing(0), dx1 = u.grid->spacing(1);
    const double delta = opt.resample_factor * std::max(dx0, dx1);

    bool any_kept = false;
    bool ok = true;
    int curve_id = 0;
    for (const auto& raw : curves) {
        if (raw.points.size() < opt.min_points) continue;
        double max_grad = 0.0;
        for (const auto& pt : raw.points) {
            double p[2] = {pt[0], pt[1]};
            chart.wrap(p);
            // nearest node sample of |grad u|
            int mi[2];
            for (int a = 0; a < 2; ++a) {
                const double lo = chart.spec.ranges[a][0];
                const double h = u.grid->spacing(a);
                int idx = static_cast<int>(std::lround((p[a] - lo) / h));
                idx = std::min(std::max(idx, 0), u.grid->extent(a) - 1);
                mi[a] = idx;
            }
            max_grad = std::max(max_grad, std::sqrt(std::max(
                grad_sq.v[u.grid->index(mi)], 0.0)));
        }
        if (max_grad <= opt.eps_grad)
            throw GradientBelowFloor("level curve lies in the region |grad u| <= eps_grad");
        any_kept = true;

        auto curve = raw;
        curve.gradient_floor = opt.eps_grad;
        const auto resampled = reparameterize_unit_speed(curve, chart, delta);
        const auto defect = geodesic_defect(resampled, chart);
        report.records.push_back({{"curve", curve_id},
                                  {"points", resampled.points.size()},
                                  {"g_length", resampled.g_length},
                                  {"closed", resampled.closed},
                                  {"max_defect", defect.max_defect},
                                  {"mean_defect", defect.mean_defect},
                                  {"max_speed_error", defect.max_speed_error}});
        if (opt.expect_geodesic && defect.max_defect > opt.geodesic_tol) ok = false;
        if (opt.expect_defect >= 0.0 &&
            std::abs(defect.mean_defect - opt.expect_defect) >
                opt.defect_rel_tol * opt.expect_defect)
            ok = false;
        if (!ok && report.violation.empty())
            report.violation = {{"curve", curve_id},
                                {"level", opt.level},
                                {"max_defect", defect.max_defect},
                                {"mean_defect", defect.mean_defect}};
        ++curve_id;
    }
    if (!any_kept) throw EmptyLevelSet("all level curves were shorter than min_points");
    const bool has_expectation = opt.expect_geodesic || opt.expect_defect >= 0.0;
    report.verdict = !has_expectation ? Verdict::Consistent
                     : ok             ? Verdict::Consistent
                                      : Verdict::Violation;
    return report;
}

} // namespace riemstab
