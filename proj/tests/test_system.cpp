#include <gtest/gtest.h>

#include <cmath>

#include "riemstab/nonlinearity.hpp"
#include "riemstab/operators.hpp"
#include "riemstab/solve.hpp"

using namespace riemstab;

namespace {
const double kPi = M_PI;

GridPtr torus_grid(int n) {
    return Grid::create(make_chart("flat_torus", {2 * kPi, 2 * kPi}), {n, n});
}

SolutionState constant_state(const GridPtr& grid, std::vector<double> values) {
    SolutionState s(grid, static_cast<int>(values.size()));
    for (std::size_t c = 0; c < values.size(); ++c)
        std::fill(s.u[c].v.begin(), s.u[c].v.end(), values[c]);
    return s;
}

} // namespace

TEST(Nonlinearity, PresetJacobiansMatchFiniteDifferences) {
    // verify_jacobian throws on mismatch and runs at construction
    EXPECT_NO_THROW(make_nonlinearity("zero", {2}));
    EXPECT_NO_THROW(make_nonlinearity("allen_cahn", {}));
    EXPECT_NO_THROW(make_nonlinearity("bose", {}));
    EXPECT_NO_THROW(make_nonlinearity("gradient_double_well", {0.3}));
    EXPECT_NO_THROW(make_nonlinearity("linear_symmetric", {0, -1, -1, 0}));
    EXPECT_NO_THROW(make_nonlinearity("linear", {0, 1, 2, 0}));
    EXPECT_THROW(make_nonlinearity("linear_symmetric", {0, 1, 2, 0}), ConfigInvalid);
    EXPECT_THROW(make_nonlinearity("nope", {}), ConfigInvalid);
}

TEST(Nonlinearity, BoseIsSymmetricWithPositiveCoupling) {
    auto bose = make_nonlinearity("bose", {});
    const auto sym = check_symmetric(bose, 1000, 1e-10);
    EXPECT_TRUE(sym.symmetric);
    EXPECT_LE(sym.max_asymmetry, 1e-12);

    // dH1/dv * dH2/du = 4 u^2 v^2 > 0 away from the axes
    const std::vector<double> u = {0.7, -1.3};
    Mat dh(2, 2);
    bose.jacobian(u.data(), dh);
    EXPECT_NEAR(dh(0, 1) * dh(1, 0), 4.0 * sqr(u[0]) * sqr(u[1]), 1e-12);
    EXPECT_GT(dh(0, 1) * dh(1, 0), 0.0);

    // sampled min includes near-axis states, so the strict condition flags
    const auto pairs = check_coupling(bose, 1000);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_GE(pairs[0].min_product, 0.0);
}

TEST(Nonlinearity, GradientSystemIsSymmetric) {
    auto dw = make_nonlinearity("gradient_double_well", {0.3});
    EXPECT_TRUE(check_symmetric(dw, 1000, 1e-10).symmetric);
}

TEST(Nonlinearity, AsymmetricExample) {
    // H1 = v, H2 = 2u: constant Jacobian [[0,1],[2,0]], max asymmetry 1
    auto lin = make_nonlinearity("linear", {0, 1, 2, 0});
    const auto sym = check_symmetric(lin, 100);
    EXPECT_FALSE(sym.symmetric);
    EXPECT_NEAR(sym.max_asymmetry, 1.0, 1e-14);
}

TEST(Nonlinearity, DecoupledSystemIsFlagged) {
    auto decoupled = make_nonlinearity("linear_symmetric", {1, 0, 0, -1});
    const auto pairs = check_coupling(decoupled, 100);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_TRUE(pairs[0].flagged);
    EXPECT_EQ(pairs[0].min_product, 0.0);
}

TEST(Nonlinearity, ScalarOffDiagonalIsVacuous) {
    auto ac = make_nonlinearity("allen_cahn", {});
    EXPECT_TRUE(check_coupling(ac, 100).empty());
    // literal all-pairs reading includes the diagonal square
    const auto lit = check_coupling(ac, 100, CouplingMode::AllPairs);
    ASSERT_EQ(lit.size(), 1u);
    EXPECT_EQ(lit[0].i, 0);
    EXPECT_EQ(lit[0].j, 0);
}

TEST(Residual, ConstantRootGivesZero) {
    auto grid = torus_grid(16);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});
    auto s = constant_state(grid, {1.0});
    const auto r = residual(L, ac, s);
    for (double v : r[0].v) EXPECT_LT(std::abs(v), 1e-11);

    auto bose = make_nonlinearity("bose", {});
    auto z = constant_state(grid, {0.0, 0.0});
    for (const auto& rc : residual(L, bose, z))
        for (double v : rc.v) EXPECT_EQ(v, 0.0);
}

TEST(Residual, ZeroNonlinearityGivesMinusLu) {
    auto grid = torus_grid(64);
    const auto L = assemble_laplacian(grid);
    auto zero = make_nonlinearity("zero", {1});
    SolutionState s(grid, 1);
    s.u[0] = sample(grid, AnalyticScalar::sine_axis(2, 0));
    const auto r = residual(L, zero, s);
    double err = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i)
        err = std::max(err, std::abs(r[0].v[i] - std::sin(grid->coords(i)[0])));
    EXPECT_LT(err, 2e-3);  // -L sin = sin + O(h^2)
}

TEST(Newton, AllenCahnConvergesToOne) {
    // independent root oracle: damped scalar Newton on u - u^3 from 0.9
    double root = 0.9;
    for (int it = 0; it < 50; ++it) {
        const double f = root - root * root * root;
        const double fp = 1.0 - 3.0 * root * root;
        root -= f / fp;
    }
    EXPECT_NEAR(root, 1.0, 1e-14);

    auto grid = torus_grid(32);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});
    auto s = constant_state(grid, {0.9});
    const auto report = newton_solve(L, ac, s);
    EXPECT_TRUE(report.converged);
    EXPECT_LE(report.final_residual, 1e-9);
    for (double v : s.u[0].v) EXPECT_NEAR(v, root, 1e-9);
}

TEST(Newton, ZeroIterationsAtExactSolution) {
    auto grid = torus_grid(16);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});
    auto s = constant_state(grid, {1.0});
    const auto report = newton_solve(L, ac, s);
    EXPECT_TRUE(report.converged);
    EXPECT_EQ(report.iterations, 0);
}

TEST(Newton, ReportedResidualMatchesRecomputation) {
    auto grid = torus_grid(32);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});
    SolutionState s(grid, 1);
    s.u[0] = sample(grid, [](const double* p) { return 0.8 + 0.1 * std::sin(p[0]); });
    const auto report = newton_solve(L, ac, s);
    EXPECT_TRUE(report.converged);
    EXPECT_NEAR(report.final_residual, residual_sup_norm(L, ac, s), 1e-12);
}

TEST(Newton, PureNeumannKernelIsSingularWithoutPinning) {
    auto grid = torus_grid(16);
    const auto L = assemble_laplacian(grid);
    auto zero = make_nonlinearity("zero", {1});
    SolutionState s(grid, 1);
    s.u[0] = sample(grid, AnalyticScalar::sine_axis(2, 0));
    EXPECT_THROW(newton_solve(L, zero, s), SingularJacobian);

    // pinning the mean solves in the complement: flows to the mean constant
    SolutionState s2(grid, 1);
    s2.u[0] = sample(grid, AnalyticScalar::sine_axis(2, 0));
    NewtonOptions opt;
    opt.pin_mean = true;
    const auto report = newton_solve(L, zero, s2, opt);
    EXPECT_TRUE(report.converged);
    EXPECT_LT(s2.u[0].oscillation(), 1e-8);
    EXPECT_NEAR(s2.u[0].v[0], 0.0, 1e-8);
}

TEST(Newton, TranslationEquivariantBitwiseWithFixedJacobi) {
    const int n = 32;
    auto grid = torus_grid(n);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});

    auto init = [&](int shift) {
        SolutionState s(grid, 1);
        for (std::size_t i = 0; i < grid->size(); ++i) {
            std::vector<int> mi(2);
            grid->multi_index(i, mi.data());
            const double x = 2 * kPi * ((mi[0] - shift + n) % n) / n;
            const double y = 2 * kPi * mi[1] / n;
            s.u[0].v[i] = 0.9 + 0.05 * std::sin(x) * std::cos(y);
        }
        return s;
    };

    NewtonOptions opt;
    opt.linear_solver = NewtonLinearSolver::FixedJacobi;
    opt.jacobi_sweeps = 120;
    opt.tol = 1e-8;
    opt.max_iter = 400;

    auto a = init(0);
    auto b = init(1);
    const auto ra = newton_solve(L, ac, a, opt);
    const auto rb = newton_solve(L, ac, b, opt);
    EXPECT_TRUE(ra.converged);
    EXPECT_EQ(ra.iterations, rb.iterations);

    // b must be exactly a shifted by one grid period along x
    std::vector<int> mi(2);
    for (std::size_t i = 0; i < grid->size(); ++i) {
        grid->multi_index(i, mi.data());
        std::vector<int> mj = {(mi[0] + 1) % n, mi[1]};
        EXPECT_EQ(a.u[0].v[i], b.u[0].v[grid->index(mj.data())]);
    }
}

TEST(GradientFlow, StableConstantIsFixedPoint) {
    auto grid = torus_grid(16);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});
    auto s = constant_state(grid, {1.0});
    const double dt = stable_dt(*grid);
    const auto out = gradient_flow(L, ac, s, dt, 200);
    for (double v : out.u[0].v) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(GradientFlow, RelaxesTowardStableRoot) {
    // ODE oracle: RK4 on u' = u - u^3 from 0.6
    const double T = 6.0;
    double ode = 0.6;
    {
        const int steps = 6000;
        const double dt = T / steps;
        auto f = [](double u) { return u - u * u * u; };
        for (int i = 0; i < steps; ++i) {
            const double k1 = f(ode);
            const double k2 = f(ode + 0.5 * dt * k1);
            const double k3 = f(ode + 0.5 * dt * k2);
            const double k4 = f(ode + dt * k3);
            ode += dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
    }
    EXPECT_NEAR(ode, 1.0, 1e-3);

    auto grid = torus_grid(32);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});
    auto s = constant_state(grid, {0.6});
    const double dt = stable_dt(*grid);
    const int steps = static_cast<int>(std::ceil(T / dt));
    const auto out = gradient_flow(L, ac, s, T / steps, steps);
    for (double v : out.u[0].v) EXPECT_NEAR(v, ode, 5e-3);
}

TEST(GradientFlow, UnstableConstantDeparts) {
    // linearization at u = 0 grows like e^t
    auto grid = torus_grid(32);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});
    const double eps = 1e-3, T = 3.0;
    auto s = constant_state(grid, {eps});
    const double dt = stable_dt(*grid);
    const int steps = static_cast<int>(std::ceil(T / dt));
    const auto out = gradient_flow(L, ac, s, T / steps, steps);
    EXPECT_GE(out.sup_norm(), eps * std::exp(0.9 * T));
}

TEST(GradientFlow, EnergyNonIncreasingForGradientSystems) {
    auto grid = torus_grid(24);
    const auto L = assemble_laplacian(grid);
    for (const char* name : {"allen_cahn", "gradient_double_well", "bose"}) {
        auto nl = make_nonlinearity(name, {});
        SolutionState s(grid, nl.components());
        Rng rng(77);
        for (auto& comp : s.u)
            for (auto& v : comp.v) v = rng.uniform(-0.8, 0.8);
        const double dt = stable_dt(*grid);
        double prev = flow_energy(nl, s);
        for (int chunk = 0; chunk < 5; ++chunk) {
            s = gradient_flow(L, nl, s, dt, 100);
            const double e = flow_energy(nl, s);
            EXPECT_LE(e, prev + 1e-10 * (1.0 + std::abs(prev))) << name;
            prev = e;
        }
    }
}

TEST(GradientFlow, RejectsUnstableTimeStep) {
    auto grid = torus_grid(16);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});
    auto s = constant_state(grid, {0.5});
    EXPECT_THROW(gradient_flow(L, ac, s, 10.0 * stable_dt(*grid), 10), std::invalid_argument);
}

TEST(GradientFlow, BlowUpDetected) {
    auto grid = torus_grid(16);
    const auto L = assemble_laplacian(grid);
    // H = 4u: exponential growth beyond any bound
    auto lin = make_nonlinearity("linear_symmetric", {4.0});
    auto s = constant_state(grid, {1.0});
    FlowOptions fo;
    fo.blowup_bound = 10.0;
    EXPECT_THROW(gradient_flow(L, lin, s, stable_dt(*grid), 100000, fo), BlowUp);
}

TEST(Newton, UnsolvableForcingExhaustsDamping) {
    // -Lap u = 1 has no periodic solution: the residual mean is pinned at -1,
    // so damping can never reduce the sup-norm below 1
    auto grid = torus_grid(16);
    const auto L = assemble_laplacian(grid);
    Nonlinearity one(
        "constant_forcing", 1, [](const double*, double* h) { h[0] = 1.0; },
        [](const double*, Mat& dh) { dh(0, 0) = 0.0; });
    auto s = constant_state(grid, {0.0});
    NewtonOptions opt;
    opt.pin_mean = true;
    opt.max_iter = 5;
    EXPECT_THROW(newton_solve(L, one, s, opt), MaxIterExceeded);
}

TEST(Newton, RejectsNonFiniteInitialState) {
    auto grid = torus_grid(16);
    const auto L = assemble_laplacian(grid);
    auto ac = make_nonlinearity("allen_cahn", {});
    auto s = constant_state(grid, {0.9});
    s.u[0].v[7] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(newton_solve(L, ac, s), std::invalid_argument);
}
