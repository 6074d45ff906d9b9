#pragma once

#include <string>
#include <vector>

#include "riemstab/grid.hpp"
#include "riemstab/krylov.hpp"
#include "riemstab/nonlinearity.hpp"
#include "riemstab/operators.hpp"
#include "riemstab/sparse.hpp"

namespace riemstab {

// m nodal fields on a shared grid; flattened component-major (component c
// occupies [c*N, (c+1)*N)) wherever a single vector is needed.
struct SolutionState {
    std::vector<DiscreteScalarField> u;

    SolutionState() = default;
    SolutionState(const GridPtr& grid, int m) : u(m, DiscreteScalarField(grid)) {}

    int components() const { return static_cast<int>(u.size()); }
    const GridPtr& grid() const { return u.front().grid; }
    std::size_t nodes() const { return u.front().size(); }

    double sup_norm() const {
        double s = 0.0;
        for (const auto& f : u) s = std::max(s, f.sup_norm());
        return s;
    }

    std::vector<double> flatten() const {
        std::vector<double> x;
        x.reserve(components() * nodes());
        for (const auto& f : u) x.insert(x.end(), f.v.begin(), f.v.end());
        return x;
    }
    static SolutionState unflatten(const GridPtr& grid, int m, const std::vector<double>& x) {
        SolutionState s(grid, m);
        const std::size_t n = grid->size();
        for (int c = 0; c < m; ++c)
            std::copy(x.begin() + c * n, x.begin() + (c + 1) * n, s.u[c].v.begin());
        return s;
    }

    // nodal state vector (u_1(p), ..., u_m(p))
    void at_node(std::size_t p, double* out) const {
        for (int c = 0; c < components(); ++c) out[c] = u[c].v[p];
    }
};

// r_i = -L u_i - H_i(u) nodewise.
inline std::vector<DiscreteScalarField> residual(const SparseOperator& L, const Nonlinearity& nl,
                                                 const SolutionState& s) {
    const int m = s.components();
    const std::size_t n = s.nodes();
    std::vector<DiscreteScalarField> r(m, DiscreteScalarField(s.grid()));
    for (int c = 0; c < m; ++c) {
        L.apply(s.u[c].v.data(), r[c].v.data());
        for (auto& x : r[c].v) x = -x;
    }
    std::vector<double> uv(m), hv(m);
    for (std::size_t p = 0; p < n; ++p) {
        s.at_node(p, uv.data());
        nl.eval(uv.data(), hv.data());
        for (int c = 0; c < m; ++c) r[c].v[p] -= hv[c];
    }
    return r;
}

inline double residual_sup_norm(const SparseOperator& L, const Nonlinearity& nl,
                                const SolutionState& s) {
    double sup = 0.0;
    for (const auto& rc : residual(L, nl, s)) sup = std::max(sup, rc.sup_norm());
    return sup;
}

// Nodewise Jacobian table DH(u(p)) used by Newton and the linearized operator.
inline std::vector<double> jacobian_table(const Nonlinearity& nl, const SolutionState& s) {
    const int m = s.components();
    const std::size_t n = s.nodes();
    std::vector<double> table(n * m * m);
    std::vector<double> uv(m);
    Mat dh(m, m);
    for (std::size_t p = 0; p < n; ++p) {
        s.at_node(p, uv.data());
        nl.jacobian(uv.data(), dh);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) table[(i * m + j) * n + p] = dh(i, j);
    }
    return table;
}

// y = -L x - DH(u) x blockwise on the flattened layout.
inline void apply_linearized(const SparseOperator& L, int m, std::size_t n,
                             const std::vector<double>& dh_table, const double* x, double* y) {
    for (int c = 0; c < m; ++c) L.apply(x + c * n, y + c * n);
    for (std::size_t k = 0; k < static_cast<std::size_t>(m) * n; ++k) y[k] = -y[k];
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const double* tab = dh_table.data() + (static_cast<std::size_t>(i) * m + j) * n;
            const double* xj = x + j * n;
            double* yi = y + i * n;
            for (std::size_t p = 0; p < n; ++p) yi[p] -= tab[p] * xj[p];
        }
}

enum class NewtonLinearSolver {
    CG,          // weighted CG (symmetric systems) or BiCGStab fallback
    FixedJacobi  // fixed damped-Jacobi sweeps; no inner products, so the whole
                 // solve is bitwise equivariant under grid translations
};

struct NewtonOptions {
    double tol = 1e-9;            // residual sup-norm
    int max_iter = 50;
    int max_halvings = 30;
    bool pin_mean = false;        // project out per-component constants when singular
    NewtonLinearSolver linear_solver = NewtonLinearSolver::CG;
    double cg_tol = 1e-10;
    int cg_max_iter = 50000;
    int jacobi_sweeps = 300;
    double jacobi_omega = 0.8;
    bool assume_symmetric = true; // callers flip this for asymmetric Jacobians
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double final_residual = 0.0;
    std::vector<int> damping_history;  // halvings per accepted step
};

inline SolveReport newton_solve(const SparseOperator& L, const Nonlinearity& nl,
                                SolutionState& state, const NewtonOptions& opt = {}) {
    const int m = state.components();
    const std::size_t n = state.nodes();
    for (const auto& comp : state.u) {
        if (comp.grid != state.grid())
            throw std::invalid_argument("newton_solve: components must share one grid");
        if (!all_finite(comp.v))
            throw std::invalid_argument("newton_solve: initial state has non-finite values");
    }
    const std::size_t total = static_cast<std::size_t>(m) * n;
    const GridPtr grid = state.grid();

    std::vector<double> weights(total);
    for (int c = 0; c < m; ++c)
        std::copy(grid->weights().begin(), grid->weights().end(), weights.begin() + c * n);
    const double total_weight = pairwise_sum(grid->weights());

    SolveReport report;
    for (int it = 0; it <= opt.max_iter; ++it) {
        const auto res_fields = residual(L, nl, state);
        double rnorm = 0.0;
        for (const auto& rc : res_fields) rnorm = std::max(rnorm, rc.sup_norm());
        report.final_residual = rnorm;
        report.iterations = it;
        if (rnorm <= opt.tol) {
            report.converged = true;
            return report;
        }
        if (it == opt.max_iter) break;

        const auto dh_table = jacobian_table(nl, state);
        const LinOp J = [&](const double* x, double* y) {
            apply_linearized(L, m, n, dh_table, x, y);
        };

        // Jacobian diagonal for preconditioning / Jacobi sweeps
        std::vector<double> diag(total);
        {
            const auto ldiag = L.diagonal();
            for (int c = 0; c < m; ++c) {
                const double* tab = dh_table.data() + (static_cast<std::size_t>(c) * m + c) * n;
                for (std::size_t p = 0; p < n; ++p) diag[c * n + p] = -ldiag[p] - tab[p];
            }
        }

        // probe per-component constants for a Jacobian kernel (pure-Neumann
        // systems with flat directions); pin the mean if asked, else fail
        std::vector<int> singular_components;
        {
            std::vector<double> probe(total, 0.0), jprobe(total);
            double scale = 1e-12;
            for (double d : diag) scale = std::max(scale, std::abs(d));
            for (int c = 0; c < m; ++c) {
                std::fill(probe.begin(), probe.end(), 0.0);
                std::fill(probe.begin() + c * n, probe.begin() + (c + 1) * n, 1.0);
                J(probe.data(), jprobe.data());
                if (riemstab::sup_norm(jprobe) <= 1e-12 * scale)
                    singular_components.push_back(c);
            }
        }
        std::function<void(std::vector<double>&)> project;
        if (!singular_components.empty()) {
            if (!opt.pin_mean)
                throw SingularJacobian(
                    "constants lie in the Jacobian kernel (component " +
                    std::to_string(singular_components.front()) +
                    "); enable pin_mean to solve in the mean-zero complement");
            project = [&, singular_components](std::vector<double>& v) {
                for (int c : singular_components) {
                    const double mean =
                        pairwise_sum_indexed(n, [&](std::size_t p) {
                            return v[c * n + p] * grid->weights()[p];
                        }) / total_weight;
                    for (std::size_t p = 0; p < n; ++p) v[c * n + p] -= mean;
                }
            };
        }

        std::vector<double> rhs(total);
        for (int c = 0; c < m; ++c)
            for (std::size_t p = 0; p < n; ++p) rhs[c * n + p] = -res_fields[c].v[p];

        std::vector<double> delta(total, 0.0);
        if (opt.linear_solver == NewtonLinearSolver::FixedJacobi) {
            std::vector<double> jd(total);
            for (int sweep = 0; sweep < opt.jacobi_sweeps; ++sweep) {
                J(delta.data(), jd.data());
                for (std::size_t k = 0; k < total; ++k) {
                    const double d = std::abs(diag[k]) > 1e-300 ? diag[k] : 1.0;
                    delta[k] += opt.jacobi_omega * (rhs[k] - jd[k]) / d;
                }
            }
        } else if (opt.assume_symmetric) {
            CgOptions cg;
            cg.tol = opt.cg_tol;
            cg.max_iter = opt.cg_max_iter;
            auto cgres = cg_weighted(J, rhs, delta, weights, diag, cg, project);
            if (cgres.breakdown) {
                // indefinite Jacobian (negative curvature direction): retry
                // with a solver that does not need positive definiteness
                delta.assign(total, 0.0);
                cgres = bicgstab(J, rhs, delta, diag, cg);
                if (project) project(delta);
            }
            if (cgres.breakdown)
                throw SingularJacobian("linear solve breakdown in Newton");
            if (!cgres.converged && cgres.rel_residual > 1e-3)
                throw SingularJacobian("Newton linear solve stalled (relative residual " +
                                       std::to_string(cgres.rel_residual) + ")");
        } else {
            CgOptions cg;
            cg.tol = opt.cg_tol;
            cg.max_iter = opt.cg_max_iter;
            const auto bres = bicgstab(J, rhs, delta, diag, cg);
            if (bres.breakdown || (!bres.converged && bres.rel_residual > 1e-3))
                throw SingularJacobian("BiCGStab failed in the Newton linear solve");
        }

        // damped update: halve until the residual sup-norm decreases
        double alpha = 1.0;
        int halvings = 0;
        SolutionState trial = state;
        while (true) {
            for (int c = 0; c < m; ++c)
                for (std::size_t p = 0; p < n; ++p)
                    trial.u[c].v[p] = state.u[c].v[p] + alpha * delta[c * n + p];
            if (residual_sup_norm(L, nl, trial) < rnorm) break;
            if (++halvings > opt.max_halvings)
                throw MaxIterExceeded("damping failed to reduce the Newton residual after " +
                                      std::to_string(opt.max_halvings) + " halvings");
            alpha *= 0.5;
        }
        state = trial;
        report.damping_history.push_back(halvings);
    }
    throw MaxIterExceeded("newton_solve did not reach tolerance in " +
                          std::to_string(opt.max_iter) + " iterations");
}

// Largest stable explicit time step for the flow: 0.9 h_min^2 / (2 n lam)
// with lam the largest inverse-metric eigenvalue over the grid. The metric
// factor tightens the flat-chart bound; on the sphere band g^{phi phi}
// reaches 1/sin^2(theta_min) and the flat bound alone is unstable.
inline double stable_dt(const Grid& grid) {
    const int d = grid.dim();
    double lam = 0.0;
    Mat gi(d, d);
    const std::size_t step = grid.size() > 4096 ? grid.size() / 4096 : 1;
    for (std::size_t p = 0; p < grid.size(); p += step) {
        const double* g = grid.ginv(p);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) gi(a, b) = g[a * d + b];
        lam = std::max(lam, sym_eigen_max(gi));
    }
    return 0.9 * sqr(grid.min_spacing()) / (2.0 * d * lam);
}

struct FlowOptions {
    double blowup_bound = 1e6;
};

// Explicit relaxation u <- u + dt (L u + H(u)); descends the energy of
// gradient systems and is the cheap way to land in a Newton basin.
inline SolutionState gradient_flow(const SparseOperator& L, const Nonlinearity& nl,
                                   const SolutionState& u0, double dt, int steps,
                                   const FlowOptions& opt = {}) {
    const double bound = stable_dt(*u0.grid());
    if (dt > bound * (1.0 + 1e-12))
        throw std::invalid_argument("gradient_flow dt " + std::to_string(dt) +
                                    " exceeds the stability bound " + std::to_string(bound));
    const int m = u0.components();
    const std::size_t n = u0.nodes();
    SolutionState s = u0;
    std::vector<std::vector<double>> lu(m, std::vector<double>(n));
    std::vector<double> uv(m), hv(m);
    for (int step = 0; step < steps; ++step) {
        for (int c = 0; c < m; ++c) L.apply(s.u[c].v.data(), lu[c].data());
        for (std::size_t p = 0; p < n; ++p) {
            s.at_node(p, uv.data());
            nl.eval(uv.data(), hv.data());
            for (int c = 0; c < m; ++c) s.u[c].v[p] += dt * (lu[c][p] + hv[c]);
        }
        if (s.sup_norm() > opt.blowup_bound)
            throw BlowUp("gradient_flow exceeded the sup-norm bound at step " +
                         std::to_string(step));
    }
    return s;
}

// Dirichlet energy plus potential, for presets with H = -grad W.
inline double flow_energy(const Nonlinearity& nl, const SolutionState& s) {
    double e = 0.0;
    for (const auto& f : s.u) e += 0.5 * integrate(grad_norm_sq(f));
    const std::size_t n = s.nodes();
    const int m = s.components();
    std::vector<double> uv(m);
    DiscreteScalarField w(s.grid());
    for (std::size_t p = 0; p < n; ++p) {
        s.at_node(p, uv.data());
        w.v[p] = nl.potential(uv.data());
    }
    return e + integrate(w);
}

} // namespace riemstab
