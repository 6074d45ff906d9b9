#pragma once

#include <functional>
#include <span>
#include <vector>

#include "riemstab/common.hpp"

namespace riemstab {

// Operators enter the iterative solvers as plain apply callbacks so shifted,
// blocked, or masked systems never need materializing.
using LinOp = std::function<void(const double*, double*)>;

struct CgOptions {
    double tol = 1e-10;       // relative to ||b||_w
    int max_iter = 50000;
};

struct CgResult {
    bool converged = false;
    bool breakdown = false;   // non-positive curvature; operator not SPD on the subspace
    int iterations = 0;
    double rel_residual = 0.0;
};

// Preconditioned conjugate gradients in the w-weighted inner product; valid
// for operators self-adjoint and positive definite with respect to w. An
// optional projection is applied to the right-hand side and to every
// preconditioned residual, which is how singular pure-Neumann systems get
// their mean pinned.
inline CgResult cg_weighted(const LinOp& A, std::span<const double> b, std::vector<double>& x,
                            std::span<const double> w, std::span<const double> diag,
                            const CgOptions& opt = {},
                            const std::function<void(std::vector<double>&)>& project = {}) {
    const std::size_t n = b.size();
    auto dot = [&](std::span<const double> u, std::span<const double> v) {
        return pairwise_sum_indexed(n, [&](std::size_t i) { return u[i] * v[i] * w[i]; });
    };
    std::vector<double> r(n), z(n), p(n), ap(n);
    if (x.size() != n) x.assign(n, 0.0);
    A(x.data(), ap.data());
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    if (project) project(r);
    auto precond = [&](const std::vector<double>& rin, std::vector<double>& zout) {
        for (std::size_t i = 0; i < n; ++i) {
            const double d = std::abs(diag[i]);
            zout[i] = rin[i] / (d > 1e-300 ? diag[i] : 1.0);
        }
        if (project) project(zout);
    };
    const double bnorm = std::sqrt(std::max(dot(b, b), 1e-300));
    CgResult res;
    precond(r, z);
    p = z;
    double rz = dot(r, z);
    for (int it = 0; it < opt.max_iter; ++it) {
        const double rnorm = std::sqrt(std::max(dot(r, r), 0.0));
        res.rel_residual = rnorm / bnorm;
        res.iterations = it;
        if (res.rel_residual <= opt.tol) {
            res.converged = true;
            return res;
        }
        A(p.data(), ap.data());
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            res.breakdown = true;
            return res;
        }
        const double alpha = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(r, z);
        const double rz_new = dot(r, z);
        const double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    return res;
}

// BiCGStab with Jacobi preconditioning, for the asymmetric Jacobians the
// weighted CG cannot take.
inline CgResult bicgstab(const LinOp& A, std::span<const double> b, std::vector<double>& x,
                         std::span<const double> diag, const CgOptions& opt = {}) {
    const std::size_t n = b.size();
    auto dot = [&](std::span<const double> u, std::span<const double> v) {
        return pairwise_sum_indexed(n, [&](std::size_t i) { return u[i] * v[i]; });
    };
    auto precond = [&](std::vector<double>& v) {
        for (std::size_t i = 0; i < n; ++i)
            if (std::abs(diag[i]) > 1e-300) v[i] /= diag[i];
    };
    if (x.size() != n) x.assign(n, 0.0);
    std::vector<double> r(n), r0(n), p(n), v(n), s(n), t(n), ph(n), sh(n);
    A(x.data(), v.data());
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - v[i];
    r0 = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    const double bnorm = std::sqrt(std::max(dot(b, b), 1e-300));
    CgResult res;
    for (int it = 0; it < opt.max_iter; ++it) {
        res.iterations = it;
        res.rel_residual = std::sqrt(std::max(dot(r, r), 0.0)) / bnorm;
        if (res.rel_residual <= opt.tol) {
            res.converged = true;
            return res;
        }
        const double rho_new = dot(r0, r);
        if (std::abs(rho_new) < 1e-300) {
            res.breakdown = true;
            return res;
        }
        if (it == 0) {
            p = r;
        } else {
            const double beta = (rho_new / rho) * (alpha / omega);
            for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        rho = rho_new;
        ph = p;
        precond(ph);
        A(ph.data(), v.data());
        const double r0v = dot(r0, v);
        if (std::abs(r0v) < 1e-300) {
            res.breakdown = true;
            return res;
        }
        alpha = rho / r0v;
        for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        sh = s;
        precond(sh);
        A(sh.data(), t.data());
        const double tt = dot(t, t);
        omega = tt > 1e-300 ? dot(t, s) / tt : 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * ph[i] + omega * sh[i];
            r[i] = s[i] - omega * t[i];
        }
        if (std::abs(omega) < 1e-300) {
            res.breakdown = true;
            return res;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Symmetric tridiagonal eigensolver (implicit-shift QL), for the small Ritz
// systems of the Lanczos iteration. diag/off are overwritten; vecs receives
// the eigenvectors as columns.
// ---------------------------------------------------------------------------

inline void tridiag_eigen(std::vector<double>& diag, std::vector<double>& off,
                          std::vector<std::vector<double>>& vecs) {
    const int n = static_cast<int>(diag.size());
    vecs.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) vecs[i][i] = 1.0;
    if (n == 1) return;
    std::vector<double> e(n, 0.0);
    for (int i = 1; i < n; ++i) e[i - 1] = off[i - 1];
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
                if (std::abs(e[m]) <= 1e-300 + 1e-16 * dd) break;
            }
            if (m != l) {
                if (iter++ == 60) throw NoConvergence("tridiagonal QL did not converge");
                double g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = diag[m] - diag[l] + e[l] / (g + (g >= 0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i], b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        diag[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = diag[i + 1] - p;
                    r = (diag[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    diag[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = vecs[k][i + 1];
                        vecs[k][i + 1] = s * vecs[k][i] + c * f;
                        vecs[k][i] = c * vecs[k][i] - s * f;
                    }
                }
                if (r == 0.0 && m - 1 >= l) continue;
                diag[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

// ---------------------------------------------------------------------------
// Smallest eigenpair of a w-self-adjoint operator by shift-and-invert
// Lanczos: Krylov space of (A - sigma)^{-1} with sigma strictly below the
// spectrum, inner solves by weighted CG.
// ---------------------------------------------------------------------------

struct EigenOptions {
    double tol = 1e-8;        // residual ||Av - mu v||_w with ||v||_w = 1
    int max_basis = 120;
    int max_restarts = 5;
    double cg_tol = 1e-12;
    int cg_max_iter = 100000;
    std::uint64_t start_seed = 0x5EEDULL;
};

struct EigenResult {
    double value = 0.0;
    std::vector<double> vector;
    int iterations = 0;       // total inverse applications
    double residual = 0.0;
    bool converged = false;
};

inline EigenResult smallest_eigen_shift_invert(const LinOp& A, std::span<const double> w,
                                               std::size_t n, double sigma,
                                               std::span<const double> shifted_diag,
                                               const EigenOptions& opt = {}) {
    auto dot = [&](std::span<const double> u, std::span<const double> v) {
        return pairwise_sum_indexed(n, [&](std::size_t i) { return u[i] * v[i] * w[i]; });
    };
    const LinOp shifted = [&](const double* x, double* y) {
        A(x, y);
        for (std::size_t i = 0; i < n; ++i) y[i] -= sigma * x[i];
    };
    CgOptions cg_opt;
    cg_opt.tol = opt.cg_tol;
    cg_opt.max_iter = opt.cg_max_iter;

    EigenResult result;
    std::vector<double> v0(n);
    {
        Rng rng(opt.start_seed);
        for (auto& x : v0) x = rng.uniform(-1.0, 1.0);
    }

    std::vector<double> av(n);
    for (int restart = 0; restart <= opt.max_restarts; ++restart) {
        std::vector<std::vector<double>> basis;
        std::vector<double> alpha, beta;
        {
            const double nrm = std::sqrt(dot(v0, v0));
            for (auto& x : v0) x /= nrm;
        }
        basis.push_back(v0);
        std::vector<double> u(n), x(n);
        for (int j = 0; j < opt.max_basis; ++j) {
            x.assign(n, 0.0);
            const auto cg = cg_weighted(shifted, basis[j], x, w, shifted_diag, cg_opt);
            ++result.iterations;
            if (cg.breakdown)
                throw NoConvergence("shifted operator is not positive definite; shift too high");
            u = x;
            const double a = dot(u, basis[j]);
            alpha.push_back(a);
            for (std::size_t i = 0; i < n; ++i) u[i] -= a * basis[j][i];
            if (j > 0)
                for (std::size_t i = 0; i < n; ++i) u[i] -= beta[j - 1] * basis[j - 1][i];
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& vb : basis) {
                    const double c = dot(u, vb);
                    for (std::size_t i = 0; i < n; ++i) u[i] -= c * vb[i];
                }
            const double b = std::sqrt(std::max(dot(u, u), 0.0));

            // Ritz extraction on the inverted spectrum (largest theta)
            std::vector<double> d = alpha, e = beta;
            std::vector<std::vector<double>> ritz_vecs;
            tridiag_eigen(d, e, ritz_vecs);
            int best = 0;
            for (std::size_t k = 1; k < d.size(); ++k)
                if (d[k] > d[best]) best = static_cast<int>(k);
            const double theta = d[best];
            if (theta > 0.0) {
                const bool cheap_ok = b * std::abs(ritz_vecs[alpha.size() - 1][best]) <=
                                      0.1 * opt.tol * theta;
                if (cheap_ok || b <= 1e-14 || j == opt.max_basis - 1) {
                    std::vector<double> cand(n, 0.0);
                    for (std::size_t col = 0; col < alpha.size(); ++col) {
                        const double y = ritz_vecs[col][best];
                        for (std::size_t i = 0; i < n; ++i) cand[i] += y * basis[col][i];
                    }
                    const double cn = std::sqrt(dot(cand, cand));
                    for (auto& c : cand) c /= cn;
                    A(cand.data(), av.data());
                    const double mu = dot(cand, std::span<const double>(av));
                    double rnrm = 0.0;
                    {
                        std::vector<double> r(n);
                        for (std::size_t i = 0; i < n; ++i) r[i] = av[i] - mu * cand[i];
                        rnrm = std::sqrt(dot(r, r));
                    }
                    result.value = mu;
                    result.vector = cand;
                    result.residual = rnrm;
                    if (rnrm <= opt.tol) {
                        result.converged = true;
                        return result;
                    }
                    if (b <= 1e-14 || j == opt.max_basis - 1) break;
                }
            }
            if (b <= 1e-14) break;
            beta.push_back(b);
            for (auto& ui : u) ui /= b;
            basis.push_back(u);
        }
        if (!result.vector.empty()) v0 = result.vector;  // restart from best Ritz vector
    }
    if (!result.converged)
        throw NoConvergence("eigen iteration exhausted restarts; residual " +
                            std::to_string(result.residual));
    return result;
}

} // namespace riemstab
