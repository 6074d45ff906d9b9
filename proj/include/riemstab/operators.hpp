#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "riemstab/densemat.hpp"
#include "riemstab/grid.hpp"
#include "riemstab/sparse.hpp"

namespace riemstab {

enum class BoundaryCondition { Neumann, Dirichlet };

namespace detail {

// Emit triplets of M = W*L for the divergence-form Laplace-Beltrami stencil:
// fluxes sqrt|g| g^{ij} d_j f at half-nodes, divergence across cell faces,
// then division by the cell volume (deferred to the caller). Iterates faces
// once; each face writes +stencil into its low row and -stencil into its
// high row, so the axis-aligned part of M is symmetric by construction.
template <class Emit>
void laplacian_flux_triplets(const Grid& g, Emit&& emit) {
    const int d = g.dim();
    const bool uniform = [&] {
        // constant metric: evaluate the face coefficient once
        Rng probe(0xFACEULL);
        const Mat g0 = g.chart().metric.g(g.coords(0).data());
        for (int t = 0; t < 4; ++t) {
            auto p = g.chart().random_interior_point(probe, 0.01);
            if ((g.chart().metric.g(p.data()) - g0).max_abs() > 1e-15) return false;
        }
        return true;
    }();

    Mat ginv_uniform;
    double det_uniform = 0.0;
    if (uniform)
        spd_inverse_det(g.chart().metric.g(g.coords(0).data()), ginv_uniform, det_uniform,
                        "metric");

    std::vector<int> mi(d), mj(d), mq(d);
    // stencil of the centered/one-sided first derivative along axis j at
    // node r: list of (node index, coeff)
    auto d1_stencil = [&](std::vector<int> node, int j,
                          std::vector<std::pair<std::int64_t, double>>& out) {
        const double inv2h = 1.0 / (2.0 * g.spacing(j));
        if (g.periodic(j) || (node[j] > 0 && node[j] < g.extent(j) - 1)) {
            auto up = node, dn = node;
            g.shift(up.data(), j, +1);
            g.shift(dn.data(), j, -1);
            out.push_back({static_cast<std::int64_t>(g.index(up.data())), inv2h});
            out.push_back({static_cast<std::int64_t>(g.index(dn.data())), -inv2h});
        } else if (node[j] == 0) {
            auto n1 = node, n2 = node;
            g.shift(n1.data(), j, +1);
            g.shift(n2.data(), j, +2);
            out.push_back({static_cast<std::int64_t>(g.index(node.data())), -3.0 * inv2h});
            out.push_back({static_cast<std::int64_t>(g.index(n1.data())), 4.0 * inv2h});
            out.push_back({static_cast<std::int64_t>(g.index(n2.data())), -inv2h});
        } else {
            auto n1 = node, n2 = node;
            g.shift(n1.data(), j, -1);
            g.shift(n2.data(), j, -2);
            out.push_back({static_cast<std::int64_t>(g.index(node.data())), 3.0 * inv2h});
            out.push_back({static_cast<std::int64_t>(g.index(n1.data())), -4.0 * inv2h});
            out.push_back({static_cast<std::int64_t>(g.index(n2.data())), inv2h});
        }
    };

    std::vector<std::pair<std::int64_t, double>> stencil;
    for (std::size_t p = 0; p < g.size(); ++p) {
        g.multi_index(p, mi.data());
        for (int axis = 0; axis < d; ++axis) {
            if (!g.periodic(axis) && mi[axis] == g.extent(axis) - 1) continue;  // no +face
            mq = mi;
            g.shift(mq.data(), axis, +1);
            const std::int64_t q = static_cast<std::int64_t>(g.index(mq.data()));

            // face coefficient sqrt|g| g^{axis,j} at the half node
            double coeff[3] = {0, 0, 0};
            if (uniform) {
                const double sd = std::sqrt(det_uniform);
                for (int j = 0; j < d; ++j) coeff[j] = sd * ginv_uniform(axis, j);
            } else {
                auto half = g.coords(p);
                half[axis] += 0.5 * g.spacing(axis);
                g.chart().wrap(half.data());
                Mat inv;
                double det;
                spd_inverse_det(g.chart().metric.g(half.data()), inv, det, "metric at flux point");
                const double sd = std::sqrt(det);
                for (int j = 0; j < d; ++j) coeff[j] = sd * inv(axis, j);
            }

            // transverse face area (trapezoid halving shared by both cells)
            double area = 1.0;
            for (int k = 0; k < d; ++k) {
                if (k == axis) continue;
                area *= g.spacing(k);
                if (!g.periodic(k) && (mi[k] == 0 || mi[k] == g.extent(k) - 1)) area *= 0.5;
            }

            stencil.clear();
            // normal derivative
            stencil.push_back({q, coeff[axis] / g.spacing(axis)});
            stencil.push_back({static_cast<std::int64_t>(p), -coeff[axis] / g.spacing(axis)});
            // tangential derivatives, averaged over the two face-adjacent nodes
            for (int j = 0; j < d; ++j) {
                if (j == axis || coeff[j] == 0.0) continue;
                std::vector<std::pair<std::int64_t, double>> dstencil;
                d1_stencil(mi, j, dstencil);
                d1_stencil(mq, j, dstencil);
                for (auto& [node, w] : dstencil)
                    stencil.push_back({node, 0.5 * coeff[j] * w});
            }

            for (auto& [node, w] : stencil) {
                emit(static_cast<std::int64_t>(p), node, area * w);
                emit(q, node, -area * w);
            }
        }
    }
}

} // namespace detail

// Discrete Laplace-Beltrami as a sparse operator on nodal values. The
// weighted matrix W*L is symmetrized exactly after assembly (a no-op for
// diagonal metrics), so self-adjointness with respect to the dV_g inner
// product holds to rounding. Neumann: zero boundary flux. Dirichlet: rows
// and columns of non-periodic boundary nodes are eliminated and the
// eliminated diagonal is set to the mean interior diagonal so the boundary
// block stays out of the low spectrum.
inline SparseOperator assemble_laplacian(const GridPtr& grid,
                                         BoundaryCondition bc = BoundaryCondition::Neumann) {
    const Grid& g = *grid;
    std::vector<Triplet> m_triplets;
    m_triplets.reserve(g.size() * (g.dim() == 2 ? 10 : 8) * 2);
    detail::laplacian_flux_triplets(
        g, [&](std::int64_t r, std::int64_t c, double v) { m_triplets.push_back({r, c, v}); });

    // symmetrize M = W*L
    {
        const std::size_t n0 = m_triplets.size();
        m_triplets.reserve(2 * n0);
        for (std::size_t k = 0; k < n0; ++k) {
            m_triplets[k].v *= 0.5;
            m_triplets.push_back({m_triplets[k].c, m_triplets[k].r, m_triplets[k].v});
        }
    }
    SparseOperator m = SparseOperator::from_triplets(g.size(), g.size(), std::move(m_triplets));

    std::vector<char> eliminated(g.size(), 0);
    if (bc == BoundaryCondition::Dirichlet)
        for (std::size_t i = 0; i < g.size(); ++i) eliminated[i] = g.is_boundary(i) ? 1 : 0;

    std::vector<Triplet> l_triplets;
    l_triplets.reserve(m.nnz());
    double interior_diag_sum = 0.0;
    std::size_t interior_count = 0;
    m.for_each([&](std::int64_t r, std::int64_t c, double v) {
        if (eliminated[r] || eliminated[c]) return;
        const double lv = v / g.weight(r);
        l_triplets.push_back({r, c, lv});
        if (r == c) {
            interior_diag_sum += std::abs(lv);
            ++interior_count;
        }
    });
    if (bc == BoundaryCondition::Dirichlet) {
        const double alpha = interior_count ? interior_diag_sum / interior_count : 1.0;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (eliminated[i])
                l_triplets.push_back({static_cast<std::int64_t>(i),
                                      static_cast<std::int64_t>(i), -alpha});
    }
    auto L = SparseOperator::from_triplets(g.size(), g.size(), std::move(l_triplets));

    // canonical stencil-relative order inside each row, so the matvec fold is
    // translation covariant on periodic grids
    {
        const int d = g.dim();
        std::vector<int> mr(d), mc(d);
        L.sort_each_row([&](std::int64_t r, std::int64_t a, std::int64_t b) {
            g.multi_index(static_cast<std::size_t>(r), mr.data());
            auto rel = [&](std::int64_t c, int axis) {
                g.multi_index(static_cast<std::size_t>(c), mc.data());
                int off = mc[axis] - mr[axis];
                if (g.periodic(axis)) {
                    const int n = g.extent(axis);
                    off = ((off % n) + n) % n;
                    if (off > n / 2) off -= n;
                }
                return off;
            };
            for (int axis = 0; axis < d; ++axis) {
                const int ra = rel(a, axis), rb = rel(b, axis);
                if (ra != rb) return ra < rb;
            }
            return false;
        });
    }
    return L;
}

// ---------------------------------------------------------------------------
// Quadrature and nodal derivative helpers
// ---------------------------------------------------------------------------

inline double integrate(const DiscreteScalarField& f) {
    const auto& w = f.grid->weights();
    return pairwise_sum_indexed(f.size(), [&](std::size_t i) { return f.v[i] * w[i]; });
}

inline double inner_weighted(std::span<const double> a, std::span<const double> b,
                             std::span<const double> w) {
    return pairwise_sum_indexed(a.size(), [&](std::size_t i) { return a[i] * b[i] * w[i]; });
}

// Centered second-order partial along one axis (one-sided at non-periodic
// boundaries); returns the coordinate partial d_k f, not a metric object.
inline DiscreteScalarField covariant_partial(const DiscreteScalarField& f, int axis) {
    const Grid& g = *f.grid;
    DiscreteScalarField out(f.grid);
    const double inv2h = 1.0 / (2.0 * g.spacing(axis));
    std::vector<int> mi(g.dim());
    for (std::size_t p = 0; p < g.size(); ++p) {
        g.multi_index(p, mi.data());
        const int i = mi[axis];
        if (g.periodic(axis) || (i > 0 && i < g.extent(axis) - 1)) {
            auto up = mi, dn = mi;
            g.shift(up.data(), axis, +1);
            g.shift(dn.data(), axis, -1);
            out.v[p] = (f.v[g.index(up.data())] - f.v[g.index(dn.data())]) * inv2h;
        } else if (i == 0) {
            auto n1 = mi, n2 = mi;
            g.shift(n1.data(), axis, +1);
            g.shift(n2.data(), axis, +2);
            out.v[p] = (-3.0 * f.v[p] + 4.0 * f.v[g.index(n1.data())] -
                        f.v[g.index(n2.data())]) * inv2h;
        } else {
            auto n1 = mi, n2 = mi;
            g.shift(n1.data(), axis, -1);
            g.shift(n2.data(), axis, -2);
            out.v[p] = (3.0 * f.v[p] - 4.0 * f.v[g.index(n1.data())] +
                        f.v[g.index(n2.data())]) * inv2h;
        }
    }
    return out;
}

inline std::vector<DiscreteScalarField> covariant_partials(const DiscreteScalarField& f) {
    std::vector<DiscreteScalarField> d;
    for (int k = 0; k < f.grid->dim(); ++k) d.push_back(covariant_partial(f, k));
    return d;
}

// |grad_g f|^2 nodewise: g^{ij} d_i f d_j f with centered differences.
inline DiscreteScalarField grad_norm_sq(const DiscreteScalarField& f) {
    const Grid& g = *f.grid;
    const int d = g.dim();
    auto parts = covariant_partials(f);
    DiscreteScalarField out(f.grid);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double* gi = g.ginv(p);
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) s += gi[i * d + j] * parts[i].v[p] * parts[j].v[p];
        out.v[p] = s;
    }
    return out;
}

// g-inner product of two gradients from their coordinate partials.
inline DiscreteScalarField grad_inner(const std::vector<DiscreteScalarField>& da,
                                      const std::vector<DiscreteScalarField>& db) {
    const Grid& g = *da[0].grid;
    const int d = g.dim();
    DiscreteScalarField out(da[0].grid);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double* gi = g.ginv(p);
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) s += gi[i * d + j] * da[i].v[p] * db[j].v[p];
        out.v[p] = s;
    }
    return out;
}

namespace detail {

// second centered difference along axis (stencil shifted inward at
// non-periodic edges; first-order there, used only by diagnostics)
inline double second_diff(const Grid& g, const std::vector<double>& v, std::vector<int> mi,
                          int axis) {
    const double invh2 = 1.0 / sqr(g.spacing(axis));
    if (!g.periodic(axis)) {
        if (mi[axis] == 0) mi[axis] = 1;
        if (mi[axis] == g.extent(axis) - 1) mi[axis] = g.extent(axis) - 2;
    }
    auto up = mi, dn = mi;
    g.shift(up.data(), axis, +1);
    g.shift(dn.data(), axis, -1);
    return (v[g.index(up.data())] - 2.0 * v[g.index(mi.data())] + v[g.index(dn.data())]) * invh2;
}

inline double cross_diff(const Grid& g, const std::vector<double>& v, std::vector<int> mi,
                         int a, int b) {
    for (int axis : {a, b}) {
        if (!g.periodic(axis)) {
            if (mi[axis] == 0) mi[axis] = 1;
            if (mi[axis] == g.extent(axis) - 1) mi[axis] = g.extent(axis) - 2;
        }
    }
    const double inv4h = 1.0 / (4.0 * g.spacing(a) * g.spacing(b));
    auto pp = mi, pm = mi, mp = mi, mm = mi;
    g.shift(pp.data(), a, +1);
    g.shift(pp.data(), b, +1);
    g.shift(pm.data(), a, +1);
    g.shift(pm.data(), b, -1);
    g.shift(mp.data(), a, -1);
    g.shift(mp.data(), b, +1);
    g.shift(mm.data(), a, -1);
    g.shift(mm.data(), b, -1);
    return (v[g.index(pp.data())] - v[g.index(pm.data())] - v[g.index(mp.data())] +
            v[g.index(mm.data())]) * inv4h;
}

} // namespace detail

// Per-node Christoffel and Ricci values, packed flat; computed once and
// shared across the fields of a sweep. Constant metrics collapse to one entry.
struct GeometryTables {
    int dim = 0;
    std::size_t stride = 0;            // 0 when the metric is constant
    std::vector<double> gamma;         // [p*d^3 + (k*d+i)*d + j]
    std::vector<double> ricci;         // [p*d^2 + i*d + j]

    const double* gamma_at(std::size_t p) const {
        return gamma.data() + p * stride * dim * dim * dim;
    }
    const double* ricci_at(std::size_t p) const {
        return ricci.data() + p * stride * dim * dim;
    }
};

inline GeometryTables geometry_tables(const Grid& g) {
    GeometryTables t;
    const int d = g.dim();
    t.dim = d;
    bool uniform = true;
    {
        Rng probe(0x6E0ULL);
        const Mat g0 = g.chart().metric.g(g.coords(0).data());
        for (int k = 0; k < 4 && uniform; ++k) {
            auto p = g.chart().random_interior_point(probe, 0.01);
            if ((g.chart().metric.g(p.data()) - g0).max_abs() > 1e-15) uniform = false;
        }
    }
    t.stride = uniform ? 0 : 1;
    const std::size_t count = uniform ? 1 : g.size();
    t.gamma.resize(count * d * d * d);
    t.ricci.resize(count * d * d);
    for (std::size_t p = 0; p < count; ++p) {
        const auto coords = g.coords(p);
        const auto gam = christoffel(g.chart().metric, coords.data());
        const Mat ric = ricci(g.chart().metric, coords.data());
        for (int k = 0; k < d; ++k)
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    t.gamma[p * d * d * d + (k * d + i) * d + j] = gam[k](i, j);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) t.ricci[p * d * d + i * d + j] = ric(i, j);
    }
    return t;
}

// Discrete covariant Hessian norm |H_f|^2 nodewise: second differences minus
// Gamma^k_ij d_k f, indices raised with the cached inverse metric.
inline DiscreteScalarField hessian_norm_sq_field(const DiscreteScalarField& f,
                                                 const GeometryTables& tables) {
    const Grid& g = *f.grid;
    const int d = g.dim();
    auto parts = covariant_partials(f);
    DiscreteScalarField out(f.grid);
    std::vector<int> mi(d);
    Mat h(d, d), ginv(d, d);
    for (std::size_t p = 0; p < g.size(); ++p) {
        g.multi_index(p, mi.data());
        const double* gam = tables.gamma_at(p);
        for (int i = 0; i < d; ++i)
            for (int j = i; j < d; ++j) {
                double s = (i == j) ? detail::second_diff(g, f.v, mi, i)
                                    : detail::cross_diff(g, f.v, mi, i, j);
                for (int k = 0; k < d; ++k) s -= gam[(k * d + i) * d + j] * parts[k].v[p];
                h(i, j) = h(j, i) = s;
            }
        const double* gi = g.ginv(p);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) ginv(a, b) = gi[a * d + b];
        out.v[p] = tensor_norm_sq(h, ginv);
    }
    return out;
}

inline DiscreteScalarField hessian_norm_sq_field(const DiscreteScalarField& f) {
    return hessian_norm_sq_field(f, geometry_tables(*f.grid));
}

// Ric_g(grad f, grad f) nodewise with the analytic Ricci tensor and discrete
// gradient.
inline DiscreteScalarField ricci_quadratic_field(const DiscreteScalarField& f,
                                                 const GeometryTables& tables) {
    const Grid& g = *f.grid;
    const int d = g.dim();
    auto parts = covariant_partials(f);
    DiscreteScalarField out(f.grid);
    for (std::size_t p = 0; p < g.size(); ++p) {
        const double* ric = tables.ricci_at(p);
        const double* gi = g.ginv(p);
        // contravariant gradient
        double gu[3] = {0, 0, 0};
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) gu[i] += gi[i * d + j] * parts[j].v[p];
        double s = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) s += ric[i * d + j] * gu[i] * gu[j];
        out.v[p] = s;
    }
    return out;
}

inline DiscreteScalarField ricci_quadratic_field(const DiscreteScalarField& f) {
    return ricci_quadratic_field(f, geometry_tables(*f.grid));
}

} // namespace riemstab
