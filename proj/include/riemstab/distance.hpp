#pragma once

#include <queue>
#include <vector>

#include "riemstab/grid.hpp"
#include "riemstab/operators.hpp"

namespace riemstab {

// First-arrival geodesic distance from a source node by Dijkstra on the
// full diagonal-neighbor graph (8 neighbors in 2D, 26 in 3D) with edge
// lengths measured in the metric at the edge midpoint. Overestimates the
// true d_g by the usual metrication factor (<= ~8.3% for 2D 8-neighbor);
// the consumers (cutoffs, ball volumes) absorb that in their tolerances.
inline DiscreteScalarField geodesic_distance(const GridPtr& grid, std::size_t source) {
    const Grid& g = *grid;
    const int d = g.dim();

    // neighbor offsets: all nonzero vectors in {-1,0,1}^d
    std::vector<std::vector<int>> offsets;
    {
        std::vector<int> off(d, -1);
        while (true) {
            bool nonzero = false;
            for (int k = 0; k < d; ++k) nonzero |= off[k] != 0;
            if (nonzero) offsets.push_back(off);
            int k = d - 1;
            while (k >= 0 && off[k] == 1) off[k--] = -1;
            if (k < 0) break;
            ++off[k];
        }
    }

    const bool uniform = [&] {
        Rng probe(0xD15ULL);
        const Mat g0 = g.chart().metric.g(g.coords(0).data());
        for (int t = 0; t < 4; ++t) {
            auto p = g.chart().random_interior_point(probe, 0.01);
            if ((g.chart().metric.g(p.data()) - g0).max_abs() > 1e-15) return false;
        }
        return true;
    }();
    std::vector<double> uniform_len(offsets.size(), 0.0);
    if (uniform) {
        const Mat g0 = g.chart().metric.g(g.coords(0).data());
        for (std::size_t e = 0; e < offsets.size(); ++e) {
            double s = 0.0;
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    s += g0(a, b) * offsets[e][a] * g.spacing(a) * offsets[e][b] * g.spacing(b);
            uniform_len[e] = std::sqrt(s);
        }
    }

    DiscreteScalarField dist(grid, std::numeric_limits<double>::infinity());
    dist.v[source] = 0.0;
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> pq;
    pq.push({0.0, source});
    std::vector<int> mi(d), mq(d);
    while (!pq.empty()) {
        const auto [du, u] = pq.top();
        pq.pop();
        if (du > dist.v[u]) continue;
        g.multi_index(u, mi.data());
        const auto pu = g.coords(u);
        for (std::size_t e = 0; e < offsets.size(); ++e) {
            mq = mi;
            bool ok = true;
            for (int k = 0; k < d && ok; ++k)
                if (offsets[e][k] != 0) ok = g.shift(mq.data(), k, offsets[e][k]);
            if (!ok) continue;
            const std::size_t q = g.index(mq.data());
            double len;
            if (uniform) {
                len = uniform_len[e];
            } else {
                auto mid = pu;
                double delta[3] = {0, 0, 0};
                for (int k = 0; k < d; ++k) {
                    delta[k] = offsets[e][k] * g.spacing(k);
                    mid[k] += 0.5 * delta[k];
                }
                g.chart().wrap(mid.data());
                const Mat gm = g.chart().metric.g(mid.data());
                double s = 0.0;
                for (int a = 0; a < d; ++a)
                    for (int b = 0; b < d; ++b) s += gm(a, b) * delta[a] * delta[b];
                len = std::sqrt(s);
            }
            if (du + len < dist.v[q]) {
                dist.v[q] = du + len;
                pq.push({dist.v[q], q});
            }
        }
    }
    return dist;
}

// Exact geodesic distance for constant metrics: straight chart lines are the
// geodesics, so d(p, c) = |p - c|_g with periodic images minimized. The
// capacity experiment uses this for its electrode balls; the Dijkstra metric
// above stays the general-chart route (and the ball_volume/cutoff one).
inline DiscreteScalarField flat_exact_distance(const GridPtr& grid, std::size_t center) {
    const Grid& g = *grid;
    const int d = g.dim();
    const Mat g0 = g.chart().metric.g(g.coords(0).data());
    {
        Rng probe(0xF1A7ULL);
        for (int t = 0; t < 4; ++t) {
            auto p = g.chart().random_interior_point(probe, 0.01);
            if ((g.chart().metric.g(p.data()) - g0).max_abs() > 1e-15)
                throw ConfigInvalid("flat_exact_distance needs a constant metric");
        }
    }
    const auto c = g.coords(center);
    DiscreteScalarField dist(grid);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.coords(i);
        double delta[3] = {0, 0, 0};
        for (int k = 0; k < d; ++k) {
            delta[k] = p[k] - c[k];
            if (g.periodic(k)) delta[k] = std::remainder(delta[k], g.chart().spec.length(k));
        }
        double s = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) s += g0(a, b) * delta[a] * delta[b];
        dist.v[i] = std::sqrt(s);
    }
    return dist;
}

// |B_R|: quadrature mass of the region {d_g <= R}. Below one grid spacing
// this bottoms out at the source cell's own weight.
inline double ball_volume(const DiscreteScalarField& dist, double R) {
    const auto& w = dist.grid->weights();
    return pairwise_sum_indexed(dist.size(),
                                [&](std::size_t i) { return dist.v[i] <= R ? w[i] : 0.0; });
}

inline double ball_volume(const GridPtr& grid, std::size_t center, double R) {
    return ball_volume(geodesic_distance(grid, center), R);
}

// Radial cutoff zeta_R: 1 on B_R, 0 outside B_2R, cubic smoothstep between
// (1 - 3s^2 + 2s^3 in s = d/R - 1). Gradient is bounded by ~1.5/R times the
// metrication factor, comfortably under the 2.5/R budget.
inline double cutoff_profile(double t) {
    if (t <= 1.0) return 1.0;
    if (t >= 2.0) return 0.0;
    const double s = t - 1.0;
    return 1.0 - 3.0 * s * s + 2.0 * s * s * s;
}

inline DiscreteScalarField cutoff_zeta_R(const DiscreteScalarField& dist, double R) {
    const Grid& g = *dist.grid;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.is_boundary(i) && dist.v[i] < 2.0 * R)
            throw BallExceedsDomain("the 2R-ball of the cutoff is clipped by a non-periodic axis");
    DiscreteScalarField zeta(dist.grid);
    for (std::size_t i = 0; i < g.size(); ++i) zeta.v[i] = cutoff_profile(dist.v[i] / R);
    return zeta;
}

inline DiscreteScalarField cutoff_zeta_R(const GridPtr& grid, std::size_t center, double R) {
    return cutoff_zeta_R(geodesic_distance(grid, center), R);
}

} // namespace riemstab
