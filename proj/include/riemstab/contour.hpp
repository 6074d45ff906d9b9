#pragma once

#include <array>
#include <map>
#include <vector>

#include "riemstab/grid.hpp"
#include "riemstab/operators.hpp"

namespace riemstab {

// Level curve of a 2D nodal field: ordered polyline in chart coordinates,
// unwrapped across periodic seams so finite differences along the curve are
// well defined. A closed curve that winds around a periodic axis ends one
// lattice period away from its start; closure_offset records that vector.
struct LevelCurve {
    std::vector<std::array<double, 2>> points;
    bool closed = false;
    std::array<double, 2> closure_offset = {0.0, 0.0};
    double spacing = 0.0;         // arc-length step after reparameterization
    double g_length = 0.0;        // total metric length
    double gradient_floor = 0.0;  // floor used when the curve was validated

    std::array<double, 2> point_cyclic(std::ptrdiff_t k) const {
        const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(points.size());
        if (k < 0) {
            auto p = points[k + n];
            p[0] -= closure_offset[0];
            p[1] -= closure_offset[1];
            return p;
        }
        if (k >= n) {
            auto p = points[k - n];
            p[0] += closure_offset[0];
            p[1] += closure_offset[1];
            return p;
        }
        return points[k];
    }
};

namespace detail {

// edge of the cell complex: (axis, wrapped low-node index)
struct EdgeKey {
    int axis = 0;
    std::size_t node = 0;
    bool operator<(const EdgeKey& o) const {
        return axis != o.axis ? axis < o.axis : node < o.node;
    }
    bool operator==(const EdgeKey& o) const { return axis == o.axis && node == o.node; }
};

struct CellSegment {
    EdgeKey a, b;
    int ci = 0, cj = 0;       // cell index (wrapped grid cell)
    int slot_a = 0, slot_b = 0;  // 0 bottom, 1 right, 2 top, 3 left
    double ta = 0.0, tb = 0.0;   // crossing parameter along each edge
};

} // namespace detail

// Marching squares with the ambiguous saddle cases resolved by the cell
// center average. Throws EmptyLevelSet when the level misses the field range.
inline std::vector<LevelCurve> extract_level_curves(const DiscreteScalarField& u, double level) {
    const Grid& g = *u.grid;
    if (g.dim() != 2) throw ConfigInvalid("level curves are a 2D chart operation");
    const int nx = g.extent(0), ny = g.extent(1);
    const int cx = g.periodic(0) ? nx : nx - 1;
    const int cy = g.periodic(1) ? ny : ny - 1;

    auto node_at = [&](int i, int j) {
        int mi[2] = {(i % nx + nx) % nx, (j % ny + ny) % ny};
        return g.index(mi);
    };

    // slot -> (axis, low corner offset within the cell)
    const int slot_axis[4] = {0, 1, 0, 1};
    const int slot_di[4] = {0, 1, 0, 0};
    const int slot_dj[4] = {0, 0, 1, 0};

    std::vector<detail::CellSegment> segments;
    for (int i = 0; i < cx; ++i) {
        for (int j = 0; j < cy; ++j) {
            const double s00 = u.v[node_at(i, j)] - level;
            const double s10 = u.v[node_at(i + 1, j)] - level;
            const double s01 = u.v[node_at(i, j + 1)] - level;
            const double s11 = u.v[node_at(i + 1, j + 1)] - level;
            const double corner_lo[4] = {s00, s10, s01, s00};
            const double corner_hi[4] = {s10, s11, s11, s01};

            int crossing_slots[4];
            double crossing_t[4];
            int n_cross = 0;
            for (int slot = 0; slot < 4; ++slot) {
                const double a = corner_lo[slot], b = corner_hi[slot];
                if ((a > 0.0) == (b > 0.0)) continue;
                crossing_slots[n_cross] = slot;
                crossing_t[n_cross] = a / (a - b);
                ++n_cross;
            }
            if (n_cross == 0) continue;

            auto push = [&](int ka, int kb) {
                detail::CellSegment seg;
                seg.slot_a = crossing_slots[ka];
                seg.slot_b = crossing_slots[kb];
                seg.ta = crossing_t[ka];
                seg.tb = crossing_t[kb];
                seg.a = {slot_axis[seg.slot_a],
                         node_at(i + slot_di[seg.slot_a], j + slot_dj[seg.slot_a])};
                seg.b = {slot_axis[seg.slot_b],
                         node_at(i + slot_di[seg.slot_b], j + slot_dj[seg.slot_b])};
                seg.ci = i;
                seg.cj = j;
                segments.push_back(seg);
            };
            if (n_cross == 2) {
                push(0, 1);
            } else if (n_cross == 4) {
                // saddle: the center sample picks the pairing
                const double center = 0.25 * (s00 + s10 + s01 + s11);
                if ((center > 0.0) == (s00 > 0.0)) {
                    push(0, 1);  // bottom-right around c10
                    push(2, 3);  // top-left around c01
                } else {
                    push(0, 3);  // bottom-left around c00
                    push(1, 2);  // right-top around c11
                }
            }
        }
    }
    if (segments.empty())
        throw EmptyLevelSet("level " + std::to_string(level) +
                            " does not intersect the field range");

    // each edge meets at most two segments (one per adjacent cell)
    std::map<detail::EdgeKey, std::array<int, 2>> incident;
    for (int s = 0; s < static_cast<int>(segments.size()); ++s)
        for (const auto& key : {segments[s].a, segments[s].b}) {
            auto [it, fresh] = incident.try_emplace(key, std::array<int, 2>{-1, -1});
            if (it->second[0] < 0) it->second[0] = s;
            else it->second[1] = s;
        }

    const double h0 = g.spacing(0), h1 = g.spacing(1);
    const double lo0 = g.chart().spec.ranges[0][0], lo1 = g.chart().spec.ranges[1][0];
    auto vertex_pos = [&](int ci, int cj, int slot, double t) {
        const double bx = lo0 + (ci + slot_di[slot]) * h0;
        const double by = lo1 + (cj + slot_dj[slot]) * h1;
        return slot_axis[slot] == 0 ? std::array<double, 2>{bx + t * h0, by}
                                    : std::array<double, 2>{bx, by + t * h1};
    };
    const int nbr_di[4] = {0, 1, 0, -1};
    const int nbr_dj[4] = {-1, 0, 1, 0};

    std::vector<char> used(segments.size(), 0);
    std::vector<LevelCurve> curves;

    // walk a chain starting at `seg`, entering through `entry`; unwrapped
    // cell indices start from the segment's own cell
    auto walk = [&](int seg, detail::EdgeKey entry) {
        LevelCurve curve;
        int ci = segments[seg].ci, cj = segments[seg].cj;
        const int first_seg = seg;
        while (true) {
            used[seg] = 1;
            const auto& s = segments[seg];
            const bool via_a = s.a == entry;
            const int slot_in = via_a ? s.slot_a : s.slot_b;
            const int slot_out = via_a ? s.slot_b : s.slot_a;
            const double t_in = via_a ? s.ta : s.tb;
            const double t_out = via_a ? s.tb : s.ta;
            if (curve.points.empty())
                curve.points.push_back(vertex_pos(ci, cj, slot_in, t_in));
            curve.points.push_back(vertex_pos(ci, cj, slot_out, t_out));

            const auto exit_key = via_a ? s.b : s.a;
            const auto& inc = incident[exit_key];
            const int next = inc[0] == seg ? inc[1] : inc[0];
            if (next < 0) break;  // open end
            if (next == first_seg || used[next]) {
                curve.closed = next == first_seg;
                break;
            }
            ci += nbr_di[slot_out];
            cj += nbr_dj[slot_out];
            entry = exit_key;
            seg = next;
        }
        if (curve.closed) {
            curve.closure_offset = {curve.points.back()[0] - curve.points.front()[0],
                                    curve.points.back()[1] - curve.points.front()[1]};
            curve.points.pop_back();
        }
        curves.push_back(std::move(curve));
    };

    // open chains first (start at degree-1 edges), then leftover loops
    for (const auto& [key, inc] : incident) {
        if (inc[1] >= 0) continue;
        if (!used[inc[0]]) walk(inc[0], key);
    }
    for (int s = 0; s < static_cast<int>(segments.size()); ++s)
        if (!used[s]) walk(s, segments[s].a);
    return curves;
}

namespace detail {

inline double segment_g_length(const Chart& chart, const std::array<double, 2>& a,
                               const std::array<double, 2>& b) {
    double mid[2] = {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
    chart.wrap(mid);
    const Mat g = chart.metric.g(mid);
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    return std::sqrt(g(0, 0) * dx * dx + 2.0 * g(0, 1) * dx * dy + g(1, 1) * dy * dy);
}

} // namespace detail

// Resample to uniform metric arc length; after this |gamma-dot|_g = 1 along
// the polyline by construction.
inline LevelCurve reparameterize_unit_speed(const LevelCurve& curve, const Chart& chart,
                                            double target_spacing) {
    const std::size_t n = curve.points.size();
    if (n < 2) throw EmptyLevelSet("level curve too short to parameterize");
    const std::size_t n_segs = curve.closed ? n : n - 1;
    std::vector<double> cumulative(1, 0.0);
    for (std::size_t k = 0; k < n_segs; ++k)
        cumulative.push_back(cumulative.back() +
                             detail::segment_g_length(chart, curve.point_cyclic(k),
                                                      curve.point_cyclic(k + 1)));
    const double total = cumulative.back();
    const int steps = std::max<int>(4, static_cast<int>(std::lround(total / target_spacing)));
    const double delta = total / steps;

    LevelCurve out;
    out.closed = curve.closed;
    out.closure_offset = curve.closure_offset;
    out.spacing = delta;
    out.g_length = total;
    out.gradient_floor = curve.gradient_floor;
    const int n_points = curve.closed ? steps : steps + 1;
    std::size_t seg = 0;
    for (int k = 0; k < n_points; ++k) {
        const double target = std::min(k * delta, total);
        while (seg + 1 < cumulative.size() - 1 && cumulative[seg + 1] < target) ++seg;
        const double seg_len = cumulative[seg + 1] - cumulative[seg];
        const double t = seg_len > 0.0 ? (target - cumulative[seg]) / seg_len : 0.0;
        const auto a = curve.point_cyclic(seg);
        const auto b = curve.point_cyclic(seg + 1);
        out.points.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
    }
    return out;
}

// Geodesic defect along a unit-speed curve: the g-norm of
// gamma-ddot^k + Gamma^k_{ab} gamma-dot^a gamma-dot^b by central differences.
struct GeodesicDefect {
    double max_defect = 0.0;
    double mean_defect = 0.0;
    double max_speed_error = 0.0;  // | |gamma-dot|_g - 1 |
    std::size_t samples = 0;
};

inline GeodesicDefect geodesic_defect(const LevelCurve& curve, const Chart& chart) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(curve.points.size());
    if (n < 3) throw EmptyLevelSet("need at least 3 samples to difference a curve twice");
    const double delta = curve.spacing;
    GeodesicDefect out;
    double sum = 0.0;
    const std::ptrdiff_t k_lo = curve.closed ? 0 : 1;
    const std::ptrdiff_t k_hi = curve.closed ? n : n - 1;
    for (std::ptrdiff_t k = k_lo; k < k_hi; ++k) {
        const auto prev = curve.point_cyclic(k - 1);
        const auto here = curve.points[k];
        const auto next = curve.point_cyclic(k + 1);
        double vel[2], acc[2];
        for (int a = 0; a < 2; ++a) {
            vel[a] = (next[a] - prev[a]) / (2.0 * delta);
            acc[a] = (next[a] - 2.0 * here[a] + prev[a]) / (delta * delta);
        }
        double p[2] = {here[0], here[1]};
        chart.wrap(p);
        const auto gamma = christoffel(chart.metric, p);
        const Mat g = chart.metric.g(p);
        double defect[2];
        for (int a = 0; a < 2; ++a) {
            double s = acc[a];
            for (int b = 0; b < 2; ++b)
                for (int c = 0; c < 2; ++c) s += gamma[a](b, c) * vel[b] * vel[c];
            defect[a] = s;
        }
        double norm_sq = 0.0, speed_sq = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                norm_sq += g(a, b) * defect[a] * defect[b];
                speed_sq += g(a, b) * vel[a] * vel[b];
            }
        const double d = std::sqrt(std::max(norm_sq, 0.0));
        out.max_defect = std::max(out.max_defect, d);
        out.max_speed_error =
            std::max(out.max_speed_error, std::abs(std::sqrt(std::max(speed_sq, 0.0)) - 1.0));
        sum += d;
        ++out.samples;
    }
    out.mean_defect = out.samples ? sum / out.samples : 0.0;
    return out;
}

} // namespace riemstab
