#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "riemstab/common.hpp"
#include "riemstab/densemat.hpp"

namespace riemstab {

// Metric tensor on a single chart with analytic first and second partials.
// Presets hand-code the derivative formulas; nothing here differentiates
// numerically, so geometry error is exactly zero and discretization error
// stays isolated in the PDE operators.
struct MetricField {
    int dim = 0;
    std::function<Mat(const double*)> g;                  // g_ij
    std::function<std::vector<Mat>(const double*)> dg;    // dg[k](i,j) = d_k g_ij
    std::function<std::vector<Mat>(const double*)> d2g;   // d2g[k*dim+l](i,j) = d_k d_l g_ij
};

struct ChartSpec {
    std::string name;
    int dim = 0;
    std::vector<std::array<double, 2>> ranges;  // closed per-axis intervals
    std::vector<bool> periodic;
    std::string metric_preset;
    std::vector<double> metric_params;

    double length(int axis) const { return ranges[axis][1] - ranges[axis][0]; }
};

struct Chart {
    ChartSpec spec;
    MetricField metric;

    int dim() const { return spec.dim; }

    // Wrap periodic coordinates back into their fundamental interval; used
    // before metric evaluation when stencils or curves step across the seam.
    void wrap(double* p) const {
        for (int k = 0; k < spec.dim; ++k) {
            if (!spec.periodic[k]) continue;
            const double lo = spec.ranges[k][0], len = spec.length(k);
            p[k] = lo + std::fmod(std::fmod(p[k] - lo, len) + len, len);
        }
    }

    Mat metric_at(const double* p) const {
        std::vector<double> q(p, p + spec.dim);
        wrap(q.data());
        return metric.g(q.data());
    }

    std::vector<double> random_interior_point(Rng& rng, double margin_frac = 0.05) const {
        std::vector<double> p(spec.dim);
        for (int k = 0; k < spec.dim; ++k) {
            const double m = spec.periodic[k] ? 0.0 : margin_frac * spec.length(k);
            p[k] = rng.uniform(spec.ranges[k][0] + m, spec.ranges[k][1] - m);
        }
        return p;
    }
};

namespace detail {

inline MetricField constant_metric(int dim, Mat g0) {
    MetricField m;
    m.dim = dim;
    m.g = [g0](const double*) { return g0; };
    m.dg = [dim](const double*) { return std::vector<Mat>(dim, Mat(dim, dim)); };
    m.d2g = [dim](const double*) { return std::vector<Mat>(dim * dim, Mat(dim, dim)); };
    return m;
}

// diag(1, w(t)^2) with w, w', w'' supplied; covers the round sphere
// (w = a sin t after pulling the a^2 into g_tt, handled separately) and
// general warped products.
inline MetricField warped_metric(double g_tt, std::function<std::array<double, 3>(double)> w_jet) {
    MetricField m;
    m.dim = 2;
    m.g = [g_tt, w_jet](const double* p) {
        Mat g(2, 2);
        const auto w = w_jet(p[0]);
        g(0, 0) = g_tt;
        g(1, 1) = w[0] * w[0];
        return g;
    };
    m.dg = [w_jet](const double* p) {
        std::vector<Mat> dg(2, Mat(2, 2));
        const auto w = w_jet(p[0]);
        dg[0](1, 1) = 2.0 * w[0] * w[1];
        return dg;
    };
    m.d2g = [w_jet](const double* p) {
        std::vector<Mat> d2g(4, Mat(2, 2));
        const auto w = w_jet(p[0]);
        d2g[0](1, 1) = 2.0 * (w[1] * w[1] + w[0] * w[2]);
        return d2g;
    };
    return m;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Preset charts
// ---------------------------------------------------------------------------
//   flat_rect    params = axis lengths (1..3), non-periodic, g = identity
//   flat_torus   params = axis lengths (1..3), periodic, g = identity
//   flat_box     alias of flat_rect with 3 lengths
//   scaled_flat  params = [c, lengths...], periodic torus with g = c*identity
//   flat_skew    params = [g11, g12, g22, Lx, Ly], periodic, constant g
//   sphere       params = [radius a, theta_min]; chart (theta, phi) in
//                [theta_min, pi - theta_min] x [0, 2pi), g = diag(a^2, a^2 sin^2 theta)
//   warped       params = [a, b, theta_min]; dtheta^2 + w(theta)^2 dphi^2
//                with w = a + b cos theta (requires a > |b|)
// ---------------------------------------------------------------------------

struct MetricPresetDoc {
    std::string name;
    std::string params;
    std::string summary;
};

inline std::vector<MetricPresetDoc> metric_preset_docs() {
    return {
        {"flat_rect", "[L1, ..., Ln] (n<=3), default [2pi, 2pi]",
         "flat identity metric on a closed box, non-periodic"},
        {"flat_torus", "[L1, ..., Ln] (n<=3), default [2pi, 2pi]",
         "flat identity metric, all axes periodic"},
        {"scaled_flat", "[c, L1, ..., Ln], default [1, 2pi, 2pi]",
         "constant metric c*identity on a torus (c > 0)"},
        {"flat_skew", "[g11, g12, g22, Lx, Ly]",
         "constant non-diagonal SPD metric on a 2-torus"},
        {"sphere", "[a, theta_min], default [1, 0.15]",
         "round sphere of radius a on the polar band theta in [theta_min, pi-theta_min]"},
        {"warped", "[a, b, theta_min], default [1, 0.25, 0.15]",
         "warped product dtheta^2 + (a + b cos theta)^2 dphi^2 on a band"},
    };
}

namespace detail {

inline void check_chart_invariants(const Chart& chart) {
    const auto& s = chart.spec;
    if (s.dim < 1) throw ConfigInvalid("chart '" + s.name + "': dim must be >= 1");
    for (int k = 0; k < s.dim; ++k)
        if (!(s.ranges[k][1] > s.ranges[k][0]))
            throw ConfigInvalid("chart '" + s.name + "': axis " + std::to_string(k) +
                                " has non-positive length");
    // periodic axes must close up: metric values at the two endpoints agree
    Rng probe(0xC0FFEEULL);
    for (int k = 0; k < s.dim; ++k) {
        if (!s.periodic[k]) continue;
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> lo_pt(s.dim), hi_pt(s.dim);
            for (int a = 0; a < s.dim; ++a)
                lo_pt[a] = hi_pt[a] = probe.uniform(s.ranges[a][0], s.ranges[a][1]);
            lo_pt[k] = s.ranges[k][0];
            hi_pt[k] = s.ranges[k][1];
            const Mat glo = chart.metric.g(lo_pt.data());
            const Mat ghi = chart.metric.g(hi_pt.data());
            if ((glo - ghi).max_abs() > 1e-12)
                throw ConfigInvalid("chart '" + s.name + "': periodic axis " +
                                    std::to_string(k) + " metric mismatch at endpoints");
        }
    }
}

inline Chart make_flat(const std::string& name, std::vector<double> lengths, bool periodic,
                       double scale = 1.0) {
    if (lengths.empty()) lengths = {2.0 * M_PI, 2.0 * M_PI};
    const int dim = static_cast<int>(lengths.size());
    if (dim > 3) throw ConfigInvalid("metric preset '" + name + "': at most 3 axes supported");
    if (scale <= 0.0) throw ConfigInvalid("metric preset '" + name + "': scale must be > 0");
    Chart chart;
    chart.spec.name = name;
    chart.spec.dim = dim;
    for (double len : lengths) chart.spec.ranges.push_back({0.0, len});
    chart.spec.periodic.assign(dim, periodic);
    Mat g0 = Mat::identity(dim);
    g0 *= scale;
    chart.metric = constant_metric(dim, g0);
    return chart;
}

} // namespace detail

inline Chart make_chart(const std::string& preset, std::vector<double> params) {
    Chart chart;
    if (preset == "flat_rect" || preset == "flat_box") {
        chart = detail::make_flat(preset, params, /*periodic=*/false);
    } else if (preset == "flat_torus") {
        chart = detail::make_flat(preset, params, /*periodic=*/true);
    } else if (preset == "scaled_flat") {
        if (params.empty()) params = {1.0};
        const double c = params[0];
        chart = detail::make_flat(preset, {params.begin() + 1, params.end()},
                                  /*periodic=*/true, c);
    } else if (preset == "flat_skew") {
        if (params.size() != 5)
            throw ConfigInvalid("flat_skew expects params [g11, g12, g22, Lx, Ly]");
        Mat g0(2, 2);
        g0(0, 0) = params[0];
        g0(0, 1) = g0(1, 0) = params[1];
        g0(1, 1) = params[2];
        Mat inv;
        double det;
        spd_inverse_det(g0, inv, det, "flat_skew metric");
        chart.spec.name = preset;
        chart.spec.dim = 2;
        chart.spec.ranges = {{0.0, params[3]}, {0.0, params[4]}};
        chart.spec.periodic = {true, true};
        chart.metric = detail::constant_metric(2, g0);
    } else if (preset == "sphere") {
        const double a = params.size() > 0 ? params[0] : 1.0;
        const double theta_min = params.size() > 1 ? params[1] : 0.15;
        if (a <= 0.0) throw ConfigInvalid("sphere radius must be > 0");
        if (!(theta_min > 0.0 && theta_min < M_PI / 2))
            throw ConfigInvalid("sphere theta_min must lie in (0, pi/2)");
        chart.spec.name = preset;
        chart.spec.dim = 2;
        chart.spec.ranges = {{theta_min, M_PI - theta_min}, {0.0, 2.0 * M_PI}};
        chart.spec.periodic = {false, true};
        chart.metric = detail::warped_metric(a * a, [a](double t) {
            return std::array<double, 3>{a * std::sin(t), a * std::cos(t), -a * std::sin(t)};
        });
    } else if (preset == "warped") {
        const double a = params.size() > 0 ? params[0] : 1.0;
        const double b = params.size() > 1 ? params[1] : 0.25;
        const double theta_min = params.size() > 2 ? params[2] : 0.15;
        if (!(a > std::abs(b)))
            throw ConfigInvalid("warped preset requires a > |b| so the fiber radius stays positive");
        chart.spec.name = preset;
        chart.spec.dim = 2;
        chart.spec.ranges = {{theta_min, M_PI - theta_min}, {0.0, 2.0 * M_PI}};
        chart.spec.periodic = {false, true};
        chart.metric = detail::warped_metric(1.0, [a, b](double t) {
            return std::array<double, 3>{a + b * std::cos(t), -b * std::sin(t), -b * std::cos(t)};
        });
    } else {
        throw ConfigInvalid("unknown metric preset '" + preset + "'");
    }
    chart.spec.metric_preset = preset;
    chart.spec.metric_params = std::move(params);
    detail::check_chart_invariants(chart);
    return chart;
}

} // namespace riemstab
