#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <type_traits>
#include <ostream>
#include <vector>

#include "riemstab/chart.hpp"
#include "riemstab/common.hpp"
#include "riemstab/densemat.hpp"
#include "riemstab/geometry.hpp"

namespace riemstab {

// Structured tensor-product grid over a chart. Periodic axes carry N cells
// and no duplicated endpoint node; non-periodic axes carry N nodes including
// both endpoints. Metric-derived per-node data (sqrt|g|, g^{-1}, quadrature
// weight) is cached at construction; flat metrics collapse to one copy.
class Grid {
public:
    Grid(Chart chart, std::vector<int> nodes)
        : chart_(std::move(chart)), n_(std::move(nodes)) {
        const int dim = chart_.dim();
        if (static_cast<int>(n_.size()) != dim)
            throw ConfigInvalid("grid resolution must list one node count per axis");
        for (int k = 0; k < dim; ++k)
            if (n_[k] < 4) throw ConfigInvalid("grid needs at least 4 nodes per axis");
        h_.resize(dim);
        coords_.resize(dim);
        for (int k = 0; k < dim; ++k) {
            const double len = chart_.spec.length(k);
            h_[k] = chart_.spec.periodic[k] ? len / n_[k] : len / (n_[k] - 1);
            coords_[k].resize(n_[k]);
            for (int i = 0; i < n_[k]; ++i)
                coords_[k][i] = chart_.spec.ranges[k][0] + i * h_[k];
        }
        strides_.assign(dim, 1);
        for (int k = dim - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * n_[k + 1];
        size_ = static_cast<std::size_t>(strides_[0]) * n_[0];
        cache_metric();
    }

    static std::shared_ptr<const Grid> create(Chart chart, std::vector<int> nodes) {
        return std::make_shared<const Grid>(std::move(chart), std::move(nodes));
    }

    const Chart& chart() const { return chart_; }
    int dim() const { return chart_.dim(); }
    std::size_t size() const { return size_; }
    int extent(int axis) const { return n_[axis]; }
    const std::vector<int>& extents() const { return n_; }
    double spacing(int axis) const { return h_[axis]; }
    double min_spacing() const {
        double m = h_[0];
        for (double h : h_) m = std::min(m, h);
        return m;
    }
    bool periodic(int axis) const { return chart_.spec.periodic[axis]; }

    void multi_index(std::size_t idx, int* mi) const {
        for (int k = 0; k < dim(); ++k) {
            mi[k] = static_cast<int>(idx / strides_[k]);
            idx -= static_cast<std::size_t>(mi[k]) * strides_[k];
        }
    }
    std::size_t index(const int* mi) const {
        std::size_t idx = 0;
        for (int k = 0; k < dim(); ++k) idx += static_cast<std::size_t>(mi[k]) * strides_[k];
        return idx;
    }

    double axis_coord(int axis, int i) const { return coords_[axis][i]; }

    std::vector<double> coords(std::size_t idx) const {
        std::vector<int> mi(dim());
        multi_index(idx, mi.data());
        std::vector<double> p(dim());
        for (int k = 0; k < dim(); ++k) p[k] = coords_[k][mi[k]];
        return p;
    }

    // Step a multi-index along an axis; periodic axes wrap. Returns false
    // when the step leaves a non-periodic axis.
    bool shift(int* mi, int axis, int step) const {
        int v = mi[axis] + step;
        if (periodic(axis)) {
            v = ((v % n_[axis]) + n_[axis]) % n_[axis];
        } else if (v < 0 || v >= n_[axis]) {
            return false;
        }
        mi[axis] = v;
        return true;
    }

    bool is_boundary(std::size_t idx) const {
        std::vector<int> mi(dim());
        multi_index(idx, mi.data());
        for (int k = 0; k < dim(); ++k)
            if (!periodic(k) && (mi[k] == 0 || mi[k] == n_[k] - 1)) return true;
        return false;
    }

    // Distance (in stencil widths) to the nearest non-periodic boundary;
    // large when every axis is periodic.
    int boundary_margin(std::size_t idx) const {
        std::vector<int> mi(dim());
        multi_index(idx, mi.data());
        int margin = 1 << 28;
        for (int k = 0; k < dim(); ++k) {
            if (periodic(k)) continue;
            margin = std::min(margin, std::min(mi[k], n_[k] - 1 - mi[k]));
        }
        return margin;
    }

    double sqrt_det(std::size_t idx) const {
        return uniform_metric_ ? sqrt_det_[0] : sqrt_det_[idx];
    }
    // quadrature weight: sqrt|g| * prod(h_k) with trapezoid halving on
    // non-periodic ends; exact for constants
    double weight(std::size_t idx) const { return weight_[idx]; }
    const std::vector<double>& weights() const { return weight_; }

    // inverse metric at a node, row-major dim x dim
    const double* ginv(std::size_t idx) const {
        return ginv_.data() + (uniform_metric_ ? 0 : idx * dim() * dim());
    }

    double total_volume() const { return pairwise_sum(weight_); }

private:
    void cache_metric() {
        const int d = dim();
        // probe whether the metric is constant over the chart
        uniform_metric_ = true;
        Rng probe(0xA11CE5ULL);
        const Mat g0 = chart_.metric.g(coords(0).data());
        for (int trial = 0; trial < 8 && uniform_metric_; ++trial) {
            auto p = chart_.random_interior_point(probe, 0.01);
            if ((chart_.metric.g(p.data()) - g0).max_abs() > 1e-15) uniform_metric_ = false;
        }
        const std::size_t n_cached = uniform_metric_ ? 1 : size_;
        sqrt_det_.resize(n_cached);
        ginv_.resize(n_cached * d * d);
        for (std::size_t i = 0; i < n_cached; ++i) {
            const auto p = coords(i);
            Mat inv;
            double det;
            spd_inverse_det(chart_.metric.g(p.data()), inv, det, "metric");
            sqrt_det_[i] = std::sqrt(det);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) ginv_[i * d * d + a * d + b] = inv(a, b);
        }
        weight_.resize(size_);
        double hprod = 1.0;
        for (int k = 0; k < d; ++k) hprod *= h_[k];
        std::vector<int> mi(d);
        for (std::size_t i = 0; i < size_; ++i) {
            multi_index(i, mi.data());
            double w = sqrt_det(i) * hprod;
            for (int k = 0; k < d; ++k)
                if (!periodic(k) && (mi[k] == 0 || mi[k] == n_[k] - 1)) w *= 0.5;
            weight_[i] = w;
        }
    }

    Chart chart_;
    std::vector<int> n_;
    std::vector<double> h_;
    std::vector<std::vector<double>> coords_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;

    bool uniform_metric_ = false;
    std::vector<double> sqrt_det_;
    std::vector<double> ginv_;
    std::vector<double> weight_;
};

using GridPtr = std::shared_ptr<const Grid>;

struct DiscreteScalarField {
    GridPtr grid;
    std::vector<double> v;

    DiscreteScalarField() = default;
    explicit DiscreteScalarField(GridPtr g, double fill = 0.0)
        : grid(std::move(g)), v(grid->size(), fill) {}

    std::size_t size() const { return v.size(); }
    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }

    double sup_norm() const { return riemstab::sup_norm(v); }
    double oscillation() const {
        double lo = v[0], hi = v[0];
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        return hi - lo;
    }
};

template <class F>
    requires std::is_invocable_r_v<double, F, const double*>
DiscreteScalarField sample(const GridPtr& grid, F&& f) {
    DiscreteScalarField out(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) out.v[i] = f(grid->coords(i).data());
    return out;
}

inline DiscreteScalarField sample(const GridPtr& grid, const AnalyticScalar& f) {
    return sample(grid, [&](const double* p) { return f.value(p); });
}

// ---------------------------------------------------------------------------
// Field export: CSV (coordinates + value) and a compact binary dump.
// Binary layout, little-endian: uint64 dim, uint64 per-axis node counts,
// then row-major (last axis fastest) float64 values.
// ---------------------------------------------------------------------------

inline void write_csv(const DiscreteScalarField& f, std::ostream& os) {
    const auto& g = *f.grid;
    for (int k = 0; k < g.dim(); ++k) os << "x" << k << ",";
    os << "value\n";
    char buf[32];
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.coords(i);
        for (double c : p) {
            std::snprintf(buf, sizeof buf, "%.17g", c);
            os << buf << ",";
        }
        std::snprintf(buf, sizeof buf, "%.17g", f.v[i]);
        os << buf << "\n";
    }
}

inline void write_binary(const DiscreteScalarField& f, std::ostream& os) {
    const auto& g = *f.grid;
    const std::uint64_t dim = static_cast<std::uint64_t>(g.dim());
    os.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    for (int k = 0; k < g.dim(); ++k) {
        const std::uint64_t n = static_cast<std::uint64_t>(g.extent(k));
        os.write(reinterpret_cast<const char*>(&n), sizeof n);
    }
    os.write(reinterpret_cast<const char*>(f.v.data()),
             static_cast<std::streamsize>(f.v.size() * sizeof(double)));
}

inline DiscreteScalarField read_binary(const GridPtr& grid, std::istream& is) {
    std::uint64_t dim = 0;
    is.read(reinterpret_cast<char*>(&dim), sizeof dim);
    if (!is || dim != static_cast<std::uint64_t>(grid->dim()))
        throw ConfigInvalid("binary field dump dimension mismatch");
    for (int k = 0; k < grid->dim(); ++k) {
        std::uint64_t n = 0;
        is.read(reinterpret_cast<char*>(&n), sizeof n);
        if (!is || n != static_cast<std::uint64_t>(grid->extent(k)))
            throw ConfigInvalid("binary field dump extent mismatch on axis " + std::to_string(k));
    }
    DiscreteScalarField out(grid);
    is.read(reinterpret_cast<char*>(out.v.data()),
            static_cast<std::streamsize>(out.v.size() * sizeof(double)));
    if (!is) throw ConfigInvalid("binary field dump truncated");
    return out;
}

} // namespace riemstab
