#pragma once

#include <vector>

#include "riemstab/common.hpp"
#include "riemstab/geometry.hpp"
#include "riemstab/grid.hpp"

namespace riemstab {

// Seeded families of compactly supported test functions: the discrete stand-in
// for the phi in C_c^1 that the stability and Poincare inequalities quantify
// over. Each family member is m fields (one per system component), fully
// reproducible from (seed, index).
class TestFunctionFamily {
public:
    enum class Kind { TrigMix, RandomBump };

    TestFunctionFamily(Kind kind, int count, int components, std::uint64_t seed,
                       double amp_lo = 0.3, double amp_hi = 1.0)
        : kind_(kind), count_(count), m_(components), seed_(seed),
          amp_lo_(amp_lo), amp_hi_(amp_hi) {}

    Kind kind() const { return kind_; }
    int count() const { return count_; }
    int components() const { return m_; }
    std::uint64_t seed() const { return seed_; }

    std::vector<DiscreteScalarField> member(const GridPtr& grid, int index) const {
        Rng rng(derive_seed(seed_, static_cast<std::uint64_t>(index)));
        std::vector<DiscreteScalarField> phi;
        for (int c = 0; c < m_; ++c) {
            if (kind_ == Kind::TrigMix) {
                for (int k = 0; k < grid->dim(); ++k)
                    if (!grid->periodic(k))
                        throw ConfigInvalid(
                            "trig-mix test functions need a fully periodic chart; "
                            "use random-bump on charts with boundary");
                auto f = AnalyticScalar::random_trig(grid->dim(),
                                                     trig_base_freq(grid->chart().spec), rng,
                                                     3, 3, amp_lo_, amp_hi_);
                phi.push_back(sample(grid, f));
            } else {
                phi.push_back(bump(grid, rng));
            }
        }
        return phi;
    }

private:
    // C^2 bump A * prod_k psi((x_k - c_k)/r_k), psi(s) = (1-s^2)^3 on |s|<1;
    // support box kept strictly inside the chart interior.
    DiscreteScalarField bump(const GridPtr& grid, Rng& rng) const {
        const int d = grid->dim();
        const auto& spec = grid->chart().spec;
        std::vector<double> center(d), radius(d);
        for (int k = 0; k < d; ++k) {
            const double len = spec.length(k);
            const double lo = spec.ranges[k][0];
            radius[k] = rng.uniform(0.12, 0.3) * len;
            const double margin = spec.periodic[k] ? 0.0 : radius[k] + 0.02 * len;
            center[k] = rng.uniform(lo + margin, lo + len - margin);
        }
        const double amp = rng.uniform(amp_lo_, amp_hi_) * (rng.below(2) ? 1.0 : -1.0);
        DiscreteScalarField f(grid);
        for (std::size_t i = 0; i < grid->size(); ++i) {
            const auto p = grid->coords(i);
            double val = amp;
            for (int k = 0; k < d && val != 0.0; ++k) {
                double dx = p[k] - center[k];
                if (spec.periodic[k]) {
                    const double len = spec.length(k);
                    dx = std::remainder(dx, len);
                }
                const double s = dx / radius[k];
                val *= std::abs(s) < 1.0 ? std::pow(1.0 - s * s, 3) : 0.0;
            }
            f.v[i] = val;
        }
        return f;
    }

    Kind kind_;
    int count_;
    int m_;
    std::uint64_t seed_;
    double amp_lo_, amp_hi_;
};

// Default probe set for the inequality checks: low-frequency trig modes on
// fully periodic charts plus seeded compact bumps everywhere.
inline std::vector<TestFunctionFamily> default_families(const ChartSpec& spec, int components,
                                                        int bump_count, std::uint64_t seed,
                                                        int trig_count = 16) {
    std::vector<TestFunctionFamily> fams;
    bool fully_periodic = true;
    for (bool p : spec.periodic) fully_periodic &= p;
    if (fully_periodic && trig_count > 0)
        fams.emplace_back(TestFunctionFamily::Kind::TrigMix, trig_count, components,
                          derive_seed(seed, 0x716ULL));
    fams.emplace_back(TestFunctionFamily::Kind::RandomBump, bump_count, components,
                      derive_seed(seed, 0xB0ULL));
    return fams;
}

} // namespace riemstab
