#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace riemstab {

// ---------------------------------------------------------------------------
// Errors. One exception type per failure mode named in the operation
// contracts, all rooted in Error so callers can catch coarsely.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define RIEMSTAB_ERROR_TYPE(Name)                                              \
    class Name : public Error {                                               \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {}   \
    }

RIEMSTAB_ERROR_TYPE(NonPositiveDefinite);
RIEMSTAB_ERROR_TYPE(SingularJacobian);
RIEMSTAB_ERROR_TYPE(MaxIterExceeded);
RIEMSTAB_ERROR_TYPE(BlowUp);
RIEMSTAB_ERROR_TYPE(NotSelfAdjoint);
RIEMSTAB_ERROR_TYPE(NoConvergence);
RIEMSTAB_ERROR_TYPE(BallExceedsDomain);
RIEMSTAB_ERROR_TYPE(NegativeCouplingProduct);
RIEMSTAB_ERROR_TYPE(EmptyLevelSet);
RIEMSTAB_ERROR_TYPE(GradientBelowFloor);
RIEMSTAB_ERROR_TYPE(ConfigInvalid);

#undef RIEMSTAB_ERROR_TYPE

// ---------------------------------------------------------------------------
// Deterministic RNG. std::uniform_real_distribution is implementation-defined,
// so reports would not be reproducible across standard libraries; we carry our
// own splitmix64-seeded xoshiro256** and derive doubles with a fixed recipe.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    int range_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
    }

    // symmetric two-sided uniform in [-a, a]
    double symmetric(double a) { return uniform(-a, a); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Derive a child seed from a parent seed and a stream tag; used to give every
// experiment / test-function its own reproducible stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (0x517cc1b727220a95ULL * (tag + 1));
    return splitmix64(s);
}

// ---------------------------------------------------------------------------
// Pairwise (tree) reduction: fixed association order so quadrature and inner
// products are reproducible regardless of how work is scheduled.
// ---------------------------------------------------------------------------

namespace detail {
inline double pairwise_sum_impl(const double* a, std::size_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_impl(a, half) + pairwise_sum_impl(a + half, n - half);
}
} // namespace detail

inline double pairwise_sum(std::span<const double> a) {
    return detail::pairwise_sum_impl(a.data(), a.size());
}

// Pairwise sum of f(i) for i in [0, n) without materializing the terms at the
// leaves of the tree; used for weighted dot products over grid nodes.
template <class F>
double pairwise_sum_indexed(std::size_t n, F&& f, std::size_t offset = 0) {
    if (n <= 16) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += f(offset + i);
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum_indexed(half, f, offset) +
           pairwise_sum_indexed(n - half, f, offset + half);
}

// ---------------------------------------------------------------------------
// Small vector helpers
// ---------------------------------------------------------------------------

inline double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double sqr(double x) { return x * x; }

} // namespace riemstab
