#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "riemstab/chart.hpp"
#include "riemstab/common.hpp"
#include "riemstab/densemat.hpp"

namespace riemstab {

// ---------------------------------------------------------------------------
// Analytic scalar fields as sums of separable terms. Each per-axis factor
// knows its own derivatives of any order, so the Bochner machinery can pull
// exact third partials without symbolic algebra.
// ---------------------------------------------------------------------------

class AnalyticScalar {
public:
    struct Factor {
        enum class Kind { One, Cosine, Poly } kind = Kind::One;
        double freq = 0.0, phase = 0.0;   // Cosine: cos(freq*x + phase)
        std::vector<double> coeffs;       // Poly: sum coeffs[d] x^d

        double deriv(double x, int order) const {
            switch (kind) {
            case Kind::One:
                return order == 0 ? 1.0 : 0.0;
            case Kind::Cosine:
                return std::pow(freq, order) * std::cos(freq * x + phase + 0.5 * M_PI * order);
            case Kind::Poly: {
                double s = 0.0;
                for (std::size_t d = order; d < coeffs.size(); ++d) {
                    double c = coeffs[d];
                    for (int r = 0; r < order; ++r) c *= static_cast<double>(d - r);
                    s += c * std::pow(x, static_cast<double>(d - order));
                }
                return s;
            }
            }
            return 0.0;
        }
    };

    struct Term {
        double amplitude = 1.0;
        std::vector<Factor> factors;  // one per axis
    };

    AnalyticScalar() = default;
    AnalyticScalar(int dim, std::vector<Term> terms) : dim_(dim), terms_(std::move(terms)) {}

    int dim() const { return dim_; }

    // mixed partial of multi-order alpha (alpha[k] = order along axis k)
    double deriv(const double* p, const int* alpha) const {
        double s = 0.0;
        for (const auto& t : terms_) {
            double prod = t.amplitude;
            for (int k = 0; k < dim_ && prod != 0.0; ++k)
                prod *= t.factors[k].deriv(p[k], alpha[k]);
            s += prod;
        }
        return s;
    }

    double value(const double* p) const {
        std::vector<int> a(dim_, 0);
        return deriv(p, a.data());
    }

    double partial(const double* p, int axis) const {
        std::vector<int> a(dim_, 0);
        a[axis] = 1;
        return deriv(p, a.data());
    }

    // --- builders ---

    static AnalyticScalar constant(int dim, double c) {
        Term t;
        t.amplitude = c;
        t.factors.assign(dim, Factor{});
        return AnalyticScalar(dim, {t});
    }

    static AnalyticScalar cosine_axis(int dim, int axis, double freq = 1.0, double phase = 0.0) {
        Term t;
        t.factors.assign(dim, Factor{});
        t.factors[axis] = Factor{Factor::Kind::Cosine, freq, phase, {}};
        return AnalyticScalar(dim, {t});
    }

    static AnalyticScalar sine_axis(int dim, int axis, double freq = 1.0) {
        return cosine_axis(dim, axis, freq, -0.5 * M_PI);
    }

    static AnalyticScalar coordinate(int dim, int axis) {
        Term t;
        t.factors.assign(dim, Factor{});
        t.factors[axis] = Factor{Factor::Kind::Poly, 0, 0, {0.0, 1.0}};
        return AnalyticScalar(dim, {t});
    }

    AnalyticScalar operator+(const AnalyticScalar& other) const {
        std::vector<Term> terms = terms_;
        terms.insert(terms.end(), other.terms_.begin(), other.terms_.end());
        return AnalyticScalar(dim_, std::move(terms));
    }

    // Seeded mix of separable cosine terms. base_freq[k] is the frequency
    // quantum per axis (2pi/L for periodic axes so every term closes up).
    static AnalyticScalar random_trig(int dim, const std::vector<double>& base_freq,
                                      Rng& rng, int n_terms = 3, int max_mode = 3,
                                      double amp_lo = 0.3, double amp_hi = 1.0) {
        std::vector<Term> terms;
        for (int t = 0; t < n_terms; ++t) {
            Term term;
            term.amplitude = rng.uniform(amp_lo, amp_hi) * (rng.below(2) ? 1.0 : -1.0);
            term.factors.resize(dim);
            bool nontrivial = false;
            for (int k = 0; k < dim; ++k) {
                const int mode = rng.range_int(0, max_mode);
                if (mode == 0) {
                    term.factors[k] = Factor{};
                } else {
                    term.factors[k] = Factor{Factor::Kind::Cosine, mode * base_freq[k],
                                             rng.uniform(0.0, 2.0 * M_PI), {}};
                    nontrivial = true;
                }
            }
            if (!nontrivial)  // avoid pure constants; retune axis 0 to mode 1
                term.factors[0] = Factor{Factor::Kind::Cosine, base_freq[0],
                                         rng.uniform(0.0, 2.0 * M_PI), {}};
            terms.push_back(std::move(term));
        }
        return AnalyticScalar(dim, std::move(terms));
    }

private:
    int dim_ = 0;
    std::vector<Term> terms_;
};

// Frequency quantum per axis for trig test functions on a chart: periodic
// axes get 2pi/L so terms close up; non-periodic axes get pi/L (half-waves).
inline std::vector<double> trig_base_freq(const ChartSpec& spec) {
    std::vector<double> f(spec.dim);
    for (int k = 0; k < spec.dim; ++k)
        f[k] = (spec.periodic[k] ? 2.0 * M_PI : M_PI) / spec.length(k);
    return f;
}

// ---------------------------------------------------------------------------
// Metric jet: everything the operators need at one point, assembled once.
// Index conventions:  dg[k](i,j) = d_k g_ij,  gamma[k](i,j) = Gamma^k_ij,
// dgamma[l][k](i,j) = d_l Gamma^k_ij,  d2g[k][l] symmetric in (k,l).
// ---------------------------------------------------------------------------

struct MetricJet {
    int n = 0;
    Mat g, ginv;
    double det = 0.0, sqrt_det = 0.0;

    std::vector<Mat> dg, dginv;        // [k]
    std::vector<double> dlog;          // d_k log sqrt|g|
    std::vector<Mat> gamma;            // [k](i,j)

    std::vector<std::vector<Mat>> d2g, d2ginv, dgamma;  // [k][l] / [l][k]
    Mat d2log;                         // d_k d_l log sqrt|g|
    std::vector<double> b;             // b^j = (1/sqrt|g|) d_i (sqrt|g| g^{ij})
    Mat db;                            // db(k,j) = d_k b^j
};

inline MetricJet metric_jet(const MetricField& m, const double* p, int order = 2) {
    MetricJet jet;
    const int n = m.dim;
    jet.n = n;
    jet.g = m.g(p);
    spd_inverse_det(jet.g, jet.ginv, jet.det, "metric");
    jet.sqrt_det = std::sqrt(jet.det);
    if (order < 1) return jet;

    jet.dg = m.dg(p);
    jet.dginv.resize(n);
    jet.dlog.resize(n);
    for (int k = 0; k < n; ++k) {
        jet.dginv[k] = jet.ginv * jet.dg[k] * jet.ginv;
        jet.dginv[k] *= -1.0;
        double tr = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) tr += jet.ginv(i, j) * jet.dg[k](j, i);
        jet.dlog[k] = 0.5 * tr;
    }
    // Gamma^k_ij = 1/2 g^{hk} (d_i g_hj + d_j g_ih - d_h g_ij)
    jet.gamma.assign(n, Mat(n, n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                double s = 0.0;
                for (int h = 0; h < n; ++h)
                    s += jet.ginv(h, k) *
                         (jet.dg[i](h, j) + jet.dg[j](i, h) - jet.dg[h](i, j));
                jet.gamma[k](i, j) = jet.gamma[k](j, i) = 0.5 * s;
            }
    if (order < 2) return jet;

    const auto d2flat = m.d2g(p);
    jet.d2g.assign(n, std::vector<Mat>(n));
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) jet.d2g[k][l] = d2flat[k * n + l];

    jet.d2ginv.assign(n, std::vector<Mat>(n));
    jet.d2log = Mat(n, n);
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            Mat t = jet.dginv[l] * jet.dg[k] * jet.ginv;
            t += jet.ginv * jet.d2g[k][l] * jet.ginv;
            t += jet.ginv * jet.dg[k] * jet.dginv[l];
            t *= -1.0;
            jet.d2ginv[k][l] = std::move(t);
            double tr = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    tr += jet.dginv[l](i, j) * jet.dg[k](j, i) +
                          jet.ginv(i, j) * jet.d2g[k][l](j, i);
            jet.d2log(k, l) = 0.5 * tr;
        }

    jet.dgamma.assign(n, std::vector<Mat>(n, Mat(n, n)));
    for (int l = 0; l < n; ++l)
        for (int k = 0; k < n; ++k)
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j) {
                    double s = 0.0;
                    for (int h = 0; h < n; ++h) {
                        s += jet.dginv[l](h, k) *
                             (jet.dg[i](h, j) + jet.dg[j](i, h) - jet.dg[h](i, j));
                        s += jet.ginv(h, k) *
                             (jet.d2g[i][l](h, j) + jet.d2g[j][l](i, h) - jet.d2g[h][l](i, j));
                    }
                    jet.dgamma[l][k](i, j) = jet.dgamma[l][k](j, i) = 0.5 * s;
                }

    jet.b.assign(n, 0.0);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            jet.b[j] += jet.dginv[i](i, j) + jet.ginv(i, j) * jet.dlog[i];

    jet.db = Mat(n, n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += jet.d2ginv[i][k](i, j) + jet.dginv[k](i, j) * jet.dlog[i] +
                     jet.ginv(i, j) * jet.d2log(i, k);
            jet.db(k, j) = s;
        }
    return jet;
}

// ---------------------------------------------------------------------------
// Pointwise operations
// ---------------------------------------------------------------------------

// g^{ij} and |g| at p; errors with NonPositiveDefinite off the cone.
inline std::pair<Mat, double> metric_inverse_det(const MetricField& m, const double* p) {
    Mat g = m.g(p), inv;
    double det;
    spd_inverse_det(g, inv, det, "metric");
    return {inv, det};
}

// All Gamma^k_ij at p, symmetric in the lower pair by construction.
inline std::vector<Mat> christoffel(const MetricField& m, const double* p) {
    return metric_jet(m, p, 1).gamma;
}

// Ricci tensor from Gamma and its analytic first partials:
//   R_ij = d_k Gamma^k_ij - d_j Gamma^k_ik
//        + Gamma^k_kl Gamma^l_ij - Gamma^k_jl Gamma^l_ik
// Sign convention gives Ric = (n-1)/a^2 g on the round sphere of radius a.
inline Mat ricci(const MetricField& m, const double* p) {
    const MetricJet jet = metric_jet(m, p, 2);
    const int n = jet.n;
    Mat ric(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) {
                s += jet.dgamma[k][k](i, j) - jet.dgamma[j][k](i, k);
                for (int l = 0; l < n; ++l)
                    s += jet.gamma[k](k, l) * jet.gamma[l](i, j) -
                         jet.gamma[k](j, l) * jet.gamma[l](i, k);
            }
            ric(i, j) = ric(j, i) = s;
        }
    return ric;
}

struct GradientValue {
    std::vector<double> up;  // contravariant components (grad f)^i
    double norm_sq = 0.0;    // |grad f|_g^2
};

inline GradientValue gradient(const MetricField& m, const AnalyticScalar& f, const double* p) {
    const int n = m.dim;
    Mat ginv;
    double det;
    spd_inverse_det(m.g(p), ginv, det, "metric");
    std::vector<double> df(n);
    for (int k = 0; k < n; ++k) df[k] = f.partial(p, k);
    GradientValue out;
    out.up = ginv.apply(df);
    for (int i = 0; i < n; ++i) out.norm_sq += df[i] * out.up[i];
    return out;
}

namespace detail {

// Scalar 3-jet of f at p (value, d_i f, d_ij f, d_ijk f), from the analytic field.
struct ScalarJet3 {
    double f0 = 0.0;
    std::vector<double> d1;               // [i]
    Mat d2;                               // (i,j)
    std::vector<Mat> d3;                  // [k](i,j) = d_k d_i d_j f
};

inline ScalarJet3 scalar_jet3(const AnalyticScalar& f, const double* p, int order) {
    const int n = f.dim();
    ScalarJet3 jet;
    std::vector<int> a(n, 0);
    jet.f0 = f.deriv(p, a.data());
    jet.d1.resize(n);
    for (int i = 0; i < n; ++i) {
        a.assign(n, 0);
        a[i] = 1;
        jet.d1[i] = f.deriv(p, a.data());
    }
    if (order < 2) return jet;
    jet.d2 = Mat(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            a.assign(n, 0);
            a[i] += 1;
            a[j] += 1;
            jet.d2(i, j) = jet.d2(j, i) = f.deriv(p, a.data());
        }
    if (order < 3) return jet;
    jet.d3.assign(n, Mat(n, n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                a.assign(n, 0);
                a[k] += 1;
                a[i] += 1;
                a[j] += 1;
                jet.d3[k](i, j) = jet.d3[k](j, i) = f.deriv(p, a.data());
            }
    return jet;
}

inline double laplacian_from_jets(const MetricJet& mj, const ScalarJet3& fj) {
    const int n = mj.n;
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += mj.ginv(i, j) * fj.d2(i, j);
    for (int j = 0; j < n; ++j) s += mj.b[j] * fj.d1[j];
    return s;
}

} // namespace detail

// Divergence-form Laplace-Beltrami at p: g^{ij} d_ij f + b^j d_j f with
// b^j = (1/sqrt|g|) d_i(sqrt|g| g^{ij}). Deliberately not the Hessian trace,
// so the trace identity is a genuine cross-check between two routes.
inline double laplace_beltrami(const MetricField& m, const AnalyticScalar& f, const double* p) {
    const MetricJet mj = metric_jet(m, p, 2);
    const auto fj = detail::scalar_jet3(f, p, 2);
    return detail::laplacian_from_jets(mj, fj);
}

// Covariant Hessian (H_f)_ij = d_ij f - Gamma^k_ij d_k f.
inline Mat hessian(const MetricField& m, const AnalyticScalar& f, const double* p) {
    const MetricJet mj = metric_jet(m, p, 1);
    const auto fj = detail::scalar_jet3(f, p, 2);
    const int n = mj.n;
    Mat h(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = fj.d2(i, j);
            for (int k = 0; k < n; ++k) s -= mj.gamma[k](i, j) * fj.d1[k];
            h(i, j) = h(j, i) = s;
        }
    return h;
}

// |T|^2 of a symmetric 2-tensor with both indices raised by ginv.
inline double tensor_norm_sq(const Mat& t, const Mat& ginv) {
    const int n = t.rows();
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    s += ginv(i, k) * ginv(j, l) * t(i, j) * t(k, l);
    return s;
}

struct BochnerTerms {
    double half_lap_grad_sq = 0.0;  // 1/2 Lap |grad f|^2
    double hessian_sq = 0.0;        // |H_f|^2
    double grad_lap_dot = 0.0;      // grad(Lap f) . grad f
    double ricci_quad = 0.0;        // Ric(grad f, grad f)
    double residual() const { return half_lap_grad_sq - hessian_sq - grad_lap_dot - ricci_quad; }
};

// The four analytic terms of the Bochner-Weitzenboeck identity at p,
// evaluated with analytic metric and scalar jets; the residual vanishes to
// rounding.
inline BochnerTerms bochner_terms(const MetricField& m, const AnalyticScalar& f,
                                  const double* p) {
    const MetricJet mj = metric_jet(m, p, 2);
    const auto fj = detail::scalar_jet3(f, p, 3);
    const int n = mj.n;

    // jet of F = |grad f|^2 = g^{ij} d_i f d_j f
    double F = 0.0;
    std::vector<double> dF(n, 0.0);
    Mat d2F(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) F += mj.ginv(i, j) * fj.d1[i] * fj.d1[j];
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                s += mj.dginv[k](i, j) * fj.d1[i] * fj.d1[j] +
                     2.0 * mj.ginv(i, j) * fj.d2(k, i) * fj.d1[j];
        dF[k] = s;
    }
    for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    s += mj.d2ginv[k][l](i, j) * fj.d1[i] * fj.d1[j];
                    s += 2.0 * mj.dginv[k](i, j) * fj.d2(l, i) * fj.d1[j];
                    s += 2.0 * mj.dginv[l](i, j) * fj.d2(k, i) * fj.d1[j];
                    s += 2.0 * mj.ginv(i, j) * (fj.d3[k](l, i) * fj.d1[j] + fj.d2(k, i) * fj.d2(l, j));
                }
            d2F(k, l) = d2F(l, k) = s;
        }
    double lap_F = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) lap_F += mj.ginv(i, j) * d2F(i, j);
    for (int j = 0; j < n; ++j) lap_F += mj.b[j] * dF[j];

    // |H_f|^2
    Mat hess(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = fj.d2(i, j);
            for (int k = 0; k < n; ++k) s -= mj.gamma[k](i, j) * fj.d1[k];
            hess(i, j) = hess(j, i) = s;
        }
    const double hf_sq = tensor_norm_sq(hess, mj.ginv);

    // grad(Lap f) . grad f = g^{ij} d_i(Lap f) d_j f
    std::vector<double> d_lap(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                s += mj.dginv[k](i, j) * fj.d2(i, j) + mj.ginv(i, j) * fj.d3[k](i, j);
        for (int j = 0; j < n; ++j) s += mj.db(k, j) * fj.d1[j] + mj.b[j] * fj.d2(k, j);
        d_lap[k] = s;
    }
    double grad_lap_dot = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) grad_lap_dot += mj.ginv(i, j) * d_lap[i] * fj.d1[j];

    // Ric(grad f, grad f) with contravariant gradient
    const Mat ric = ricci(m, p);
    std::vector<double> gu(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gu[i] += mj.ginv(i, j) * fj.d1[j];
    double ric_term = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) ric_term += ric(i, j) * gu[i] * gu[j];

    BochnerTerms terms;
    terms.half_lap_grad_sq = 0.5 * lap_F;
    terms.hessian_sq = hf_sq;
    terms.grad_lap_dot = grad_lap_dot;
    terms.ricci_quad = ric_term;
    return terms;
}

inline double bochner_residual(const MetricField& m, const AnalyticScalar& f, const double* p) {
    return bochner_terms(m, f, p).residual();
}

// Both sides of the pointwise Hessian inequality |grad|grad f||^2 <= |H_f|^2
// plus the collinearity defect of the equality case: the largest g-sine of
// the angle between grad (grad f)_k and grad f over components k.
struct HessianInequalityValue {
    double lhs = 0.0;            // |grad |grad f||^2
    double rhs = 0.0;            // |H_f|^2
    double grad_norm = 0.0;      // |grad f|
    double collinearity_defect = 0.0;
};

inline HessianInequalityValue hessian_inequality(const MetricField& m, const AnalyticScalar& f,
                                                 const double* p, double eps_grad = 1e-8) {
    const MetricJet mj = metric_jet(m, p, 2);
    const auto fj = detail::scalar_jet3(f, p, 2);
    const int n = mj.n;
    HessianInequalityValue out;

    std::vector<double> gu(n, 0.0);
    double F = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gu[i] += mj.ginv(i, j) * fj.d1[j];
    for (int i = 0; i < n; ++i) F += fj.d1[i] * gu[i];
    out.grad_norm = std::sqrt(std::max(F, 0.0));

    Mat hess(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            double s = fj.d2(i, j);
            for (int k = 0; k < n; ++k) s -= mj.gamma[k](i, j) * fj.d1[k];
            hess(i, j) = hess(j, i) = s;
        }
    out.rhs = tensor_norm_sq(hess, mj.ginv);

    if (out.grad_norm <= eps_grad) return out;

    // dF as in bochner_residual; |grad |grad f||^2 = |grad F|^2 / (4F)
    std::vector<double> dF(n, 0.0);
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                s += mj.dginv[k](i, j) * fj.d1[i] * fj.d1[j] +
                     2.0 * mj.ginv(i, j) * fj.d2(k, i) * fj.d1[j];
        dF[k] = s;
    }
    double dF_norm_sq = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) dF_norm_sq += mj.ginv(i, j) * dF[i] * dF[j];
    out.lhs = dF_norm_sq / (4.0 * F);

    // collinearity of grad (grad f)_k with grad f (covariant components of
    // each gradient are what the metric pairs; defect = sin of the g-angle)
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        std::vector<double> dgk(n, 0.0);  // d_i ( (grad f)^k )
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j)
                s += mj.dginv[i](k, j) * fj.d1[j] + mj.ginv(k, j) * fj.d2(i, j);
            dgk[i] = s;
        }
        double aa = 0.0, ab = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                aa += mj.ginv(i, j) * dgk[i] * dgk[j];
                ab += mj.ginv(i, j) * dgk[i] * fj.d1[j];
            }
        if (aa <= sqr(eps_grad) * F) continue;  // negligible component gradient
        const double cos_sq = std::min(1.0, (ab * ab) / (aa * F));
        worst = std::max(worst, std::sqrt(std::max(0.0, 1.0 - cos_sq)));
    }
    out.collinearity_defect = worst;
    return out;
}

} // namespace riemstab
