#include <gtest/gtest.h>

#include <cmath>

#include "riemstab/chart.hpp"
#include "riemstab/geometry.hpp"

using namespace riemstab;

namespace {

const double kPi = M_PI;

std::vector<Chart> flat_presets() {
    std::vector<Chart> charts;
    charts.push_back(make_chart("flat_torus", {2 * kPi, 2 * kPi}));
    charts.push_back(make_chart("flat_rect", {2 * kPi, 2 * kPi}));
    charts.push_back(make_chart("scaled_flat", {3.7, 2 * kPi, 2 * kPi}));
    charts.push_back(make_chart("flat_skew", {2.0, 0.5, 1.0, 2 * kPi, 2 * kPi}));
    charts.push_back(make_chart("flat_rect", {1.0, 2.0, 3.0}));
    return charts;
}

std::vector<Chart> all_presets() {
    auto charts = flat_presets();
    charts.push_back(make_chart("sphere", {1.0, 0.15}));
    charts.push_back(make_chart("sphere", {2.0, 0.15}));
    charts.push_back(make_chart("warped", {1.0, 0.25, 0.15}));
    return charts;
}

} // namespace

TEST(MetricInverseDet, EuclideanAndTorus) {
    for (const char* name : {"flat_rect", "flat_torus"}) {
        auto chart = make_chart(name, {2 * kPi, 2 * kPi});
        const double p[2] = {1.2, 0.7};
        auto [inv, det] = metric_inverse_det(chart.metric, p);
        EXPECT_NEAR(det, 1.0, 1e-14);
        EXPECT_NEAR(inv(0, 0), 1.0, 1e-14);
        EXPECT_NEAR(inv(1, 1), 1.0, 1e-14);
        EXPECT_NEAR(inv(0, 1), 0.0, 1e-14);
    }
}

TEST(MetricInverseDet, UnitSphereEquator) {
    auto chart = make_chart("sphere", {1.0, 0.15});
    const double p[2] = {kPi / 2, 0.0};
    auto [inv, det] = metric_inverse_det(chart.metric, p);
    EXPECT_NEAR(det, 1.0, 1e-14);
    EXPECT_NEAR(inv(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(inv(1, 1), 1.0, 1e-14);
}

TEST(MetricInverseDet, InverseTimesMetricIsIdentity) {
    Rng rng(42);
    for (const auto& chart : all_presets()) {
        for (int trial = 0; trial < 100; ++trial) {
            auto p = chart.random_interior_point(rng);
            auto [inv, det] = metric_inverse_det(chart.metric, p.data());
            EXPECT_GT(det, 0.0);
            const Mat prod = inv * chart.metric.g(p.data());
            const Mat err = prod - Mat::identity(chart.dim());
            EXPECT_LT(err.max_abs(), 1e-12) << chart.spec.name;
        }
    }
}

TEST(MetricInverseDet, RejectsNonPositiveDefinite) {
    MetricField bad;
    bad.dim = 2;
    bad.g = [](const double*) {
        Mat g(2, 2);
        g(0, 0) = 1.0;
        g(1, 1) = -1.0;
        return g;
    };
    const double p[2] = {0.0, 0.0};
    EXPECT_THROW(metric_inverse_det(bad, p), NonPositiveDefinite);
}

TEST(Christoffel, FlatPresetsVanishExactly) {
    Rng rng(7);
    for (const auto& chart : flat_presets()) {
        for (int trial = 0; trial < 20; ++trial) {
            auto p = chart.random_interior_point(rng);
            auto gamma = christoffel(chart.metric, p.data());
            for (const auto& gk : gamma) EXPECT_EQ(gk.max_abs(), 0.0) << chart.spec.name;
        }
    }
}

// Closed forms for the round sphere, derived independently from
// g = diag(a^2, a^2 sin^2 t): the only nonzero symbols are
// Gamma^t_pp = -sin t cos t and Gamma^p_tp = cot t (radius drops out).
TEST(Christoffel, UnitSphereClosedForm) {
    auto chart = make_chart("sphere", {1.0, 0.15});
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        auto p = chart.random_interior_point(rng);
        const double t = p[0];
        auto gamma = christoffel(chart.metric, p.data());
        EXPECT_NEAR(gamma[0](1, 1), -std::sin(t) * std::cos(t), 1e-12);
        EXPECT_NEAR(gamma[1](0, 1), std::cos(t) / std::sin(t), 1e-12);
        EXPECT_NEAR(gamma[1](1, 0), gamma[1](0, 1), 0.0);
        EXPECT_NEAR(gamma[0](0, 0), 0.0, 1e-13);
        EXPECT_NEAR(gamma[0](0, 1), 0.0, 1e-13);
        EXPECT_NEAR(gamma[1](0, 0), 0.0, 1e-13);
        EXPECT_NEAR(gamma[1](1, 1), 0.0, 1e-13);
    }
}

TEST(Christoffel, SymmetricLowerIndices) {
    Rng rng(13);
    for (const auto& chart : all_presets()) {
        for (int trial = 0; trial < 100; ++trial) {
            auto p = chart.random_interior_point(rng);
            auto gamma = christoffel(chart.metric, p.data());
            for (const auto& gk : gamma)
                for (int i = 0; i < chart.dim(); ++i)
                    for (int j = 0; j < chart.dim(); ++j)
                        EXPECT_EQ(gk(i, j), gk(j, i));
        }
    }
}

TEST(Christoffel, ScaleInvariant) {
    // Gamma is unchanged under g -> c g; compare sphere radii 1 and 2.
    auto s1 = make_chart("sphere", {1.0, 0.15});
    auto s2 = make_chart("sphere", {2.0, 0.15});
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = s1.random_interior_point(rng);
        auto g1 = christoffel(s1.metric, p.data());
        auto g2 = christoffel(s2.metric, p.data());
        for (int k = 0; k < 2; ++k) EXPECT_LT((g1[k] - g2[k]).max_abs(), 1e-12);
    }
}

TEST(Ricci, FlatPresetsVanishExactly) {
    Rng rng(19);
    for (const auto& chart : flat_presets()) {
        auto p = chart.random_interior_point(rng);
        EXPECT_EQ(ricci(chart.metric, p.data()).max_abs(), 0.0) << chart.spec.name;
    }
}

TEST(Ricci, RoundSphereMatchesClosedForm) {
    // oracle: Ric = (n-1)/a^2 * g for the round sphere of radius a
    for (double a : {1.0, 2.0}) {
        auto chart = make_chart("sphere", {a, 0.15});
        Rng rng(23);
        for (int trial = 0; trial < 100; ++trial) {
            auto p = chart.random_interior_point(rng);
            const Mat ric = ricci(chart.metric, p.data());
            Mat expected = chart.metric.g(p.data());
            expected *= 1.0 / (a * a);
            EXPECT_LT((ric - expected).max_abs(), 1e-10) << "a=" << a;
            EXPECT_LT(ric.max_asymmetry(), 1e-13);
        }
    }
}

TEST(Ricci, WarpedProductMatchesCurvatureOracle) {
    // oracle: for g = dt^2 + w(t)^2 dp^2 the Gauss curvature is K = -w''/w
    // and Ric = K g in dimension two.
    const double a = 1.0, b = 0.25;
    auto chart = make_chart("warped", {a, b, 0.15});
    Rng rng(29);
    for (int trial = 0; trial < 50; ++trial) {
        auto p = chart.random_interior_point(rng);
        const double t = p[0];
        const double w = a + b * std::cos(t);
        const double wpp = -b * std::cos(t);
        const double K = -wpp / w;
        Mat expected = chart.metric.g(p.data());
        expected *= K;
        EXPECT_LT((ricci(chart.metric, p.data()) - expected).max_abs(), 1e-10);
    }
}

TEST(Gradient, ConstantVanishes) {
    for (const auto& chart : all_presets()) {
        auto f = AnalyticScalar::constant(chart.dim(), 4.2);
        std::vector<double> p(chart.dim(), 0.5);
        p[0] = chart.spec.ranges[0][0] + 0.4 * chart.spec.length(0);
        auto grad = gradient(chart.metric, f, p.data());
        for (double c : grad.up) EXPECT_EQ(c, 0.0);
        EXPECT_EQ(grad.norm_sq, 0.0);
    }
}

TEST(Gradient, FlatTorusSineAxis) {
    auto chart = make_chart("flat_torus", {2 * kPi, 2 * kPi});
    auto f = AnalyticScalar::sine_axis(2, 0);
    const double p[2] = {0.0, 0.0};
    auto grad = gradient(chart.metric, f, p);
    EXPECT_NEAR(grad.up[0], 1.0, 1e-14);
    EXPECT_NEAR(grad.up[1], 0.0, 1e-14);
    EXPECT_NEAR(grad.norm_sq, 1.0, 1e-14);
}

TEST(Gradient, SphereCosThetaAtEquator) {
    auto chart = make_chart("sphere", {1.0, 0.15});
    auto f = AnalyticScalar::cosine_axis(2, 0);  // cos(theta)
    const double p[2] = {kPi / 2, 0.0};
    auto grad = gradient(chart.metric, f, p);
    EXPECT_NEAR(grad.up[0], -1.0, 1e-14);
    EXPECT_NEAR(grad.up[1], 0.0, 1e-14);
    EXPECT_NEAR(grad.norm_sq, 1.0, 1e-14);
}

TEST(LaplaceBeltrami, FlatTorusEigenfunction) {
    auto chart = make_chart("flat_torus", {2 * kPi, 2 * kPi});
    auto f = AnalyticScalar::sine_axis(2, 0);
    Rng rng(31);
    for (int trial = 0; trial < 30; ++trial) {
        auto p = chart.random_interior_point(rng);
        EXPECT_NEAR(laplace_beltrami(chart.metric, f, p.data()), -std::sin(p[0]), 1e-13);
    }
}

TEST(LaplaceBeltrami, SphereEigenfunction) {
    auto chart = make_chart("sphere", {1.0, 0.15});
    auto f = AnalyticScalar::cosine_axis(2, 0);
    Rng rng(37);
    for (int trial = 0; trial < 30; ++trial) {
        auto p = chart.random_interior_point(rng);
        EXPECT_NEAR(laplace_beltrami(chart.metric, f, p.data()), -2.0 * std::cos(p[0]), 1e-12);
    }
}

TEST(LaplaceBeltrami, SkewConstantMetric) {
    auto chart = make_chart("flat_skew", {2.0, 0.5, 1.0, 2 * kPi, 2 * kPi});
    // f = sin(x + y); Lap f = -(g^11 + 2 g^12 + g^22) sin(x+y)
    AnalyticScalar::Term term;
    term.factors = {{AnalyticScalar::Factor::Kind::Cosine, 1.0, -0.5 * kPi, {}},
                    {AnalyticScalar::Factor::Kind::Cosine, 1.0, 0.0, {}}};
    AnalyticScalar::Term term2;  // sin(x+y) = sin x cos y + cos x sin y
    term2.factors = {{AnalyticScalar::Factor::Kind::Cosine, 1.0, 0.0, {}},
                     {AnalyticScalar::Factor::Kind::Cosine, 1.0, -0.5 * kPi, {}}};
    AnalyticScalar f(2, {term, term2});
    const double p[2] = {0.3, 1.1};
    auto [ginv, det] = metric_inverse_det(chart.metric, p);
    const double expected =
        -(ginv(0, 0) + 2 * ginv(0, 1) + ginv(1, 1)) * std::sin(p[0] + p[1]);
    EXPECT_NEAR(laplace_beltrami(chart.metric, f, p), expected, 1e-13);
}

TEST(LaplaceBeltrami, ScalingCovariance) {
    // replacing g by c g maps Lap_g f to (1/c) Lap_g f
    auto flat = make_chart("flat_torus", {2 * kPi, 2 * kPi});
    const double c = 3.7;
    auto scaled = make_chart("scaled_flat", {c, 2 * kPi, 2 * kPi});
    Rng rng(41);
    auto f = AnalyticScalar::random_trig(2, trig_base_freq(flat.spec), rng);
    for (int trial = 0; trial < 30; ++trial) {
        auto p = flat.random_interior_point(rng);
        const double lap_flat = laplace_beltrami(flat.metric, f, p.data());
        const double lap_scaled = laplace_beltrami(scaled.metric, f, p.data());
        EXPECT_NEAR(lap_scaled, lap_flat / c, 1e-12 * (1.0 + std::abs(lap_flat)));
    }
}

TEST(Hessian, FlatTorusSine) {
    auto chart = make_chart("flat_torus", {2 * kPi, 2 * kPi});
    auto f = AnalyticScalar::sine_axis(2, 0);
    const double p[2] = {kPi / 2, 0.0};
    const Mat h = hessian(chart.metric, f, p);
    EXPECT_NEAR(h(0, 0), -1.0, 1e-14);
    EXPECT_NEAR(h(0, 1), 0.0, 1e-14);
    EXPECT_NEAR(h(1, 1), 0.0, 1e-14);
}

TEST(Hessian, TraceIsLaplacian) {
    Rng rng(43);
    for (const auto& chart : all_presets()) {
        auto f = AnalyticScalar::random_trig(chart.dim(), trig_base_freq(chart.spec), rng);
        for (int trial = 0; trial < 30; ++trial) {
            auto p = chart.random_interior_point(rng);
            const Mat h = hessian(chart.metric, f, p.data());
            auto [ginv, det] = metric_inverse_det(chart.metric, p.data());
            double trace = 0.0;
            for (int i = 0; i < chart.dim(); ++i)
                for (int j = 0; j < chart.dim(); ++j) trace += ginv(i, j) * h(i, j);
            const double lap = laplace_beltrami(chart.metric, f, p.data());
            EXPECT_NEAR(trace, lap, 1e-10 * (1.0 + std::abs(lap))) << chart.spec.name;
        }
    }
}

TEST(Hessian, SphereCosThetaTraceCheck) {
    auto chart = make_chart("sphere", {1.0, 0.15});
    auto f = AnalyticScalar::cosine_axis(2, 0);
    const double p[2] = {kPi / 2, 0.0};
    const Mat h = hessian(chart.metric, f, p);
    // H_tt = -cos t = 0 at the equator; H_pp = sin t cos t * (-sin t) = 0 too
    EXPECT_NEAR(h(0, 0), 0.0, 1e-14);
    EXPECT_NEAR(h(1, 1), 0.0, 1e-14);
    auto [ginv, det] = metric_inverse_det(chart.metric, p);
    double trace = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) trace += ginv(i, j) * h(i, j);
    EXPECT_NEAR(trace, -2.0 * std::cos(p[0]), 1e-12);
}

TEST(Bochner, ConstantVanishes) {
    for (const auto& chart : all_presets()) {
        auto f = AnalyticScalar::constant(chart.dim(), 1.5);
        std::vector<double> p(chart.dim());
        for (int k = 0; k < chart.dim(); ++k)
            p[k] = chart.spec.ranges[k][0] + 0.37 * chart.spec.length(k);
        EXPECT_EQ(bochner_residual(chart.metric, f, p.data()), 0.0);
    }
}

TEST(Bochner, FlatTorusSineAnalytic) {
    auto chart = make_chart("flat_torus", {2 * kPi, 2 * kPi});
    auto f = AnalyticScalar::sine_axis(2, 0);
    Rng rng(47);
    for (int trial = 0; trial < 30; ++trial) {
        auto p = chart.random_interior_point(rng);
        EXPECT_NEAR(bochner_residual(chart.metric, f, p.data()), 0.0, 1e-12);
    }
}

TEST(Bochner, TenTrigFunctionsAllPresets) {
    Rng rng(53);
    for (const auto& chart : all_presets()) {
        const auto base = trig_base_freq(chart.spec);
        for (int fn = 0; fn < 10; ++fn) {
            auto f = AnalyticScalar::random_trig(chart.dim(), base, rng);
            for (int trial = 0; trial < 10; ++trial) {
                auto p = chart.random_interior_point(rng);
                EXPECT_NEAR(bochner_residual(chart.metric, f, p.data()), 0.0, 1e-8)
                    << chart.spec.name << " fn " << fn;
            }
        }
    }
}

TEST(HessianInequality, HoldsPointwise) {
    Rng rng(59);
    for (const auto& chart : all_presets()) {
        auto f = AnalyticScalar::random_trig(chart.dim(), trig_base_freq(chart.spec), rng);
        for (int trial = 0; trial < 50; ++trial) {
            auto p = chart.random_interior_point(rng);
            const auto v = hessian_inequality(chart.metric, f, p.data());
            if (v.grad_norm <= 1e-8) continue;
            EXPECT_LE(v.lhs, v.rhs + 1e-10) << chart.spec.name;
        }
    }
}

TEST(HessianInequality, OneDimensionalProfileIsEquality) {
    // f = sin x on the torus: |grad|grad f||^2 = |H_f|^2 = sin^2 x, and the
    // gradient-of-gradient is collinear with grad f.
    auto chart = make_chart("flat_torus", {2 * kPi, 2 * kPi});
    auto f = AnalyticScalar::sine_axis(2, 0);
    const double p[2] = {0.9, 2.2};
    const auto v = hessian_inequality(chart.metric, f, p);
    EXPECT_NEAR(v.lhs, sqr(std::sin(p[0])), 1e-12);
    EXPECT_NEAR(v.rhs, sqr(std::sin(p[0])), 1e-12);
    EXPECT_LT(v.collinearity_defect, 1e-6);
}

TEST(ChartSpec, RejectsBadParameters) {
    EXPECT_THROW(make_chart("sphere", {-1.0}), ConfigInvalid);
    EXPECT_THROW(make_chart("sphere", {1.0, 2.0}), ConfigInvalid);
    EXPECT_THROW(make_chart("warped", {1.0, 1.5}), ConfigInvalid);
    EXPECT_THROW(make_chart("no_such_metric", {}), ConfigInvalid);
    EXPECT_THROW(make_chart("scaled_flat", {-2.0, 1.0, 1.0}), ConfigInvalid);
}
