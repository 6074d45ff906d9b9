#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "riemstab/common.hpp"
#include "riemstab/densemat.hpp"

namespace riemstab {

// Reaction term H = (H_i) of the system -Lap_g u_i = H_i(u), with its
// Jacobian DH(i,j) = d H_i / d u_j. Presets that derive from a potential
// (H = -grad W) also expose W so flows can track the energy.
class Nonlinearity {
public:
    using HFn = std::function<void(const double*, double*)>;
    using DHFn = std::function<void(const double*, Mat&)>;
    using WFn = std::function<double(const double*)>;

    Nonlinearity() = default;
    Nonlinearity(std::string name, int m, HFn h, DHFn dh, std::optional<WFn> w = {},
                 std::vector<double> params = {})
        : name_(std::move(name)), m_(m), h_(std::move(h)), dh_(std::move(dh)),
          w_(std::move(w)), params_(std::move(params)) {}

    const std::string& name() const { return name_; }
    int components() const { return m_; }
    const std::vector<double>& params() const { return params_; }

    void eval(const double* u, double* out) const { h_(u, out); }
    std::vector<double> eval(const std::vector<double>& u) const {
        std::vector<double> out(m_);
        h_(u.data(), out.data());
        return out;
    }
    void jacobian(const double* u, Mat& out) const {
        if (out.rows() != m_) out = Mat(m_, m_);
        dh_(u, out);
    }
    Mat jacobian(const std::vector<double>& u) const {
        Mat out(m_, m_);
        dh_(u.data(), out);
        return out;
    }

    bool has_potential() const { return w_.has_value(); }
    double potential(const double* u) const { return (*w_)(u); }

    // box of states used by structural checks and the Jacobian consistency test
    std::array<double, 2> state_box() const { return state_box_; }
    void set_state_box(double lo, double hi) { state_box_ = {lo, hi}; }

private:
    std::string name_;
    int m_ = 0;
    HFn h_;
    DHFn dh_;
    std::optional<WFn> w_;
    std::vector<double> params_;
    std::array<double, 2> state_box_ = {-2.0, 2.0};
};

// DH must match central finite differences of H. Run at construction so a
// preset with a wrong derivative never leaves the registry.
inline void verify_jacobian(const Nonlinearity& nl, int samples = 100,
                            std::uint64_t seed = 0x1ACBULL) {
    Rng rng(seed);
    const int m = nl.components();
    const auto box = nl.state_box();
    std::vector<double> u(m), up(m), um(m), hp(m), hm(m);
    Mat dh(m, m);
    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < m; ++i) u[i] = rng.uniform(box[0], box[1]);
        nl.jacobian(u.data(), dh);
        double scale = 1.0 + dh.max_abs();
        for (int j = 0; j < m; ++j) {
            const double h = 1e-6 * (1.0 + std::abs(u[j]));
            up = u;
            um = u;
            up[j] += h;
            um[j] -= h;
            nl.eval(up.data(), hp.data());
            nl.eval(um.data(), hm.data());
            for (int i = 0; i < m; ++i) {
                const double fd = (hp[i] - hm[i]) / (2.0 * h);
                if (std::abs(fd - dh(i, j)) > 1e-6 * scale)
                    throw ConfigInvalid("nonlinearity '" + nl.name() +
                                        "': Jacobian entry (" + std::to_string(i) + "," +
                                        std::to_string(j) + ") disagrees with finite differences");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------
//   zero                 [m]        H == 0 (default m = 1)
//   allen_cahn           []         H(u) = u - u^3, W = (1-u^2)^2/4
//   bose                 []         H1 = -u v^2, H2 = -v u^2, W = u^2 v^2 / 2
//   gradient_double_well [beta]     H = -grad W, W = sum (1-u_i^2)^2/4 + beta u1^2 u2^2
//   linear_symmetric     [A row-major]  H = A u with A symmetric
//   linear               [A row-major]  H = A u, no symmetry requirement
// ---------------------------------------------------------------------------

struct NonlinearityPresetDoc {
    std::string name;
    std::string params;
    std::string summary;
};

inline std::vector<NonlinearityPresetDoc> nonlinearity_preset_docs() {
    return {
        {"zero", "[m = 1]", "H == 0 with m components"},
        {"allen_cahn", "[]", "scalar H(u) = u - u^3"},
        {"bose", "[]", "two-component H1 = -u v^2, H2 = -v u^2"},
        {"gradient_double_well", "[beta = 0.3]",
         "H = -grad W for W = sum_i (1-u_i^2)^2/4 + beta u1^2 u2^2"},
        {"linear_symmetric", "[a11, a12, ..., ann] (row-major, symmetric)", "H(u) = A u"},
        {"linear", "[a11, a12, ..., ann] (row-major)", "H(u) = A u, A arbitrary"},
    };
}

inline Nonlinearity make_nonlinearity(const std::string& preset, std::vector<double> params) {
    Nonlinearity nl;
    if (preset == "zero") {
        const int m = params.empty() ? 1 : static_cast<int>(params[0]);
        if (m < 1) throw ConfigInvalid("zero preset needs m >= 1");
        nl = Nonlinearity(
            preset, m, [m](const double*, double* h) { for (int i = 0; i < m; ++i) h[i] = 0.0; },
            [m](const double*, Mat& dh) { dh = Mat(m, m); },
            [](const double*) { return 0.0; }, params);
    } else if (preset == "allen_cahn") {
        nl = Nonlinearity(
            preset, 1, [](const double* u, double* h) { h[0] = u[0] - u[0] * u[0] * u[0]; },
            [](const double* u, Mat& dh) { dh(0, 0) = 1.0 - 3.0 * u[0] * u[0]; },
            [](const double* u) { return sqr(1.0 - u[0] * u[0]) / 4.0; }, params);
    } else if (preset == "bose") {
        nl = Nonlinearity(
            preset, 2,
            [](const double* u, double* h) {
                h[0] = -u[0] * u[1] * u[1];
                h[1] = -u[1] * u[0] * u[0];
            },
            [](const double* u, Mat& dh) {
                dh(0, 0) = -u[1] * u[1];
                dh(0, 1) = -2.0 * u[0] * u[1];
                dh(1, 0) = -2.0 * u[0] * u[1];
                dh(1, 1) = -u[0] * u[0];
            },
            [](const double* u) { return 0.5 * sqr(u[0]) * sqr(u[1]); }, params);
    } else if (preset == "gradient_double_well") {
        const double beta = params.empty() ? 0.3 : params[0];
        nl = Nonlinearity(
            preset, 2,
            [beta](const double* u, double* h) {
                h[0] = u[0] * (1.0 - u[0] * u[0]) - 2.0 * beta * u[0] * u[1] * u[1];
                h[1] = u[1] * (1.0 - u[1] * u[1]) - 2.0 * beta * u[1] * u[0] * u[0];
            },
            [beta](const double* u, Mat& dh) {
                dh(0, 0) = 1.0 - 3.0 * u[0] * u[0] - 2.0 * beta * u[1] * u[1];
                dh(0, 1) = -4.0 * beta * u[0] * u[1];
                dh(1, 0) = -4.0 * beta * u[0] * u[1];
                dh(1, 1) = 1.0 - 3.0 * u[1] * u[1] - 2.0 * beta * u[0] * u[0];
            },
            [beta](const double* u) {
                return sqr(1.0 - sqr(u[0])) / 4.0 + sqr(1.0 - sqr(u[1])) / 4.0 +
                       beta * sqr(u[0]) * sqr(u[1]);
            },
            params.empty() ? std::vector<double>{beta} : params);
    } else if (preset == "linear_symmetric" || preset == "linear") {
        const int m = static_cast<int>(std::lround(std::sqrt(double(params.size()))));
        if (m < 1 || m * m != static_cast<int>(params.size()))
            throw ConfigInvalid(preset + " expects a square row-major matrix");
        Mat a(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) a(i, j) = params[i * m + j];
        if (preset == "linear_symmetric" && a.max_asymmetry() > 0.0)
            throw ConfigInvalid("linear_symmetric matrix is not symmetric");
        const bool sym = preset == "linear_symmetric";
        std::optional<Nonlinearity::WFn> w;
        if (sym)
            w = [a, m](const double* u) {
                double s = 0.0;
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < m; ++j) s += u[i] * a(i, j) * u[j];
                return -0.5 * s;
            };
        nl = Nonlinearity(
            preset, m,
            [a, m](const double* u, double* h) {
                for (int i = 0; i < m; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < m; ++j) s += a(i, j) * u[j];
                    h[i] = s;
                }
            },
            [a](const double*, Mat& dh) { dh = a; }, w, params);
    } else {
        throw ConfigInvalid("unknown nonlinearity preset '" + preset + "'");
    }
    verify_jacobian(nl);
    return nl;
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

struct SymmetryReport {
    bool symmetric = false;
    double max_asymmetry = 0.0;
};

inline SymmetryReport check_symmetric(const Nonlinearity& nl, int samples = 1000,
                                      double tol = 1e-10, std::uint64_t seed = 0x5157ULL) {
    Rng rng(seed);
    const auto box = nl.state_box();
    const int m = nl.components();
    std::vector<double> u(m);
    Mat dh(m, m);
    SymmetryReport rep;
    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < m; ++i) u[i] = rng.uniform(box[0], box[1]);
        nl.jacobian(u.data(), dh);
        rep.max_asymmetry = std::max(rep.max_asymmetry, dh.max_asymmetry());
    }
    rep.symmetric = rep.max_asymmetry <= tol;
    return rep;
}

enum class CouplingMode { OffDiagonal, AllPairs };

struct CouplingPairReport {
    int i = 0, j = 0;
    double min_product = 0.0;   // min over states of dH_i/du_j * dH_j/du_i
    bool flagged = false;       // min <= 0: the strict coupling condition fails
};

// Sign condition d_i H_j * d_j H_i > 0 sampled over the state box. The
// default skips the diagonal (at i = j the literal reading squares d_i H_i
// and flags every sign change); AllPairs is the literal reading.
inline std::vector<CouplingPairReport> check_coupling(const Nonlinearity& nl,
                                                      int samples = 1000,
                                                      CouplingMode mode = CouplingMode::OffDiagonal,
                                                      std::uint64_t seed = 0xC0uLL) {
    Rng rng(seed);
    const auto box = nl.state_box();
    const int m = nl.components();
    std::vector<CouplingPairReport> out;
    for (int i = 0; i < m; ++i)
        for (int j = (mode == CouplingMode::AllPairs ? i : i + 1); j < m; ++j) {
            if (mode == CouplingMode::OffDiagonal && i == j) continue;
            out.push_back({i, j, std::numeric_limits<double>::infinity(), false});
        }
    std::vector<double> u(m);
    Mat dh(m, m);
    for (int s = 0; s < samples; ++s) {
        for (int k = 0; k < m; ++k) u[k] = rng.uniform(box[0], box[1]);
        nl.jacobian(u.data(), dh);
        for (auto& pair : out)
            pair.min_product = std::min(pair.min_product, dh(pair.i, pair.j) * dh(pair.j, pair.i));
    }
    for (auto& pair : out) pair.flagged = !(pair.min_product > 0.0);
    return out;
}

} // namespace riemstab
