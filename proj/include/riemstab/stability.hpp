#pragma once

#include <string>
#include <vector>

#include "riemstab/krylov.hpp"
#include "riemstab/operators.hpp"
#include "riemstab/solve.hpp"
#include "riemstab/testfun.hpp"

namespace riemstab {

// Linearization of -Lap u_i = H_i(u) at a state u: the block operator
// A = diag(-L) - (DH_ij(u(p)))_ij acting on m stacked nodal fields. The
// eigenproblem A zeta = lambda zeta is the linearized system of the
// stability definition.
struct LinearizedOperator {
    GridPtr grid;
    SparseOperator L;              // scalar Laplacian block
    int m = 0;
    std::size_t n = 0;
    std::vector<double> dh_table;  // [(i*m+j)*n + p] = dH_i/du_j at u(p)
    std::vector<double> weights;   // dV weights repeated per component

    void apply(const double* x, double* y) const {
        apply_linearized(L, m, n, dh_table, x, y);
    }
    LinOp as_linop() const {
        return [this](const double* x, double* y) { apply(x, y); };
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(static_cast<std::size_t>(m) * n);
        const auto ld = L.diagonal();
        for (int c = 0; c < m; ++c) {
            const double* tab = dh_table.data() + (static_cast<std::size_t>(c) * m + c) * n;
            for (std::size_t p = 0; p < n; ++p) d[c * n + p] = -ld[p] - tab[p];
        }
        return d;
    }

    double inf_norm() const {
        // Gershgorin-style bound: |L| row sums plus coupling magnitudes
        double coupling = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (int i = 0; i < m; ++i) {
                double row = 0.0;
                for (int j = 0; j < m; ++j)
                    row += std::abs(dh_table[(static_cast<std::size_t>(i) * m + j) * n + p]);
                coupling = std::max(coupling, row);
            }
        }
        return L.inf_norm() + coupling;
    }

    // exact weighted self-adjointness defect: W A - (W A)^T
    double self_adjoint_defect() const {
        std::vector<Triplet> wl;
        L.for_each([&](std::int64_t r, std::int64_t c, double v) {
            wl.push_back({r, c, v * grid->weights()[r]});
        });
        const double block_defect =
            SparseOperator::from_triplets(n, n, std::move(wl)).max_asymmetry();
        double coupling_defect = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j)
                    coupling_defect = std::max(
                        coupling_defect,
                        grid->weights()[p] *
                            std::abs(dh_table[(static_cast<std::size_t>(i) * m + j) * n + p] -
                                     dh_table[(static_cast<std::size_t>(j) * m + i) * n + p]));
        return std::max(block_defect, coupling_defect);
    }

    // strict lower bound of the spectrum: -L is W-positive-semidefinite, so
    // mu_1 >= min_p lambda_min(-DH(u(p)))
    double spectral_lower_bound() const {
        double lb = std::numeric_limits<double>::infinity();
        Mat v(m, m);
        for (std::size_t p = 0; p < n; ++p) {
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    v(i, j) = -0.5 * (dh_table[(static_cast<std::size_t>(i) * m + j) * n + p] +
                                      dh_table[(static_cast<std::size_t>(j) * m + i) * n + p]);
            lb = std::min(lb, sym_eigen_min(v));
        }
        return lb;
    }
};

inline LinearizedOperator assemble_linearized(const SparseOperator& L, const Nonlinearity& nl,
                                              const SolutionState& state) {
    LinearizedOperator A;
    A.grid = state.grid();
    A.L = L;
    A.m = state.components();
    A.n = state.nodes();
    A.dh_table = jacobian_table(nl, state);
    A.weights.resize(static_cast<std::size_t>(A.m) * A.n);
    for (int c = 0; c < A.m; ++c)
        std::copy(A.grid->weights().begin(), A.grid->weights().end(),
                  A.weights.begin() + c * A.n);
    return A;
}

struct SpectrumReport {
    double mu1 = 0.0;
    std::vector<DiscreteScalarField> eigenvector;  // m components, sup-norm 1
    int iterations = 0;
    double residual = 0.0;
};

// Smallest eigenpair of the linearized operator by shift-and-invert Lanczos,
// with the shift placed strictly below the coupling-derived spectral bound.
inline SpectrumReport principal_eigenpair(const LinearizedOperator& A,
                                          const EigenOptions& opt_in = {}) {
    const double defect = A.self_adjoint_defect();
    const double scale = A.inf_norm();
    if (defect > 1e-10 * std::max(1.0, scale))
        throw NotSelfAdjoint("linearized operator defect " + std::to_string(defect) +
                             " exceeds tolerance; the spectral route needs a symmetric system");

    const double lb = A.spectral_lower_bound();
    const double sigma = lb - std::max(0.5, 1e-3 * (scale - lb));
    auto sdiag = A.diagonal();
    for (auto& d : sdiag) d -= sigma;
    EigenOptions opt = opt_in;
    const auto res = smallest_eigen_shift_invert(A.as_linop(), A.weights,
                                                 static_cast<std::size_t>(A.m) * A.n, sigma,
                                                 sdiag, opt);
    SpectrumReport report;
    report.mu1 = res.value;
    report.iterations = res.iterations;
    report.residual = res.residual;
    // normalize to sup-norm 1 with the largest-magnitude entry positive
    double big = 0.0;
    for (double v : res.vector)
        if (std::abs(v) > std::abs(big)) big = v;
    const double rescale = big != 0.0 ? 1.0 / big : 1.0;
    report.eigenvector.assign(A.m, DiscreteScalarField(A.grid));
    for (int c = 0; c < A.m; ++c)
        for (std::size_t p = 0; p < A.n; ++p)
            report.eigenvector[c].v[p] = res.vector[c * A.n + p] * rescale;
    return report;
}

// ---------------------------------------------------------------------------
// Classification per the stability definition: nonnegative principal
// eigenvalue plus the sign-constancy and coupling-sign conditions on the
// eigenvector taken as the witness (zeta, lambda = max(mu1, 0)).
// ---------------------------------------------------------------------------

struct SignReport {
    int component = 0;
    int sign = 0;                 // +1 / -1 / 0 (component below floor everywhere)
    bool constant = true;
    std::size_t nodes_above_floor = 0;
};

enum class PairStatus { Pass, Fail, Degenerate };

struct PairReport {
    int i = 0, j = 0;
    PairStatus status = PairStatus::Degenerate;
    double min_value = 0.0;       // min over admissible nodes of dH_i/du_j zeta_i zeta_j
    std::size_t admissible_nodes = 0;
};

struct StabilityCertificate {
    std::vector<DiscreteScalarField> zeta;
    double lambda = 0.0;
    double residual_sup = 0.0;
    std::vector<SignReport> sign_reports;
    std::vector<PairReport> pair_reports;          // off-diagonal reading (gates)
    std::vector<PairReport> pair_reports_literal;  // all-pairs reading (reported only)
};

enum class StabilityVerdict { Stable, Unstable, Indeterminate };

struct StabilityClassification {
    StabilityVerdict verdict = StabilityVerdict::Indeterminate;
    double mu1 = 0.0;
    double tol = 0.0;
    StabilityCertificate certificate;
    std::string detail;
};

inline double certificate_residual(const LinearizedOperator& A,
                                   const std::vector<DiscreteScalarField>& zeta, double lambda) {
    std::vector<double> x(static_cast<std::size_t>(A.m) * A.n), y(x.size());
    for (int c = 0; c < A.m; ++c)
        std::copy(zeta[c].v.begin(), zeta[c].v.end(), x.begin() + c * A.n);
    A.apply(x.data(), y.data());
    double sup = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) sup = std::max(sup, std::abs(y[k] - lambda * x[k]));
    return sup;
}

inline StabilityClassification classify_stability(const SparseOperator& L, const Nonlinearity& nl,
                                                  const SolutionState& state, double tol = -1.0,
                                                  const EigenOptions& eig_opt = {}) {
    const auto A = assemble_linearized(L, nl, state);
    StabilityClassification out;
    out.tol = tol > 0.0 ? tol : 1e-7 * A.inf_norm();

    const auto spectrum = principal_eigenpair(A, eig_opt);
    out.mu1 = spectrum.mu1;
    if (spectrum.mu1 < -out.tol) {
        out.verdict = StabilityVerdict::Unstable;
        out.detail = "principal eigenvalue below -tol";
        return out;
    }

    auto& cert = out.certificate;
    cert.zeta = spectrum.eigenvector;
    cert.lambda = std::max(spectrum.mu1, 0.0);
    cert.residual_sup = certificate_residual(A, cert.zeta, cert.lambda);

    // sign constancy per component above the relative floor; a component
    // whose sup-norm is numerically zero against the eigenvector's global
    // scale (below the eigensolver residual) counts as the zero function
    bool signs_ok = true;
    double global_sup = 0.0;
    for (int c = 0; c < A.m; ++c) global_sup = std::max(global_sup, cert.zeta[c].sup_norm());
    const double null_floor = 1e-7 * global_sup;
    std::vector<double> floors(A.m);
    for (int c = 0; c < A.m; ++c) {
        SignReport rep;
        rep.component = c;
        const double comp_sup = cert.zeta[c].sup_norm();
        if (comp_sup <= null_floor) {
            rep.sign = 0;
            rep.constant = true;
            floors[c] = global_sup;  // excludes the component from pair scans
            cert.sign_reports.push_back(rep);
            continue;
        }
        const double floor = 1e-8 * comp_sup;
        floors[c] = floor;
        std::size_t pos = 0, neg = 0;
        for (double v : cert.zeta[c].v) {
            if (v > floor) ++pos;
            else if (v < -floor) ++neg;
        }
        rep.nodes_above_floor = pos + neg;
        rep.constant = pos == 0 || neg == 0;
        rep.sign = pos + neg == 0 ? 0 : (pos >= neg ? +1 : -1);
        signs_ok &= rep.constant;
        cert.sign_reports.push_back(rep);
    }

    // coupling-sign condition dH_i/du_j zeta_i zeta_j > 0 on admissible nodes
    double dh_scale = 0.0;
    for (double v : A.dh_table) dh_scale = std::max(dh_scale, std::abs(v));
    const double dh_floor = 1e-12 * std::max(1.0, dh_scale);
    auto pair_scan = [&](bool include_diagonal) {
        std::vector<PairReport> reports;
        for (int i = 0; i < A.m; ++i)
            for (int j = include_diagonal ? i : i + 1; j < A.m; ++j) {
                if (!include_diagonal && i == j) continue;
                PairReport rep;
                rep.i = i;
                rep.j = j;
                rep.min_value = std::numeric_limits<double>::infinity();
                for (std::size_t p = 0; p < A.n; ++p) {
                    if (std::abs(cert.zeta[i].v[p]) <= floors[i]) continue;
                    if (std::abs(cert.zeta[j].v[p]) <= floors[j]) continue;
                    const double dh =
                        A.dh_table[(static_cast<std::size_t>(i) * A.m + j) * A.n + p];
                    if (std::abs(dh) <= dh_floor) continue;
                    ++rep.admissible_nodes;
                    rep.min_value = std::min(rep.min_value,
                                             dh * cert.zeta[i].v[p] * cert.zeta[j].v[p]);
                }
                if (rep.admissible_nodes == 0) {
                    rep.status = PairStatus::Degenerate;
                    rep.min_value = 0.0;
                } else {
                    rep.status = rep.min_value > 0.0 ? PairStatus::Pass : PairStatus::Fail;
                }
                reports.push_back(rep);
            }
        return reports;
    };
    cert.pair_reports = pair_scan(false);
    cert.pair_reports_literal = pair_scan(true);

    bool pairs_ok = true;
    for (const auto& rep : cert.pair_reports) pairs_ok &= rep.status != PairStatus::Fail;

    if (signs_ok && pairs_ok) {
        out.verdict = StabilityVerdict::Stable;
        out.detail = "principal eigenpair passes sign and coupling checks";
    } else {
        out.verdict = StabilityVerdict::Indeterminate;
        out.detail = signs_ok ? "coupling-sign condition fails on the eigenvector"
                              : "eigenvector component changes sign";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inequality checks. Both return one margin row per test function; a margin
// is RHS - LHS, so nonnegative (up to discretization slack) when the paper's
// inequality holds.
// ---------------------------------------------------------------------------

struct MarginRow {
    std::string family;
    int index = 0;
    double lhs = 0.0;
    double lhs_literal = 0.0;  // stability check only: |d_i H_i| diagonal
    double rhs = 0.0;
    double margin = 0.0;
    double margin_literal = 0.0;
};

struct MarginReport {
    std::vector<MarginRow> rows;
    double min_margin = std::numeric_limits<double>::infinity();
    double min_margin_literal = std::numeric_limits<double>::infinity();
    double max_rhs = 0.0;
};

namespace detail {

inline const char* family_name(TestFunctionFamily::Kind k) {
    return k == TestFunctionFamily::Kind::TrigMix ? "trig-mix" : "random-bump";
}

// off-diagonal products must be nonnegative on the orbit or the square roots
// in the inequalities are undefined
inline void require_coupling_products(const LinearizedOperator& A) {
    double tiny = 0.0;
    for (double v : A.dh_table) tiny = std::max(tiny, std::abs(v));
    tiny = 1e-14 * std::max(1.0, tiny * tiny);
    for (int i = 0; i < A.m; ++i)
        for (int j = i + 1; j < A.m; ++j)
            for (std::size_t p = 0; p < A.n; ++p) {
                const double prod =
                    A.dh_table[(static_cast<std::size_t>(i) * A.m + j) * A.n + p] *
                    A.dh_table[(static_cast<std::size_t>(j) * A.m + i) * A.n + p];
                if (prod < -tiny)
                    throw NegativeCouplingProduct(
                        "dH_" + std::to_string(i) + "/du_" + std::to_string(j) + " * dH_" +
                        std::to_string(j) + "/du_" + std::to_string(i) +
                        " < 0 on the solution orbit; the inequality's square root is undefined");
            }
}

} // namespace detail

struct InequalityOptions {
    bool require_stable = true;
    double classify_tol = -1.0;
    EigenOptions eigen;
};

// Lemma-style stability inequality: for each phi,
//   sum_ij int sqrt(dH_i/du_j dH_j/du_i) phi_i phi_j dV <= sum_i int |grad phi_i|^2 dV.
// The diagonal uses signed d_i H_i (the proof's chain); the literal |d_i H_i|
// variant is reported in a second column.
class StabilityInequalityContext {
public:
    StabilityInequalityContext(const SparseOperator& L, const Nonlinearity& nl,
                               const SolutionState& state)
        : A_(assemble_linearized(L, nl, state)) {
        detail::require_coupling_products(A_);
    }

    const LinearizedOperator& linop() const { return A_; }

    MarginRow row_for(const std::vector<DiscreteScalarField>& phi) const {
        const int m = A_.m;
        const std::size_t n = A_.n;
        const GridPtr& grid = A_.grid;
        MarginRow row;
        for (int i = 0; i < m; ++i) {
            row.rhs += integrate(grad_norm_sq(phi[i]));
            DiscreteScalarField diag_signed(grid), diag_literal(grid);
            const double* tab = A_.dh_table.data() + (static_cast<std::size_t>(i) * m + i) * n;
            for (std::size_t p = 0; p < n; ++p) {
                const double phi2 = sqr(phi[i].v[p]);
                diag_signed.v[p] = tab[p] * phi2;
                diag_literal.v[p] = std::abs(tab[p]) * phi2;
            }
            row.lhs += integrate(diag_signed);
            row.lhs_literal += integrate(diag_literal);
            // off-diagonal sqrt terms (each unordered pair twice)
            for (int j = i + 1; j < m; ++j) {
                DiscreteScalarField cross(grid);
                const double* tij =
                    A_.dh_table.data() + (static_cast<std::size_t>(i) * m + j) * n;
                const double* tji =
                    A_.dh_table.data() + (static_cast<std::size_t>(j) * m + i) * n;
                for (std::size_t p = 0; p < n; ++p)
                    cross.v[p] = 2.0 * std::sqrt(std::max(tij[p] * tji[p], 0.0)) *
                                 phi[i].v[p] * phi[j].v[p];
                const double c = integrate(cross);
                row.lhs += c;
                row.lhs_literal += c;
            }
        }
        row.margin = row.rhs - row.lhs;
        row.margin_literal = row.rhs - row.lhs_literal;
        return row;
    }

private:
    LinearizedOperator A_;
};

inline MarginReport stability_inequality_check(const SparseOperator& L, const Nonlinearity& nl,
                                               const SolutionState& state,
                                               const std::vector<TestFunctionFamily>& families,
                                               const InequalityOptions& opt = {}) {
    const StabilityInequalityContext ctx(L, nl, state);
    if (opt.require_stable) {
        const auto cls = classify_stability(L, nl, state, opt.classify_tol, opt.eigen);
        if (cls.verdict != StabilityVerdict::Stable)
            throw Error("stability_inequality_check: state is not classified Stable");
    }
    MarginReport report;
    for (const auto& fam : families) {
        for (int idx = 0; idx < fam.count(); ++idx) {
            MarginRow row = ctx.row_for(fam.member(state.grid(), idx));
            row.family = detail::family_name(fam.kind());
            row.index = idx;
            report.min_margin = std::min(report.min_margin, row.margin);
            report.min_margin_literal = std::min(report.min_margin_literal, row.margin_literal);
            report.max_rhs = std::max(report.max_rhs, row.rhs);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

// Weighted Poincare inequality: for each eta,
//   sum_i int (Ric(grad u_i, grad u_i) + |H_{u_i}|^2 - |grad|grad u_i||^2) eta_i^2
//   + sum_{i != j} int (sqrt(dH products) |grad u_i||grad u_j| eta_i eta_j
//                        - dH_i/du_j grad u_i . grad u_j eta_i^2)
//   <= sum_i int |grad u_i|^2 |grad eta_i|^2.
class PoincareContext {
public:
    PoincareContext(const SparseOperator& L, const Nonlinearity& nl, const SolutionState& state)
        : A_(assemble_linearized(L, nl, state)) {
        detail::require_coupling_products(A_);
        const int m = A_.m;
        const std::size_t n = A_.n;
        const GridPtr& grid = A_.grid;
        const auto tables = geometry_tables(*grid);
        std::vector<std::vector<DiscreteScalarField>> parts(m);
        grad_sq_.resize(m);
        weight_P_.resize(m);
        std::vector<DiscreteScalarField> grad_abs(m);
        for (int i = 0; i < m; ++i) {
            parts[i] = covariant_partials(state.u[i]);
            grad_sq_[i] = grad_norm_sq(state.u[i]);
            grad_abs[i] = DiscreteScalarField(grid);
            for (std::size_t p = 0; p < n; ++p)
                grad_abs[i].v[p] = std::sqrt(std::max(grad_sq_[i].v[p], 0.0));
            const auto ric = ricci_quadratic_field(state.u[i], tables);
            const auto hsq = hessian_norm_sq_field(state.u[i], tables);
            const auto gg = grad_norm_sq(grad_abs[i]);
            weight_P_[i] = DiscreteScalarField(grid);
            for (std::size_t p = 0; p < n; ++p)
                weight_P_[i].v[p] = ric.v[p] + hsq.v[p] - gg.v[p];
        }
        S_.assign(m, std::vector<DiscreteScalarField>());
        C_.assign(m, std::vector<DiscreteScalarField>());
        for (int i = 0; i < m; ++i) {
            S_[i].assign(m, DiscreteScalarField(grid));
            C_[i].assign(m, DiscreteScalarField(grid));
            for (int j = 0; j < m; ++j) {
                if (j == i) continue;
                const double* tij =
                    A_.dh_table.data() + (static_cast<std::size_t>(i) * m + j) * n;
                const double* tji =
                    A_.dh_table.data() + (static_cast<std::size_t>(j) * m + i) * n;
                const auto dot_ij = grad_inner(parts[i], parts[j]);
                for (std::size_t p = 0; p < n; ++p) {
                    S_[i][j].v[p] = std::sqrt(std::max(tij[p] * tji[p], 0.0)) *
                                    grad_abs[i].v[p] * grad_abs[j].v[p];
                    C_[i][j].v[p] = tij[p] * dot_ij.v[p];
                }
            }
        }
    }

    const LinearizedOperator& linop() const { return A_; }

    MarginRow row_for(const std::vector<DiscreteScalarField>& eta) const {
        const int m = A_.m;
        const std::size_t n = A_.n;
        const GridPtr& grid = A_.grid;
        MarginRow row;
        DiscreteScalarField lhs_field(grid), rhs_field(grid);
        for (int i = 0; i < m; ++i) {
            const auto eta_grad = grad_norm_sq(eta[i]);
            for (std::size_t p = 0; p < n; ++p) {
                const double e2 = sqr(eta[i].v[p]);
                lhs_field.v[p] += weight_P_[i].v[p] * e2;
                rhs_field.v[p] += grad_sq_[i].v[p] * eta_grad.v[p];
            }
            for (int j = 0; j < m; ++j) {
                if (j == i) continue;
                for (std::size_t p = 0; p < n; ++p)
                    lhs_field.v[p] += S_[i][j].v[p] * eta[i].v[p] * eta[j].v[p] -
                                      C_[i][j].v[p] * sqr(eta[i].v[p]);
            }
        }
        row.lhs = row.lhs_literal = integrate(lhs_field);
        row.rhs = integrate(rhs_field);
        row.margin = row.margin_literal = row.rhs - row.lhs;
        return row;
    }

private:
    LinearizedOperator A_;
    std::vector<DiscreteScalarField> grad_sq_, weight_P_;
    std::vector<std::vector<DiscreteScalarField>> S_, C_;
};

inline MarginReport poincare_check(const SparseOperator& L, const Nonlinearity& nl,
                                   const SolutionState& state,
                                   const std::vector<TestFunctionFamily>& families,
                                   const InequalityOptions& opt = {}) {
    const PoincareContext ctx(L, nl, state);
    if (opt.require_stable) {
        const auto cls = classify_stability(L, nl, state, opt.classify_tol, opt.eigen);
        if (cls.verdict != StabilityVerdict::Stable)
            throw Error("poincare_check: state is not classified Stable");
    }
    MarginReport report;
    for (const auto& fam : families) {
        for (int idx = 0; idx < fam.count(); ++idx) {
            MarginRow row = ctx.row_for(fam.member(state.grid(), idx));
            row.family = detail::family_name(fam.kind());
            row.index = idx;
            report.min_margin = std::min(report.min_margin, row.margin);
            report.min_margin_literal = std::min(report.min_margin_literal, row.margin_literal);
            report.max_rhs = std::max(report.max_rhs, row.rhs);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

} // namespace riemstab
