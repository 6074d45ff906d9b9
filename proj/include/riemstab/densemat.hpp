#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "riemstab/common.hpp"

namespace riemstab {

// Small dense row-major matrix; sized for metric/Jacobian blocks (n <= ~8),
// not for grid-sized systems.
class Mat {
public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    const std::vector<double>& data() const { return a_; }

    Mat transposed() const {
        Mat t(cols_, rows_);
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Mat operator*(const Mat& other) const {
        Mat out(rows_, other.cols_);
        for (int i = 0; i < rows_; ++i)
            for (int k = 0; k < cols_; ++k) {
                const double aik = (*this)(i, k);
                if (aik == 0.0) continue;
                for (int j = 0; j < other.cols_; ++j) out(i, j) += aik * other(k, j);
            }
        return out;
    }

    Mat& operator+=(const Mat& other) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += other.a_[i];
        return *this;
    }
    Mat& operator-=(const Mat& other) {
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= other.a_[i];
        return *this;
    }
    Mat& operator*=(double s) {
        for (double& x : a_) x *= s;
        return *this;
    }
    friend Mat operator*(double s, Mat m) { return m *= s; }
    friend Mat operator+(Mat a, const Mat& b) { return a += b; }
    friend Mat operator-(Mat a, const Mat& b) { return a -= b; }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(rows_, 0.0);
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    double max_abs() const {
        double m = 0.0;
        for (double x : a_) m = std::max(m, std::abs(x));
        return m;
    }

    double max_asymmetry() const {
        double m = 0.0;
        for (int i = 0; i < rows_; ++i)
            for (int j = i + 1; j < cols_; ++j)
                m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
        return m;
    }

    double frobenius_sq() const {
        double s = 0.0;
        for (double x : a_) s += x * x;
        return s;
    }

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> a_;
};

// Cholesky factor of a symmetric positive definite matrix. Returns false
// (factor left partial) if a non-positive pivot shows up, which doubles as
// the positive-definiteness test for metric matrices.
inline bool cholesky(const Mat& a, Mat& lower) {
    const int n = a.rows();
    lower = Mat(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
            if (i == j) {
                if (s <= 0.0) return false;
                lower(i, i) = std::sqrt(s);
            } else {
                lower(i, j) = s / lower(j, j);
            }
        }
    }
    return true;
}

inline std::vector<double> cholesky_solve(const Mat& lower, std::span<const double> b) {
    const int n = lower.rows();
    std::vector<double> y(n), x(n);
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= lower(i, k) * y[k];
        y[i] = s / lower(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= lower(k, i) * x[k];
        x[i] = s / lower(i, i);
    }
    return x;
}

// Inverse and determinant of an SPD matrix via Cholesky.
// Throws NonPositiveDefinite when the matrix is not SPD.
inline void spd_inverse_det(const Mat& a, Mat& inverse, double& det,
                            const char* context = "matrix") {
    Mat lower;
    if (!cholesky(a, lower))
        throw NonPositiveDefinite(std::string(context) + " is not positive definite");
    const int n = a.rows();
    det = 1.0;
    for (int i = 0; i < n; ++i) det *= lower(i, i) * lower(i, i);
    inverse = Mat(n, n);
    std::vector<double> e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        auto col = cholesky_solve(lower, e);
        for (int i = 0; i < n; ++i) inverse(i, j) = col[i];
        e[j] = 0.0;
    }
    // enforce exact symmetry of the inverse
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (inverse(i, j) + inverse(j, i));
            inverse(i, j) = inverse(j, i) = v;
        }
}

// Eigen-decomposition of a small symmetric matrix by the cyclic Jacobi
// method. Eigenvalues returned ascending; vecs columns are eigenvectors.
inline void sym_eigen(const Mat& a, std::vector<double>& values, Mat& vecs) {
    const int n = a.rows();
    Mat s = a;
    vecs = Mat::identity(n);
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += sqr(s(p, q));
        if (off < 1e-30 * (1.0 + s.frobenius_sq())) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (s(p, q) == 0.0) continue;
                const double theta = (s(q, q) - s(p, p)) / (2.0 * s(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                for (int k = 0; k < n; ++k) {
                    const double skp = s(k, p), skq = s(k, q);
                    s(k, p) = c * skp - sn * skq;
                    s(k, q) = sn * skp + c * skq;
                }
                for (int k = 0; k < n; ++k) {
                    const double spk = s(p, k), sqk = s(q, k);
                    s(p, k) = c * spk - sn * sqk;
                    s(q, k) = sn * spk + c * sqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = vecs(k, p), vkq = vecs(k, q);
                    vecs(k, p) = c * vkp - sn * vkq;
                    vecs(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    values.resize(n);
    for (int i = 0; i < n; ++i) values[i] = s(i, i);
    // sort ascending, permuting eigenvector columns along
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return values[i] < values[j]; });
    std::vector<double> sorted_vals(n);
    Mat sorted_vecs(n, n);
    for (int j = 0; j < n; ++j) {
        sorted_vals[j] = values[order[j]];
        for (int i = 0; i < n; ++i) sorted_vecs(i, j) = vecs(i, order[j]);
    }
    values = std::move(sorted_vals);
    vecs = std::move(sorted_vecs);
}

inline double sym_eigen_min(const Mat& a) {
    std::vector<double> vals;
    Mat vecs;
    sym_eigen(a, vals, vecs);
    return vals.front();
}

inline double sym_eigen_max(const Mat& a) {
    std::vector<double> vals;
    Mat vecs;
    sym_eigen(a, vals, vecs);
    return vals.back();
}

} // namespace riemstab
