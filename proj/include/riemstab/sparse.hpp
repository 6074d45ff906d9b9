#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "riemstab/common.hpp"

namespace riemstab {

struct Triplet {
    std::int64_t r = 0, c = 0;
    double v = 0.0;
};

// CSR matrix; assembled once from (possibly duplicated) triplets and applied
// many times. Rows and columns are grid-node (or block) indices.
class SparseOperator {
public:
    SparseOperator() = default;

    static SparseOperator from_triplets(std::int64_t rows, std::int64_t cols,
                                        std::vector<Triplet> t) {
        std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
            return a.r != b.r ? a.r < b.r : a.c < b.c;
        });
        SparseOperator m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.rowptr_.assign(rows + 1, 0);
        for (std::size_t i = 0; i < t.size();) {
            std::size_t j = i + 1;
            double v = t[i].v;
            while (j < t.size() && t[j].r == t[i].r && t[j].c == t[i].c) v += t[j++].v;
            m.col_.push_back(t[i].c);
            m.val_.push_back(v);
            ++m.rowptr_[t[i].r + 1];
            i = j;
        }
        for (std::int64_t r = 0; r < rows; ++r) m.rowptr_[r + 1] += m.rowptr_[r];
        return m;
    }

    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    std::size_t nnz() const { return val_.size(); }

    void apply(const double* x, double* y) const {
        for (std::int64_t r = 0; r < rows_; ++r) {
            double s = 0.0;
            for (std::int64_t k = rowptr_[r]; k < rowptr_[r + 1]; ++k)
                s += val_[k] * x[col_[k]];
            y[r] = s;
        }
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(rows_, 0.0);
        apply(x.data(), y.data());
        return y;
    }

    std::vector<double> diagonal() const {
        std::vector<double> d(rows_, 0.0);
        for (std::int64_t r = 0; r < rows_; ++r)
            for (std::int64_t k = rowptr_[r]; k < rowptr_[r + 1]; ++k)
                if (col_[k] == r) d[r] += val_[k];
        return d;
    }

    double inf_norm() const {
        double m = 0.0;
        for (std::int64_t r = 0; r < rows_; ++r) {
            double s = 0.0;
            for (std::int64_t k = rowptr_[r]; k < rowptr_[r + 1]; ++k) s += std::abs(val_[k]);
            m = std::max(m, s);
        }
        return m;
    }

    template <class F>
    void for_each(F&& f) const {
        for (std::int64_t r = 0; r < rows_; ++r)
            for (std::int64_t k = rowptr_[r]; k < rowptr_[r + 1]; ++k) f(r, col_[k], val_[k]);
    }

    std::vector<Triplet> to_triplets() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for_each([&](std::int64_t r, std::int64_t c, double v) { t.push_back({r, c, v}); });
        return t;
    }

    // max_{r,c} |A(r,c) - A(c,r)| for a square matrix
    double max_asymmetry() const {
        auto key_sorted = [](const SparseOperator& op) {
            auto t = op.to_triplets();
            std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
                return a.r != b.r ? a.r < b.r : a.c < b.c;
            });
            return t;
        };
        const auto a = key_sorted(*this);
        const auto b = key_sorted(transposed());
        double m = 0.0;
        std::size_t ka = 0, kb = 0;
        while (ka < a.size() || kb < b.size()) {
            const bool a_first =
                kb == b.size() ||
                (ka < a.size() && (a[ka].r != b[kb].r ? a[ka].r < b[kb].r : a[ka].c < b[kb].c));
            if (ka < a.size() && kb < b.size() && a[ka].r == b[kb].r && a[ka].c == b[kb].c) {
                m = std::max(m, std::abs(a[ka++].v - b[kb++].v));
            } else if (a_first) {
                m = std::max(m, std::abs(a[ka++].v));
            } else {
                m = std::max(m, std::abs(b[kb++].v));
            }
        }
        return m;
    }

    // Reorder the entries inside each row; apply() folds left-to-right, so a
    // translation-covariant order (e.g. by stencil-relative offset) makes the
    // matvec bitwise equivariant under grid translations.
    template <class Less>
    void sort_each_row(Less&& less) {
        std::vector<std::pair<std::int64_t, double>> row;
        for (std::int64_t r = 0; r < rows_; ++r) {
            row.clear();
            for (std::int64_t k = rowptr_[r]; k < rowptr_[r + 1]; ++k)
                row.push_back({col_[k], val_[k]});
            std::sort(row.begin(), row.end(),
                      [&](const auto& a, const auto& b) { return less(r, a.first, b.first); });
            for (std::int64_t k = rowptr_[r]; k < rowptr_[r + 1]; ++k) {
                col_[k] = row[k - rowptr_[r]].first;
                val_[k] = row[k - rowptr_[r]].second;
            }
        }
    }

    SparseOperator transposed() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for_each([&](std::int64_t r, std::int64_t c, double v) { t.push_back({c, r, v}); });
        return from_triplets(cols_, rows_, std::move(t));
    }

private:
    std::int64_t rows_ = 0, cols_ = 0;
    std::vector<std::int64_t> rowptr_;
    std::vector<std::int64_t> col_;
    std::vector<double> val_;
};

} // namespace riemstab
