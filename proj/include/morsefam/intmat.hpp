#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "morsefam/core.hpp"

namespace morsefam {

// Dense matrix over Z with arbitrary-precision entries, row-major.
class IntMatrix {
  public:
    IntMatrix() : rows_(0), cols_(0) {}

    IntMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), entries_(rows * cols) {}

    IntMatrix(std::size_t rows, std::size_t cols, std::vector<Int> entries)
        : rows_(rows), cols_(cols), entries_(std::move(entries)) {
        if (entries_.size() != rows_ * cols_)
            throw contract_error("IntMatrix: entry count != rows*cols");
    }

    IntMatrix(std::initializer_list<std::initializer_list<long long>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        entries_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_)
                throw contract_error("IntMatrix: ragged initializer");
            for (long long v : row) entries_.emplace_back(v);
        }
    }

    static IntMatrix identity(std::size_t n) {
        IntMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    static IntMatrix zero(std::size_t rows, std::size_t cols) {
        return IntMatrix(rows, cols);
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Int& operator()(std::size_t r, std::size_t c) { return entries_[r * cols_ + c]; }
    const Int& operator()(std::size_t r, std::size_t c) const { return entries_[r * cols_ + c]; }

    const std::vector<Int>& entries() const { return entries_; }

    bool operator==(const IntMatrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && entries_ == o.entries_;
    }
    bool operator!=(const IntMatrix& o) const { return !(*this == o); }

    bool is_zero() const {
        for (const Int& e : entries_)
            if (e != 0) return false;
        return true;
    }

    IntMatrix transpose() const {
        IntMatrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    IntMatrix operator*(const IntMatrix& o) const {
        if (cols_ != o.rows_) throw contract_error("IntMatrix: product shape mismatch");
        IntMatrix p(rows_, o.cols_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t k = 0; k < cols_; ++k) {
                const Int& a = (*this)(r, k);
                if (a == 0) continue;
                for (std::size_t c = 0; c < o.cols_; ++c) {
                    const Int& b = o(k, c);
                    if (b != 0) p(r, c) += a * b;
                }
            }
        return p;
    }

    IntMatrix operator+(const IntMatrix& o) const {
        check_same_shape(o);
        IntMatrix s = *this;
        for (std::size_t i = 0; i < entries_.size(); ++i) s.entries_[i] += o.entries_[i];
        return s;
    }

    IntMatrix operator-(const IntMatrix& o) const {
        check_same_shape(o);
        IntMatrix s = *this;
        for (std::size_t i = 0; i < entries_.size(); ++i) s.entries_[i] -= o.entries_[i];
        return s;
    }

    IntMatrix operator-() const {
        IntMatrix s = *this;
        for (Int& e : s.entries_) e = -e;
        return s;
    }

    IntMatrix scaled(const Int& k) const {
        IntMatrix s = *this;
        for (Int& e : s.entries_) e *= k;
        return s;
    }

    std::vector<Int> apply(const std::vector<Int>& v) const {
        if (v.size() != cols_) throw contract_error("IntMatrix: apply shape mismatch");
        std::vector<Int> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c)
                if ((*this)(r, c) != 0 && v[c] != 0) out[r] += (*this)(r, c) * v[c];
        return out;
    }

    std::vector<Int> col(std::size_t c) const {
        std::vector<Int> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }

    void set_col(std::size_t c, const std::vector<Int>& v) {
        for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
    }

    // Horizontal concatenation [A | B].
    static IntMatrix hcat(const IntMatrix& a, const IntMatrix& b) {
        if (a.rows() != b.rows()) throw contract_error("IntMatrix: hcat shape mismatch");
        IntMatrix m(a.rows(), a.cols() + b.cols());
        for (std::size_t r = 0; r < a.rows(); ++r) {
            for (std::size_t c = 0; c < a.cols(); ++c) m(r, c) = a(r, c);
            for (std::size_t c = 0; c < b.cols(); ++c) m(r, a.cols() + c) = b(r, c);
        }
        return m;
    }

    IntMatrix select_cols(const std::vector<std::size_t>& idx) const {
        IntMatrix m(rows_, idx.size());
        for (std::size_t j = 0; j < idx.size(); ++j)
            for (std::size_t r = 0; r < rows_; ++r) m(r, j) = (*this)(r, idx[j]);
        return m;
    }

    IntMatrix top_rows(std::size_t k) const {
        IntMatrix m(k, cols_);
        for (std::size_t r = 0; r < k; ++r)
            for (std::size_t c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c);
        return m;
    }

    void swap_rows(std::size_t i, std::size_t j) {
        for (std::size_t c = 0; c < cols_; ++c) std::swap((*this)(i, c), (*this)(j, c));
    }
    void swap_cols(std::size_t i, std::size_t j) {
        for (std::size_t r = 0; r < rows_; ++r) std::swap((*this)(r, i), (*this)(r, j));
    }

    // row_i += k * row_j
    void add_row_multiple(std::size_t i, std::size_t j, const Int& k) {
        if (k == 0) return;
        for (std::size_t c = 0; c < cols_; ++c) (*this)(i, c) += k * (*this)(j, c);
    }
    // col_i += k * col_j
    void add_col_multiple(std::size_t i, std::size_t j, const Int& k) {
        if (k == 0) return;
        for (std::size_t r = 0; r < rows_; ++r) (*this)(r, i) += k * (*this)(r, j);
    }
    void negate_row(std::size_t i) {
        for (std::size_t c = 0; c < cols_; ++c) (*this)(i, c) = -(*this)(i, c);
    }
    void negate_col(std::size_t i) {
        for (std::size_t r = 0; r < rows_; ++r) (*this)(r, i) = -(*this)(r, i);
    }

  private:
    void check_same_shape(const IntMatrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw contract_error("IntMatrix: shape mismatch");
    }

    std::size_t rows_, cols_;
    std::vector<Int> entries_;
};

// Fraction-free determinant (Bareiss). Used by tests to certify unimodularity.
inline Int determinant(IntMatrix a) {
    if (a.rows() != a.cols()) throw contract_error("determinant: matrix not square");
    const std::size_t n = a.rows();
    if (n == 0) return 1;
    Int prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a(k, k) == 0) {
            std::size_t piv = k + 1;
            while (piv < n && a(piv, k) == 0) ++piv;
            if (piv == n) return 0;
            a.swap_rows(k, piv);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j) {
                Int num = a(i, j) * a(k, k) - a(i, k) * a(k, j);
                a(i, j) = num / prev;  // divides exactly (Bareiss)
            }
        prev = a(k, k);
    }
    return sign > 0 ? a(n - 1, n - 1) : Int(-a(n - 1, n - 1));
}

}  // namespace morsefam
