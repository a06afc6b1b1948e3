#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "morsefam/intmat.hpp"

namespace morsefam {

// U*A*V = diag(d) with d[k] | d[k+1], zeros trailing, d[k] >= 0.
// U, V are unimodular; u_inv, v_inv are their inverses, tracked during
// the reduction so that no matrix inversion is ever needed downstream.
struct SmithForm {
    std::vector<Int> d;
    IntMatrix U, V;
    IntMatrix u_inv, v_inv;
    std::size_t rank() const {
        std::size_t r = 0;
        while (r < d.size() && d[r] != 0) ++r;
        return r;
    }
};

namespace detail {

struct SmithOps {
    IntMatrix* U;
    IntMatrix* Uinv;
    IntMatrix* V;
    IntMatrix* Vinv;

    void row_add(IntMatrix& D, std::size_t i, std::size_t j, const Int& k) {
        D.add_row_multiple(i, j, k);
        U->add_row_multiple(i, j, k);
        Uinv->add_col_multiple(j, i, -k);
    }
    void col_add(IntMatrix& D, std::size_t i, std::size_t j, const Int& k) {
        D.add_col_multiple(i, j, k);
        V->add_col_multiple(i, j, k);
        Vinv->add_row_multiple(j, i, -k);
    }
    void row_swap(IntMatrix& D, std::size_t i, std::size_t j) {
        if (i == j) return;
        D.swap_rows(i, j);
        U->swap_rows(i, j);
        Uinv->swap_cols(i, j);
    }
    void col_swap(IntMatrix& D, std::size_t i, std::size_t j) {
        if (i == j) return;
        D.swap_cols(i, j);
        V->swap_cols(i, j);
        Vinv->swap_rows(i, j);
    }
    void row_negate(IntMatrix& D, std::size_t i) {
        D.negate_row(i);
        U->negate_row(i);
        Uinv->negate_col(i);
    }
};

// Smallest nonzero |entry| in D[t.., t..], ties broken by (row, col).
inline bool find_pivot(const IntMatrix& D, std::size_t t, std::size_t& pr, std::size_t& pc) {
    bool found = false;
    Int best;
    for (std::size_t r = t; r < D.rows(); ++r)
        for (std::size_t c = t; c < D.cols(); ++c) {
            if (D(r, c) == 0) continue;
            Int a = abs_int(D(r, c));
            if (!found || a < best) {
                found = true;
                best = a;
                pr = r;
                pc = c;
            }
        }
    return found;
}

}  // namespace detail

inline SmithForm smith_normal_form(const IntMatrix& A) {
    const std::size_t m = A.rows(), n = A.cols();
    SmithForm s;
    s.U = IntMatrix::identity(m);
    s.u_inv = IntMatrix::identity(m);
    s.V = IntMatrix::identity(n);
    s.v_inv = IntMatrix::identity(n);
    IntMatrix D = A;
    detail::SmithOps ops{&s.U, &s.u_inv, &s.V, &s.v_inv};

    std::size_t t = 0;
    while (t < m && t < n) {
        std::size_t pr, pc;
        if (!detail::find_pivot(D, t, pr, pc)) break;
        ops.row_swap(D, t, pr);
        ops.col_swap(D, t, pc);

        bool clean = false;
        while (!clean) {
            clean = true;
            for (std::size_t i = t + 1; i < m; ++i) {
                if (D(i, t) == 0) continue;
                Int q = D(i, t) / D(t, t);
                ops.row_add(D, i, t, -q);
                if (D(i, t) != 0) {  // remainder strictly smaller: promote it
                    ops.row_swap(D, t, i);
                    clean = false;
                }
            }
            if (!clean) continue;
            for (std::size_t j = t + 1; j < n; ++j) {
                if (D(t, j) == 0) continue;
                Int q = D(t, j) / D(t, t);
                ops.col_add(D, j, t, -q);
                if (D(t, j) != 0) {
                    ops.col_swap(D, t, j);
                    clean = false;
                }
            }
            if (!clean) continue;
            // pivot must divide the remaining submatrix for the chain
            for (std::size_t i = t + 1; i < m && clean; ++i)
                for (std::size_t j = t + 1; j < n && clean; ++j)
                    if (D(i, j) % D(t, t) != 0) {
                        ops.row_add(D, t, i, Int(1));
                        clean = false;
                    }
        }
        if (D(t, t) < 0) ops.row_negate(D, t);
        ++t;
    }

    s.d.resize(std::min(m, n));
    for (std::size_t i = 0; i < s.d.size(); ++i) s.d[i] = D(i, i);
    return s;
}

// One integer solution of A x = b, or nullopt when none exists.
inline std::optional<std::vector<Int>> solve(const SmithForm& s, std::size_t rows,
                                             std::size_t cols, const std::vector<Int>& b) {
    std::vector<Int> ub = s.U.apply(b);
    std::vector<Int> y(cols);
    const std::size_t k = s.d.size();
    for (std::size_t i = 0; i < rows; ++i) {
        if (i < k && s.d[i] != 0) {
            if (ub[i] % s.d[i] != 0) return std::nullopt;
            y[i] = ub[i] / s.d[i];
        } else if (ub[i] != 0) {
            return std::nullopt;
        }
    }
    return s.V.apply(y);
}

inline std::optional<std::vector<Int>> solve(const IntMatrix& A, const std::vector<Int>& b) {
    if (b.size() != A.rows()) throw contract_error("solve: rhs length mismatch");
    return solve(smith_normal_form(A), A.rows(), A.cols(), b);
}

// Columnwise solve of A X = B.
inline std::optional<IntMatrix> solve_matrix(const IntMatrix& A, const IntMatrix& B) {
    if (A.rows() != B.rows()) throw contract_error("solve_matrix: row mismatch");
    SmithForm s = smith_normal_form(A);
    IntMatrix X(A.cols(), B.cols());
    for (std::size_t c = 0; c < B.cols(); ++c) {
        auto x = solve(s, A.rows(), A.cols(), B.col(c));
        if (!x) return std::nullopt;
        X.set_col(c, *x);
    }
    return X;
}

// Row-style Hermite normal form H = U*A: echelon rows, positive pivots,
// entries above each pivot reduced into [0, pivot).
inline IntMatrix hermite_rows(IntMatrix H) {
    const std::size_t m = H.rows(), n = H.cols();
    std::size_t r = 0;
    for (std::size_t c = 0; c < n && r < m; ++c) {
        // euclidean elimination in column c, rows >= r
        while (true) {
            std::size_t piv = m;
            Int best;
            for (std::size_t i = r; i < m; ++i) {
                if (H(i, c) == 0) continue;
                Int a = abs_int(H(i, c));
                if (piv == m || a < best) {
                    piv = i;
                    best = a;
                }
            }
            if (piv == m) break;
            H.swap_rows(r, piv);
            bool done = true;
            for (std::size_t i = r + 1; i < m; ++i) {
                if (H(i, c) == 0) continue;
                Int q = H(i, c) / H(r, c);
                H.add_row_multiple(i, r, -q);
                if (H(i, c) != 0) done = false;
            }
            if (done) break;
        }
        if (H(r, c) == 0) continue;
        if (H(r, c) < 0) H.negate_row(r);
        for (std::size_t i = 0; i < r; ++i) {
            // floor division puts H(i,c) into [0, pivot)
            Int q = H(i, c) / H(r, c);
            if (H(i, c) - q * H(r, c) < 0) q -= 1;
            H.add_row_multiple(i, r, -q);
        }
        ++r;
    }
    return H;
}

// Canonical basis (column HNF, zero columns dropped) of the column span.
inline IntMatrix hermite_column_basis(const IntMatrix& A) {
    IntMatrix H = hermite_rows(A.transpose());
    std::size_t nz = 0;
    for (std::size_t r = 0; r < H.rows(); ++r) {
        bool zero = true;
        for (std::size_t c = 0; c < H.cols(); ++c)
            if (H(r, c) != 0) {
                zero = false;
                break;
            }
        if (!zero) ++nz;
    }
    return H.top_rows(nz).transpose();
}

}  // namespace morsefam
