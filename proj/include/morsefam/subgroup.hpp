#pragma once

#include <optional>
#include <vector>

#include "morsefam/normal_form.hpp"

namespace morsefam {

// Subgroup of Z^n, stored as its canonical column-HNF basis. Canonicity
// makes equality a plain data comparison.
class Subgroup {
  public:
    Subgroup() : ambient_(0) {}

    static Subgroup from_columns(std::size_t ambient_rank, const IntMatrix& gens) {
        if (gens.rows() != ambient_rank)
            throw contract_error("Subgroup: generator rows != ambient rank");
        Subgroup s;
        s.ambient_ = ambient_rank;
        s.basis_ = hermite_column_basis(gens);
        return s;
    }

    static Subgroup full(std::size_t n) { return from_columns(n, IntMatrix::identity(n)); }

    static Subgroup trivial(std::size_t n) { return from_columns(n, IntMatrix(n, 0)); }

    std::size_t ambient_rank() const { return ambient_; }
    std::size_t rank() const { return basis_.cols(); }
    const IntMatrix& basis() const { return basis_; }

    bool operator==(const Subgroup& o) const {
        return ambient_ == o.ambient_ && basis_ == o.basis_;
    }
    bool operator!=(const Subgroup& o) const { return !(*this == o); }

    bool contains(const std::vector<Int>& v) const {
        if (v.size() != ambient_) throw contract_error("Subgroup: vector length mismatch");
        return solve(basis_, v).has_value();
    }

    bool contains(const Subgroup& o) const {
        if (o.ambient_ != ambient_) throw contract_error("Subgroup: ambient mismatch");
        return solve_matrix(basis_, o.basis_).has_value();
    }

    // Coordinates of v in the basis; contract violation if v is outside.
    std::vector<Int> coordinates(const std::vector<Int>& v) const {
        auto c = solve(basis_, v);
        if (!c) throw contract_error("Subgroup: element outside subgroup");
        return *c;
    }

  private:
    std::size_t ambient_;
    IntMatrix basis_;
};

// {x : A x = 0}; automatically saturated.
inline Subgroup kernel(const IntMatrix& A) {
    SmithForm s = smith_normal_form(A);
    std::vector<std::size_t> free_cols;
    for (std::size_t c = 0; c < A.cols(); ++c)
        if (c >= s.d.size() || s.d[c] == 0) free_cols.push_back(c);
    return Subgroup::from_columns(A.cols(), s.V.select_cols(free_cols));
}

// Column span of A.
inline Subgroup image(const IntMatrix& A) {
    return Subgroup::from_columns(A.rows(), A);
}

// {x : A x ∈ S}. Contains kernel(A).
inline Subgroup preimage(const IntMatrix& A, const Subgroup& S) {
    if (S.ambient_rank() != A.rows())
        throw contract_error("preimage: S not in codomain of A");
    // x with A x = B y for some y  <=>  (x, y) in kernel of [A | -B]
    IntMatrix stacked = IntMatrix::hcat(A, -S.basis());
    Subgroup k = kernel(stacked);
    return Subgroup::from_columns(A.cols(), k.basis().top_rows(A.cols()));
}

inline Subgroup subgroup_sum(const Subgroup& S, const Subgroup& T) {
    if (S.ambient_rank() != T.ambient_rank())
        throw contract_error("subgroup_sum: ambient mismatch");
    return Subgroup::from_columns(S.ambient_rank(), IntMatrix::hcat(S.basis(), T.basis()));
}

}  // namespace morsefam
