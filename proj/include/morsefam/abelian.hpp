#pragma once

#include <string>
#include <vector>

#include "morsefam/subgroup.hpp"

namespace morsefam {

// Finitely generated abelian group in invariant-factor form. Torsion
// entries are > 1 and form a divisibility chain; factors of 1 are dropped.
struct FgAbGroup {
    std::size_t free_rank = 0;
    std::vector<Int> torsion;

    FgAbGroup() = default;
    FgAbGroup(std::size_t fr, std::vector<Int> t) : free_rank(fr), torsion(std::move(t)) {}

    static FgAbGroup free(std::size_t r) { return FgAbGroup(r, {}); }

    bool is_trivial() const { return free_rank == 0 && torsion.empty(); }

    bool operator==(const FgAbGroup& o) const {
        return free_rank == o.free_rank && torsion == o.torsion;
    }
    bool operator!=(const FgAbGroup& o) const { return !(*this == o); }

    std::string to_string() const {
        if (is_trivial()) return "0";
        std::string s;
        auto app = [&s](const std::string& part) {
            if (!s.empty()) s += " + ";
            s += part;
        };
        if (free_rank == 1) app("Z");
        if (free_rank > 1) app("Z^" + std::to_string(free_rank));
        for (const Int& t : torsion) app("Z/" + t.str());
        return s;
    }
};

// Presentation of a quotient S/T: generator lifts live in the ambient
// lattice, orders[i] is the invariant factor of generator i (0 = free).
// Torsion generators come first in divisibility order, then free ones.
struct QuotientPresentation {
    Subgroup numerator;
    FgAbGroup group;
    IntMatrix gen_lifts;       // ambient x gens
    std::vector<Int> orders;   // per generator; 0 for free

    std::size_t gens() const { return orders.size(); }

    // Coordinates of [v] in the presentation. Pre: v ∈ numerator.
    std::vector<Int> project(const std::vector<Int>& v) const {
        std::vector<Int> c = numerator.coordinates(v);
        std::vector<Int> out(orders.size());
        for (std::size_t g = 0; g < orders.size(); ++g) {
            Int y;
            for (std::size_t k = 0; k < c.size(); ++k)
                if (proj_(g, k) != 0 && c[k] != 0) y += proj_(g, k) * c[k];
            out[g] = reduce(g, y);
        }
        return out;
    }

    Int reduce(std::size_t g, const Int& y) const {
        if (orders[g] == 0) return y;
        Int m = y % orders[g];
        if (m < 0) m += orders[g];
        return m;
    }

    bool is_zero_class(const std::vector<Int>& coords) const {
        for (std::size_t g = 0; g < coords.size(); ++g)
            if (reduce(g, coords[g]) != 0) return false;
        return true;
    }

    IntMatrix proj_;  // gens x numerator.rank(): numerator coords -> presentation coords
};

// Invariant-factor presentation of S/T with projection data. Pre: T ⊆ S.
inline QuotientPresentation quotient(const Subgroup& S, const Subgroup& T) {
    if (S.ambient_rank() != T.ambient_rank())
        throw contract_error("quotient: ambient mismatch");
    auto X = solve_matrix(S.basis(), T.basis());
    if (!X) throw contract_error("quotient: T is not contained in S");

    const std::size_t s = S.rank();
    SmithForm snf = smith_normal_form(*X);

    std::vector<Int> ord(s, Int(0));
    for (std::size_t i = 0; i < snf.d.size() && i < s; ++i) ord[i] = snf.d[i];

    std::vector<std::size_t> keep;  // generators with order != 1
    for (std::size_t i = 0; i < s; ++i)
        if (ord[i] != 1) keep.push_back(i);

    QuotientPresentation q;
    q.numerator = S;
    q.gen_lifts = (S.basis() * snf.u_inv).select_cols(keep);
    q.orders.reserve(keep.size());
    std::size_t fr = 0;
    for (std::size_t i : keep) {
        q.orders.push_back(ord[i]);
        if (ord[i] == 0) ++fr;
    }
    std::vector<Int> tors;
    for (std::size_t i : keep)
        if (ord[i] > 1) tors.push_back(ord[i]);
    q.group = FgAbGroup(fr, std::move(tors));

    // presentation coords of a numerator-coordinate vector c are (U c) at kept rows
    IntMatrix proj(keep.size(), s);
    for (std::size_t g = 0; g < keep.size(); ++g)
        for (std::size_t k = 0; k < s; ++k) proj(g, k) = snf.U(keep[g], k);
    q.proj_ = std::move(proj);
    return q;
}

// Group of Z^n / im(A), without projection bookkeeping.
inline FgAbGroup cokernel_group(const IntMatrix& A) {
    SmithForm s = smith_normal_form(A);
    std::vector<Int> tors;
    std::size_t rank_a = 0;
    for (const Int& d : s.d)
        if (d != 0) {
            ++rank_a;
            if (d > 1) tors.push_back(d);
        }
    return FgAbGroup(A.rows() - rank_a, std::move(tors));
}

// Map between two quotient presentations induced by an ambient-lattice
// matrix M (which must send numerator into numerator and denominators
// compatibly; callers guarantee this). Entry (i, j): coefficient of
// target generator i in the image of source generator j.
inline IntMatrix induced_map(const QuotientPresentation& src, const QuotientPresentation& dst,
                             const IntMatrix& M) {
    IntMatrix out(dst.gens(), src.gens());
    for (std::size_t j = 0; j < src.gens(); ++j) {
        std::vector<Int> img = M.apply(src.gen_lifts.col(j));
        std::vector<Int> coords = dst.project(img);
        for (std::size_t i = 0; i < dst.gens(); ++i) out(i, j) = coords[i];
    }
    return out;
}

// Two presented maps agree iff their difference vanishes on every generator.
inline bool presented_maps_equal(const QuotientPresentation& dst, const IntMatrix& A,
                                 const IntMatrix& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) return false;
    for (std::size_t j = 0; j < A.cols(); ++j) {
        for (std::size_t i = 0; i < A.rows(); ++i)
            if (dst.reduce(i, A(i, j) - B(i, j)) != 0) return false;
    }
    return true;
}

}  // namespace morsefam
