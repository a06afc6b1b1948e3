#pragma once

#include <map>
#include <optional>
#include <tuple>
#include <utility>

#include "morsefam/complexes.hpp"

namespace morsefam {

// One page of the spectral sequence of a filtered complex. Entries carry
// explicit presentations (generator lifts are ambient chain vectors), so
// induced differentials and morphisms are honest matrices.
struct Page {
    int r = 1;
    std::map<Bidegree, QuotientPresentation> entries;   // only nontrivial groups stored
    std::map<Bidegree, IntMatrix> differentials;        // d_r: (i,j) -> (i-r, j+r-1), presentation coords

    FgAbGroup group_at(int i, int j) const {
        auto it = entries.find({i, j});
        return it == entries.end() ? FgAbGroup() : it->second.group;
    }

    bool same_groups(const Page& o) const {
        for (const auto& [k, e] : entries)
            if (e.group != o.group_at(k.first, k.second)) return false;
        for (const auto& [k, e] : o.entries)
            if (e.group != group_at(k.first, k.second)) return false;
        return true;
    }

    bool differentials_vanish() const {
        for (const auto& [k, m] : differentials) {
            auto target = entries.find({k.first - r, k.second + r - 1});
            if (target == entries.end()) continue;
            for (std::size_t c = 0; c < m.cols(); ++c)
                for (std::size_t rr = 0; rr < m.rows(); ++rr)
                    if (target->second.reduce(rr, m(rr, c)) != 0) return false;
        }
        return true;
    }

    // Rank over Q of d_r out of (i,j): torsion rows of the target are
    // dropped before computing the rank.
    std::size_t d_rank(int i, int j) const {
        auto it = differentials.find({i, j});
        if (it == differentials.end()) return 0;
        auto target = entries.find({i - r, j + r - 1});
        if (target == entries.end()) return 0;
        std::vector<std::size_t> free_rows;
        for (std::size_t g = 0; g < target->second.gens(); ++g)
            if (target->second.orders[g] == 0) free_rows.push_back(g);
        IntMatrix m(free_rows.size(), it->second.cols());
        for (std::size_t a = 0; a < free_rows.size(); ++a)
            for (std::size_t c = 0; c < it->second.cols(); ++c)
                m(a, c) = it->second(free_rows[a], c);
        return smith_normal_form(m).rank();
    }
};

namespace detail {

// Indices of degree-n generators with level <= i.
inline std::vector<std::size_t> level_indices(const FilteredComplex& f, int n, int i) {
    std::vector<std::size_t> idx;
    const auto& ls = f.levels(n);
    for (std::size_t k = 0; k < ls.size(); ++k)
        if (ls[k] <= i) idx.push_back(k);
    return idx;
}

inline Subgroup coordinate_span(std::size_t ambient, const std::vector<std::size_t>& idx) {
    IntMatrix g(ambient, idx.size());
    for (std::size_t c = 0; c < idx.size(); ++c) g(idx[c], c) = 1;
    return Subgroup::from_columns(ambient, g);
}

inline IntMatrix embed_columns(const IntMatrix& small, const std::vector<std::size_t>& idx,
                               std::size_t ambient) {
    IntMatrix out(ambient, small.cols());
    for (std::size_t c = 0; c < small.cols(); ++c)
        for (std::size_t r = 0; r < small.rows(); ++r) out(idx[r], c) = small(r, c);
    return out;
}

// Z^r_{i,j} = { x in F_i C_{i+j} : dx in F_{i-r} C_{i+j-1} } as a subgroup
// of the full chain lattice in degree i+j.
inline Subgroup approximate_cycles(const FilteredComplex& f, int i, int j, int r) {
    const int n = i + j;
    const std::size_t dim_n = f.complex().dim(n);
    if (dim_n == 0) return Subgroup::trivial(0);
    auto idx = level_indices(f, n, i);
    if (idx.empty()) return Subgroup::trivial(dim_n);
    IntMatrix d_restricted = f.complex().differential(n).select_cols(idx);
    Subgroup target = coordinate_span(f.complex().dim(n - 1), level_indices(f, n - 1, i - r));
    Subgroup pre = preimage(d_restricted, target);
    return Subgroup::from_columns(dim_n, embed_columns(pre.basis(), idx, dim_n));
}

}  // namespace detail

// E^r_{i,j} = Z^r_{i,j} / (Z^{r-1}_{i-1,j+1} + d Z^{r-1}_{i+r-1,j-r+2}),
// with d_r induced by the differential on representatives.
inline Page page(const FilteredComplex& f, int r) {
    if (r < 1) throw contract_error("page: r must be >= 1");
    Page p;
    p.r = r;
    const GradedComplex& c = f.complex();
    if (c.empty()) return p;
    const int lmin = f.min_level(), lmax = f.max_level();

    for (int i = lmin; i <= lmax; ++i)
        for (int n = c.lo(); n <= c.hi(); ++n) {
            if (c.dim(n) == 0) continue;
            const int j = n - i;
            Subgroup z = detail::approximate_cycles(f, i, j, r);
            Subgroup z_below = detail::approximate_cycles(f, i - 1, j + 1, r - 1);
            Subgroup z_above = detail::approximate_cycles(f, i + r - 1, j - r + 2, r - 1);
            Subgroup boundary = image(c.differential(n + 1) * z_above.basis());
            QuotientPresentation q = quotient(z, subgroup_sum(z_below, boundary));
            if (!q.group.is_trivial()) p.entries.emplace(Bidegree{i, j}, std::move(q));
        }

    for (const auto& [key, entry] : p.entries) {
        auto [i, j] = key;
        auto target = p.entries.find({i - r, j + r - 1});
        if (target == p.entries.end()) continue;
        const int n = i + j;
        IntMatrix d = c.differential(n);
        IntMatrix m(target->second.gens(), entry.gens());
        bool nonzero = false;
        for (std::size_t g = 0; g < entry.gens(); ++g) {
            std::vector<Int> img = d.apply(entry.gen_lifts.col(g));
            std::vector<Int> coords = target->second.project(img);
            for (std::size_t t = 0; t < coords.size(); ++t) {
                m(t, g) = coords[t];
                if (target->second.reduce(t, coords[t]) != 0) nonzero = true;
            }
        }
        if (nonzero) p.differentials.emplace(key, std::move(m));
    }
    return p;
}

// Pages are constant once r exceeds the filtration length; E^infty is the
// page at length + 1. Returns the first r with E^r = E^{r+1} = ... and
// the stable page itself.
inline std::pair<int, Page> stable_page(const FilteredComplex& f) {
    const int len = f.complex().empty() ? 0 : f.max_level() - f.min_level();
    const int r_stab = len + 1;
    Page einf = page(f, r_stab);
    int first = r_stab;
    for (int r = r_stab - 1; r >= 1; --r) {
        Page p = page(f, r);
        if (p.same_groups(einf) && p.differentials_vanish())
            first = r;
        else
            break;
    }
    return {first, std::move(einf)};
}

struct GradedMismatch {
    int i;  // filtration level
    int n;  // total degree
    FgAbGroup graded_piece;
    FgAbGroup stable_entry;
};

// F_i H_n as a subgroup-with-denominator: (Z_n ∩ F_i + B_n) / B_n.
inline FgAbGroup filtered_homology_piece(const FilteredComplex& f, int n, int i) {
    const GradedComplex& c = f.complex();
    if (c.dim(n) == 0) return FgAbGroup();
    Subgroup z_i = detail::approximate_cycles(f, i, n - i, f.max_level() - f.min_level() + 1);
    Subgroup b = image(c.differential(n + 1));
    return quotient(subgroup_sum(z_i, b), b).group;
}

// G_i H_n = (Z ∩ F_i + B) / (Z ∩ F_{i-1} + B), compared entrywise with
// the stable page. Exact match over Z required.
inline std::optional<GradedMismatch> associated_graded_check(const FilteredComplex& f) {
    const GradedComplex& c = f.complex();
    if (c.empty()) return std::nullopt;
    auto [r0, einf] = stable_page(f);
    const int deep = f.max_level() - f.min_level() + 1;
    for (int n = c.lo(); n <= c.hi(); ++n) {
        if (c.dim(n) == 0) {
            for (int i = f.min_level(); i <= f.max_level(); ++i)
                if (!einf.group_at(i, n - i).is_trivial())
                    return GradedMismatch{i, n, FgAbGroup(), einf.group_at(i, n - i)};
            continue;
        }
        Subgroup b = image(c.differential(n + 1));
        for (int i = f.min_level(); i <= f.max_level(); ++i) {
            Subgroup z_i = detail::approximate_cycles(f, i, n - i, deep);
            Subgroup z_below = detail::approximate_cycles(f, i - 1, n - i + 1, deep);
            Subgroup num = subgroup_sum(z_i, b);
            Subgroup den = subgroup_sum(z_below, b);
            FgAbGroup graded = quotient(num, den).group;
            if (graded != einf.group_at(i, n - i))
                return GradedMismatch{i, n, graded, einf.group_at(i, n - i)};
        }
    }
    return std::nullopt;
}

// Morphism of spectral sequences induced by a filtered chain map:
// maps[(r, i, j)] is Phi_r at (i,j) in page-presentation coordinates.
struct SpectralMorphism {
    int r_max = 1;
    std::map<std::tuple<int, int, int>, IntMatrix> maps;

    IntMatrix at(int r, int i, int j, std::size_t rows, std::size_t cols) const {
        auto it = maps.find({r, i, j});
        return it == maps.end() ? IntMatrix(rows, cols) : it->second;
    }
};

// Pre: phi verified as a filtered chain map (d' phi = phi d, levels kept).
inline SpectralMorphism induced_morphism(const FilteredComplex& src, const FilteredComplex& dst,
                                         const ChainMap& phi, int r_max) {
    SpectralMorphism out;
    out.r_max = r_max;
    for (int r = 1; r <= r_max; ++r) {
        Page ps = page(src, r), pd = page(dst, r);
        for (const auto& [key, entry] : ps.entries) {
            auto [i, j] = key;
            auto target = pd.entries.find(key);
            if (target == pd.entries.end()) continue;
            IntMatrix f = phi.component(src.complex(), dst.complex(), i + j);
            IntMatrix m(target->second.gens(), entry.gens());
            for (std::size_t g = 0; g < entry.gens(); ++g) {
                std::vector<Int> img = f.apply(entry.gen_lifts.col(g));
                std::vector<Int> coords = target->second.project(img);
                for (std::size_t t = 0; t < coords.size(); ++t) m(t, g) = coords[t];
            }
            out.maps.emplace(std::make_tuple(r, i, j), std::move(m));
        }
    }
    return out;
}

// Is Phi_r an isomorphism at every bidegree of page r?
inline bool morphism_is_iso_at(const SpectralMorphism& phi, const Page& src_page,
                               const Page& dst_page) {
    if (!src_page.same_groups(dst_page)) return false;
    for (const auto& [key, entry] : src_page.entries) {
        auto [i, j] = key;
        auto t = dst_page.entries.find(key);
        if (t == dst_page.entries.end()) return false;
        IntMatrix m = phi.at(src_page.r, i, j, t->second.gens(), entry.gens());
        PresentedModule s(entry.gens(), [&] {
            IntMatrix rels(entry.gens(), 0);
            std::vector<Int> tors;
            for (std::size_t g = 0; g < entry.gens(); ++g)
                if (entry.orders[g] != 0) tors.push_back(entry.orders[g]);
            IntMatrix r2(entry.gens(), tors.size());
            std::size_t c = 0;
            for (std::size_t g = 0; g < entry.gens(); ++g)
                if (entry.orders[g] != 0) r2(g, c++) = entry.orders[g];
            return r2;
        }());
        PresentedModule d(t->second.gens(), [&] {
            std::size_t cnt = 0;
            for (std::size_t g = 0; g < t->second.gens(); ++g)
                if (t->second.orders[g] != 0) ++cnt;
            IntMatrix r2(t->second.gens(), cnt);
            std::size_t c = 0;
            for (std::size_t g = 0; g < t->second.gens(); ++g)
                if (t->second.orders[g] != 0) r2(g, c++) = t->second.orders[g];
            return r2;
        }());
        if (!presented_map_is_iso(s, d, m)) return false;
    }
    return true;
}

}  // namespace morsefam
