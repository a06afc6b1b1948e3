#pragma once

#include "morsefam/abelian.hpp"

namespace morsefam {

// Abelian group presented as Z^gens / im(rels). The invariant-factor
// groups used as local-coefficient stalks have diagonal rels.
struct PresentedModule {
    std::size_t gens = 0;
    IntMatrix rels;  // gens x (#relations)

    PresentedModule() : rels(0, 0) {}
    PresentedModule(std::size_t g, IntMatrix r) : gens(g), rels(std::move(r)) {
        if (rels.rows() != gens) throw contract_error("PresentedModule: relation shape");
    }

    static PresentedModule free(std::size_t g) { return PresentedModule(g, IntMatrix(g, 0)); }

    static PresentedModule from_group(const FgAbGroup& g) {
        std::size_t n = g.torsion.size() + g.free_rank;
        IntMatrix r(n, g.torsion.size());
        for (std::size_t i = 0; i < g.torsion.size(); ++i) r(i, i) = g.torsion[i];
        return PresentedModule(n, std::move(r));
    }

    FgAbGroup group() const { return cokernel_group(rels.rows() ? rels : IntMatrix(gens, 0)); }

    Subgroup relation_span() const { return image(pad_rels()); }

    IntMatrix pad_rels() const { return rels.cols() ? rels : IntMatrix(gens, 0); }
};

// f (on generators) descends to a map of presented modules iff it maps
// relations into relations.
inline bool presented_map_well_defined(const PresentedModule& src, const PresentedModule& dst,
                                       const IntMatrix& f) {
    if (f.rows() != dst.gens || f.cols() != src.gens) return false;
    if (src.rels.cols() == 0) return true;
    return image(dst.pad_rels()).contains(image(f * src.rels));
}

inline bool presented_map_is_iso(const PresentedModule& src, const PresentedModule& dst,
                                 const IntMatrix& f) {
    if (!presented_map_well_defined(src, dst, f)) return false;
    // surjective: im f + rels = everything
    Subgroup surj = subgroup_sum(image(f), image(dst.pad_rels()));
    if (surj != Subgroup::full(dst.gens)) return false;
    // injective: f(x) ∈ rels_dst implies x ∈ rels_src
    Subgroup ker_lift = preimage(f, image(dst.pad_rels()));
    return image(src.pad_rels()).contains(ker_lift);
}

// Homology at the middle of  M_in --f_in--> M_mid --f_out--> M_out,
// computed as a quotient of sublattices of Z^{mid.gens}. The resulting
// presentation's ambient coordinates are generator coordinates of M_mid.
inline QuotientPresentation presented_homology_at(const PresentedModule& in_mod,
                                                  const IntMatrix& f_in,
                                                  const PresentedModule& mid,
                                                  const IntMatrix& f_out,
                                                  const PresentedModule& out_mod) {
    Subgroup cycles = mid.gens == 0
                          ? Subgroup::trivial(0)
                          : preimage(f_out.rows() == out_mod.gens && f_out.cols() == mid.gens
                                         ? f_out
                                         : IntMatrix(out_mod.gens, mid.gens),
                                     image(out_mod.pad_rels()));
    IntMatrix fin = (f_in.rows() == mid.gens && f_in.cols() == in_mod.gens)
                        ? f_in
                        : IntMatrix(mid.gens, in_mod.gens);
    Subgroup boundaries = subgroup_sum(image(fin), image(mid.pad_rels()));
    return quotient(cycles, boundaries);
}

}  // namespace morsefam
