#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "morsefam/morse.hpp"
#include "morsefam/spectral.hpp"

namespace morsefam {

// A delta_k block: a single matrix on whole fiber chain groups, nonzero
// only between fiber degrees j -> j + k - 1. Rows are indexed by the
// critical points of the target fiber in listed order, columns by the
// source fiber.
struct FamilyBlock {
    int k = 1;
    std::string from, to;
    IntMatrix matrix;
    bool operator==(const FamilyBlock& o) const {
        return k == o.k && from == o.from && to == o.to && matrix == o.matrix;
    }
};

// Base Morse data, fiberwise Morse data at the base critical points, and
// the delta_k blocks. This is the whole combinatorial input of the
// Morse-on-base construction.
struct FamilyDescriptor {
    std::string name;
    MorseData base;
    int dim_base = 1;
    int fiber_dim = 1;
    std::map<std::string, MorseData> fibers;
    std::vector<FamilyBlock> blocks;
    bool oriented_base = true;
    bool oriented_fibers = true;

    bool operator==(const FamilyDescriptor& o) const {
        return base == o.base && dim_base == o.dim_base && fiber_dim == o.fiber_dim &&
               fibers == o.fibers && blocks == o.blocks && oriented_base == o.oriented_base &&
               oriented_fibers == o.oriented_fibers;
    }

    const MorseData& fiber_at(const std::string& x) const {
        auto it = fibers.find(x);
        if (it == fibers.end())
            throw data_error("FamilyDescriptor: no fiber data at base point " + x);
        return it->second;
    }

    void validate() const {
        base.validate();
        for (const auto& p : base.points) fiber_at(p.label).validate();
        std::set<std::pair<std::string, std::string>> flow_pairs;
        for (const auto& f : base.flows) flow_pairs.insert({f.from, f.to});
        for (const auto& b : blocks) {
            if (b.k < 1)
                throw data_error("FamilyDescriptor: delta_0 is derived from fiber data, "
                                 "explicit k=0 blocks are not accepted");
            const auto& x = base.point(b.from);
            const auto& y = base.point(b.to);
            if (x.index - y.index != b.k)
                throw data_error("FamilyDescriptor: block " + b.from + "->" + b.to +
                                 " has k=" + std::to_string(b.k) + " but index drop " +
                                 std::to_string(x.index - y.index));
            if (b.k == 1 && !flow_pairs.count({b.from, b.to}))
                throw data_error("FamilyDescriptor: delta_1 block " + b.from + "->" + b.to +
                                 " is not supported on a base flow line");
            const MorseData& fx = fiber_at(b.from);
            const MorseData& fy = fiber_at(b.to);
            if (b.matrix.rows() != fy.points.size() || b.matrix.cols() != fx.points.size())
                throw data_error("FamilyDescriptor: block " + b.from + "->" + b.to +
                                 " has wrong shape");
            for (std::size_t r = 0; r < b.matrix.rows(); ++r)
                for (std::size_t c = 0; c < b.matrix.cols(); ++c)
                    if (b.matrix(r, c) != 0 &&
                        fy.points[r].index != fx.points[c].index + b.k - 1)
                        throw data_error("FamilyDescriptor: block " + b.from + "->" + b.to +
                                         " entry violates the bidegree of delta_" +
                                         std::to_string(b.k));
        }
    }
};

// Assembled filtered complex with the (x, p) generator bookkeeping.
struct FamilyComplex {
    FilteredComplex filtered;
    // (base label, fiber label) -> (total degree, position in that degree)
    std::map<std::pair<std::string, std::string>, std::pair<int, std::size_t>> positions;
    std::map<int, std::vector<std::pair<std::string, std::string>>> generators;
};

namespace detail {

inline std::string pair_label(const std::string& x, const std::string& p) {
    return "(" + x + "," + p + ")";
}

}  // namespace detail

// Build the bigraded complex: generators (x, p), level = index(x),
// delta_0 = (-1)^{index(x)} (fiber differential), higher delta_k from the
// blocks. Rejects the data when delta^2 != 0, naming a generator pair.
inline FamilyComplex assemble(const FamilyDescriptor& d) {
    d.validate();
    FamilyComplex out;
    std::map<int, std::vector<std::string>> labels;
    std::map<int, std::vector<int>> levels;
    for (const auto& x : d.base.points) {
        for (const auto& p : d.fiber_at(x.label).points) {
            int n = x.index + p.index;
            out.positions[{x.label, p.label}] = {n, labels[n].size()};
            out.generators[n].push_back({x.label, p.label});
            labels[n].push_back(detail::pair_label(x.label, p.label));
            levels[n].push_back(x.index);
        }
    }

    auto fiber_pos = [&](const MorseData& f, const std::string& p) {
        for (std::size_t i = 0; i < f.points.size(); ++i)
            if (f.points[i].label == p) return i;
        throw contract_error("assemble: unknown fiber point " + p);
    };

    std::map<int, IntMatrix> diffs;
    int lo = labels.begin()->first, hi = labels.rbegin()->first;
    for (int n = lo + 1; n <= hi; ++n) {
        if (!labels.count(n)) continue;
        IntMatrix dn(labels.count(n - 1) ? labels[n - 1].size() : 0, labels[n].size());
        // delta_0: fiberwise, with the cube-convention sign (-1)^{index(x)}
        for (const auto& x : d.base.points) {
            const MorseData& f = d.fiber_at(x.label);
            int sgn = (x.index % 2 == 0) ? 1 : -1;
            for (const auto& fl : f.flows) {
                const auto& src = out.positions.at({x.label, fl.from});
                const auto& dst = out.positions.at({x.label, fl.to});
                if (src.first != n) continue;
                dn(dst.second, src.second) += Int(sgn) * fl.count;
            }
        }
        // delta_k from the blocks
        for (const auto& b : d.blocks) {
            const MorseData& fx = d.fiber_at(b.from);
            const MorseData& fy = d.fiber_at(b.to);
            for (std::size_t c = 0; c < b.matrix.cols(); ++c) {
                const auto& src = out.positions.at({b.from, fx.points[c].label});
                if (src.first != n) continue;
                for (std::size_t r = 0; r < b.matrix.rows(); ++r) {
                    if (b.matrix(r, c) == 0) continue;
                    const auto& dst = out.positions.at({b.to, fy.points[r].label});
                    dn(dst.second, src.second) += b.matrix(r, c);
                }
            }
        }
        if (!dn.is_zero()) diffs[n] = std::move(dn);
    }

    // locate an offending pair on failure, for the report
    GradedComplex complex;
    try {
        complex = GradedComplex::build(labels, diffs);
    } catch (const data_error&) {
        for (int n = lo + 2; n <= hi; ++n) {
            if (!diffs.count(n) || !diffs.count(n - 1)) continue;
            IntMatrix dd = diffs[n - 1] * diffs[n];
            for (std::size_t c = 0; c < dd.cols(); ++c)
                for (std::size_t r = 0; r < dd.rows(); ++r)
                    if (dd(r, c) != 0)
                        throw data_error("assemble: delta^2 != 0 from " + labels[n][c] +
                                         " to " + labels[n - 2][r]);
        }
        throw;
    }
    out.filtered = FilteredComplex::build(std::move(complex), std::move(levels));
    return out;
}

// Family Morse homology with its induced filtration: total groups, the
// subgroup chain F_i HF_n, and the graded pieces.
struct FilteredHomology {
    std::map<int, FgAbGroup> total;
    std::map<Bidegree, FgAbGroup> filtered;  // (level i, degree n) -> F_i HF_n
    std::map<Bidegree, FgAbGroup> graded;    // (level i, degree n) -> G_i HF_n
};

inline FilteredHomology family_homology(const FamilyComplex& fc) {
    FilteredHomology out;
    const FilteredComplex& f = fc.filtered;
    const GradedComplex& c = f.complex();
    out.total = homology_groups(c);
    const int deep = f.max_level() - f.min_level() + 1;
    for (int n = c.lo(); n <= c.hi(); ++n) {
        if (c.dim(n) == 0) continue;
        Subgroup b = image(c.differential(n + 1));
        for (int i = f.min_level(); i <= f.max_level(); ++i) {
            Subgroup z_i = detail::approximate_cycles(f, i, n - i, deep);
            Subgroup z_lo = detail::approximate_cycles(f, i - 1, n - i + 1, deep);
            FgAbGroup fi = quotient(subgroup_sum(z_i, b), b).group;
            FgAbGroup gi = quotient(subgroup_sum(z_i, b), subgroup_sum(z_lo, b)).group;
            if (!fi.is_trivial()) out.filtered[{i, n}] = fi;
            if (!gi.is_trivial()) out.graded[{i, n}] = gi;
        }
    }
    return out;
}

inline std::vector<Page> family_pages(const FamilyComplex& fc) {
    std::vector<Page> pages;
    auto [r0, einf] = stable_page(fc.filtered);
    const int len = fc.filtered.max_level() - fc.filtered.min_level();
    for (int r = 2; r <= std::max(2, len + 1); ++r) pages.push_back(page(fc.filtered, r));
    return pages;
}

// The local-coefficient data read off from a descriptor: stalks are the
// fiber Morse homologies, the coefficient maps are induced by the
// delta_1 blocks on homology.
inline CoefficientComplex descriptor_coefficients(const FamilyDescriptor& d) {
    CoefficientComplex cc;
    std::map<std::string, std::map<int, QuotientPresentation>> stalk_pres;
    for (const auto& x : d.base.points)
        stalk_pres[x.label] = homology(morse_complex(d.fiber_at(x.label)));

    std::map<int, std::vector<std::string>> strata;
    for (const auto& p : d.base.points) strata[p.index].push_back(p.label);

    std::set<int> degrees;
    for (const auto& [x, h] : stalk_pres)
        for (const auto& [j, q] : h)
            if (!q.group.is_trivial()) degrees.insert(j);

    auto gens_of = [&](const std::string& x, int j) -> std::size_t {
        auto it = stalk_pres[x].find(j);
        return it == stalk_pres[x].end() ? 0 : it->second.gens();
    };

    for (int j : degrees) {
        for (const auto& [i, xs] : strata) {
            std::vector<std::pair<std::size_t, Int>> diag;
            std::size_t offset = 0;
            for (const auto& x : xs) {
                auto it = stalk_pres[x].find(j);
                if (it != stalk_pres[x].end())
                    for (std::size_t g = 0; g < it->second.gens(); ++g)
                        if (it->second.orders[g] != 0)
                            diag.push_back({offset + g, it->second.orders[g]});
                offset += gens_of(x, j);
            }
            if (offset == 0) continue;
            IntMatrix rels(offset, diag.size());
            for (std::size_t c = 0; c < diag.size(); ++c) rels(diag[c].first, c) = diag[c].second;
            cc.terms[{i, j}] = PresentedModule(offset, std::move(rels));
        }
        // coefficient maps: (delta_1)_* blockwise
        for (const auto& [i, xs] : strata) {
            auto below = strata.find(i - 1);
            if (below == strata.end()) continue;
            std::size_t rows = cc.term(i - 1, j).gens, cols = cc.term(i, j).gens;
            if (rows == 0 || cols == 0) continue;
            IntMatrix big(rows, cols);
            bool nonzero = false;
            std::size_t coff = 0;
            for (const auto& x : xs) {
                std::size_t xg = gens_of(x, j);
                std::size_t roff = 0;
                for (const auto& y : below->second) {
                    std::size_t yg = gens_of(y, j);
                    if (xg && yg) {
                        // net delta_1 block x -> y on fiber chains
                        const MorseData& fx = d.fiber_at(x);
                        const MorseData& fy = d.fiber_at(y);
                        IntMatrix net(fy.points.size(), fx.points.size());
                        for (const auto& b : d.blocks)
                            if (b.k == 1 && b.from == x && b.to == y) net = net + b.matrix;
                        // restrict to fiber degree j and push to homology
                        IntMatrix chain_j(morse_complex(fy).dim(j), morse_complex(fx).dim(j));
                        std::size_t cj = 0;
                        for (std::size_t c2 = 0; c2 < fx.points.size(); ++c2) {
                            if (fx.points[c2].index != j) continue;
                            std::size_t rj = 0;
                            for (std::size_t r2 = 0; r2 < fy.points.size(); ++r2) {
                                if (fy.points[r2].index != j) continue;
                                chain_j(rj, cj) = net(r2, c2);
                                ++rj;
                            }
                            ++cj;
                        }
                        IntMatrix ind =
                            induced_map(stalk_pres[x].at(j), stalk_pres[y].at(j), chain_j);
                        for (std::size_t r = 0; r < yg; ++r)
                            for (std::size_t c = 0; c < xg; ++c) {
                                big(roff + r, coff + c) = ind(r, c);
                                if (ind(r, c) != 0) nonzero = true;
                            }
                    }
                    roff += yg;
                }
                coff += xg;
            }
            if (nonzero) cc.maps[{i, j}] = std::move(big);
        }
    }
    return cc;
}

struct E2Mismatch {
    int i, j;
    FgAbGroup from_pages, from_coefficients;
};

// E^2 computed by the spectral engine must agree with the homology of
// the base with coefficients in the fiber homologies: two independent
// code paths through the same data.
inline std::optional<E2Mismatch> e2_crosscheck(const FamilyDescriptor& d) {
    FamilyComplex fc = assemble(d);
    Page p2 = page(fc.filtered, 2);
    CoefficientComplex cc = descriptor_coefficients(d);
    cc.validate();
    auto h = cc.homology();
    std::set<Bidegree> keys;
    for (const auto& [k, e] : p2.entries) keys.insert(k);
    for (const auto& [k, g] : h) keys.insert(k);
    for (const auto& [i, j] : keys) {
        FgAbGroup a = p2.group_at(i, j);
        FgAbGroup b = h.count({i, j}) ? h[{i, j}] : FgAbGroup();
        if (a != b) return E2Mismatch{i, j, a, b};
    }
    return std::nullopt;
}

// Fiber chain positions of one fiber degree, in listed order.
inline std::vector<std::size_t> fiber_degree_positions(const MorseData& f, int j) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < f.points.size(); ++i)
        if (f.points[i].index == j) out.push_back(i);
    return out;
}

// The (-f, -o) family: base and fibers negated, blocks transposed. The
// assembled complex is the regraded algebraic dual of the original.
inline FamilyDescriptor dualize(const FamilyDescriptor& d) {
    if (!d.oriented_fibers)
        throw contract_error("dualize: fibers are not compatibly oriented (e.g. the Klein "
                             "family's monodromy reverses fiber orientation); the dual "
                             "family is not defined");
    if (!d.oriented_base) throw contract_error("dualize: base is not oriented");
    const int m = d.dim_base, n = d.fiber_dim;
    const int fiber_sign = (m % 2 == 0) ? 1 : -1;
    FamilyDescriptor out;
    out.name = d.name.empty() ? "dual" : d.name + "-dual";
    out.dim_base = m;
    out.fiber_dim = n;
    out.oriented_base = d.oriented_base;
    out.oriented_fibers = d.oriented_fibers;
    out.base.orientation = d.base.orientation + "/neg";
    for (const auto& p : d.base.points) out.base.points.push_back({p.label, m - p.index});
    for (const auto& f : d.base.flows) out.base.flows.push_back({f.to, f.from, f.count});
    for (const auto& [x, f] : d.fibers) {
        MorseData df;
        df.orientation = f.orientation + "/neg";
        for (const auto& p : f.points) df.points.push_back({p.label, n - p.index});
        for (const auto& fl : f.flows)
            df.flows.push_back({fl.to, fl.from, Int(fiber_sign) * fl.count});
        out.fibers[x] = std::move(df);
    }
    for (const auto& b : d.blocks) out.blocks.push_back({b.k, b.to, b.from, b.matrix.transpose()});
    return out;
}

// Regraded algebraic dual of a filtered complex: degree' = degree_shift -
// degree, level' = level_shift - level, transposed differentials. The
// cohomological spectral sequence of f, re-housed homologically.
inline FilteredComplex dual_filtered(const FilteredComplex& f, int degree_shift,
                                     int level_shift) {
    const GradedComplex& c = f.complex();
    std::map<int, std::vector<std::string>> labels;
    std::map<int, std::vector<int>> levels;
    for (int n = c.lo(); n <= c.hi(); ++n) {
        for (std::size_t i = 0; i < c.dim(n); ++i) {
            labels[degree_shift - n].push_back(c.labels(n)[i] + "*");
            levels[degree_shift - n].push_back(level_shift - f.level(n, i));
        }
    }
    std::map<int, IntMatrix> diffs;
    for (int n = c.lo(); n <= c.hi(); ++n) {
        IntMatrix dt = c.differential(n).transpose();  // C^{n-1} -> C^n
        if (!dt.is_zero()) diffs[degree_shift - n + 1] = dt;
    }
    return FilteredComplex::build(GradedComplex::build(std::move(labels), std::move(diffs)),
                                  std::move(levels));
}

struct PoincareMismatch {
    int r, i, j;
    FgAbGroup cohomological, dual_family;
};

// E_k^{i,j}(Z), realized as the regraded dual, must match the pages of
// the dualized descriptor at the same bidegree, for all k >= 2.
inline std::optional<PoincareMismatch> poincare_check(const FamilyDescriptor& d) {
    FamilyDescriptor dd = dualize(d);
    FamilyComplex orig = assemble(d);
    FamilyComplex dual_fam = assemble(dd);
    FilteredComplex dual_alg =
        dual_filtered(orig.filtered, d.dim_base + d.fiber_dim, d.dim_base);
    const int len = std::max(dual_alg.max_level() - dual_alg.min_level(),
                             dual_fam.filtered.max_level() - dual_fam.filtered.min_level());
    for (int r = 2; r <= len + 1; ++r) {
        Page pa = page(dual_alg, r);
        Page pf = page(dual_fam.filtered, r);
        std::set<Bidegree> keys;
        for (const auto& [k, e] : pa.entries) keys.insert(k);
        for (const auto& [k, e] : pf.entries) keys.insert(k);
        for (const auto& [i, j] : keys) {
            if (pa.group_at(i, j) != pf.group_at(i, j))
                return PoincareMismatch{r, i, j, pa.group_at(i, j), pf.group_at(i, j)};
            if (pa.d_rank(i, j) != pf.d_rank(i, j))
                return PoincareMismatch{r, i, j, pa.group_at(i, j), pf.group_at(i, j)};
        }
    }
    return std::nullopt;
}

// Continuation data between two descriptor choices: phi blocks drop the
// base index by k and raise the fiber degree by k (a degree-0 filtered
// map on total complexes).
struct FamilyContinuation {
    FamilyDescriptor source, target;
    std::vector<FamilyBlock> phi;  // k >= 0 here; k is the base-index drop
};

struct ContinuationCheck {
    bool chain_map = false;
    bool filtered = false;
    bool homology_iso = false;
    bool pages_iso = false;
    bool ok() const { return chain_map && filtered && homology_iso && pages_iso; }
};

inline ChainMap continuation_chain_map(const FamilyContinuation& c, const FamilyComplex& src,
                                       const FamilyComplex& dst) {
    ChainMap phi;
    const GradedComplex& sc = src.filtered.complex();
    const GradedComplex& dc = dst.filtered.complex();
    for (int n = sc.lo(); n <= sc.hi(); ++n)
        if (sc.dim(n) && dc.dim(n)) phi.components[n] = IntMatrix(dc.dim(n), sc.dim(n));
    for (const auto& b : c.phi) {
        const MorseData& fx = c.source.fiber_at(b.from);
        const MorseData& fy = c.target.fiber_at(b.to);
        if (b.matrix.rows() != fy.points.size() || b.matrix.cols() != fx.points.size())
            throw data_error("continuation: block " + b.from + "->" + b.to + " wrong shape");
        for (std::size_t cc = 0; cc < b.matrix.cols(); ++cc)
            for (std::size_t r = 0; r < b.matrix.rows(); ++r) {
                if (b.matrix(r, cc) == 0) continue;
                auto s = src.positions.at({b.from, fx.points[cc].label});
                auto t = dst.positions.at({b.to, fy.points[r].label});
                if (s.first != t.first)
                    throw data_error("continuation: block " + b.from + "->" + b.to +
                                     " entry is not degree preserving");
                phi.components[s.first](t.second, s.second) += b.matrix(r, cc);
            }
    }
    return phi;
}

inline ContinuationCheck continuation_verify(const FamilyContinuation& c) {
    ContinuationCheck out;
    FamilyComplex src = assemble(c.source), dst = assemble(c.target);
    ChainMap phi = continuation_chain_map(c, src, dst);
    out.chain_map = verify_chain_map(src.filtered.complex(), dst.filtered.complex(), phi).empty();
    out.filtered = chain_map_preserves_levels(src.filtered, dst.filtered, phi);
    if (!out.chain_map || !out.filtered) return out;

    // isomorphism on homology
    auto hs = homology(src.filtered.complex());
    auto hd = homology(dst.filtered.complex());
    out.homology_iso = true;
    for (int n = std::min(src.filtered.complex().lo(), dst.filtered.complex().lo());
         n <= std::max(src.filtered.complex().hi(), dst.filtered.complex().hi()); ++n) {
        FgAbGroup gs = hs.count(n) ? hs[n].group : FgAbGroup();
        FgAbGroup gd = hd.count(n) ? hd[n].group : FgAbGroup();
        if (gs != gd) {
            out.homology_iso = false;
            break;
        }
        if (gs.is_trivial()) continue;
        IntMatrix ind = induced_map(hs[n], hd[n],
                                    phi.component(src.filtered.complex(),
                                                  dst.filtered.complex(), n));
        if (!presented_map_is_iso(PresentedModule::from_group(gs),
                                  PresentedModule::from_group(gd), ind)) {
            out.homology_iso = false;
            break;
        }
    }

    // isomorphism on every page r >= 2
    const int len = std::max(src.filtered.max_level() - src.filtered.min_level(),
                             dst.filtered.max_level() - dst.filtered.min_level());
    SpectralMorphism m = induced_morphism(src.filtered, dst.filtered, phi, len + 1);
    out.pages_iso = true;
    for (int r = 2; r <= len + 1; ++r)
        if (!morphism_is_iso_at(m, page(src.filtered, r), page(dst.filtered, r)))
            out.pages_iso = false;
    return out;
}

// Identity continuation of a constant-in-t family.
inline FamilyContinuation constant_continuation(const FamilyDescriptor& d) {
    FamilyContinuation c{d, d, {}};
    for (const auto& x : d.base.points) {
        const MorseData& f = d.fiber_at(x.label);
        c.phi.push_back({0, x.label, x.label, IntMatrix::identity(f.points.size())});
    }
    return c;
}

struct SphereDifferentialCheck {
    bool applicable = false;
    bool agrees = false;
};

// Over B = S^k with two base critical points, the page differential d_k
// must be the map induced on fiber homology by the delta_k block.
inline SphereDifferentialCheck sphere_higher_differential(const FamilyDescriptor& d) {
    SphereDifferentialCheck out;
    const int k = d.dim_base;
    if (d.base.points.size() != 2 || k < 2) return out;
    std::string top, bot;
    for (const auto& p : d.base.points) {
        if (p.index == k)
            top = p.label;
        else if (p.index == 0)
            bot = p.label;
        else
            return out;
    }
    out.applicable = true;

    FamilyComplex fc = assemble(d);
    Page pk = page(fc.filtered, k);
    auto htop = homology(morse_complex(d.fiber_at(top)));
    auto hbot = homology(morse_complex(d.fiber_at(bot)));

    IntMatrix delta_k(d.fiber_at(bot).points.size(), d.fiber_at(top).points.size());
    for (const auto& b : d.blocks)
        if (b.k == k && b.from == top && b.to == bot) delta_k = delta_k + b.matrix;

    out.agrees = true;
    const MorseData& ftop = d.fiber_at(top);
    const MorseData& fbot = d.fiber_at(bot);
    GradedComplex ctop = morse_complex(ftop), cbot = morse_complex(fbot);
    for (int j = ctop.lo(); j <= ctop.hi(); ++j) {
        FgAbGroup src_h = htop.count(j) ? htop[j].group : FgAbGroup();
        if (src_h.is_trivial()) continue;
        FgAbGroup dst_h = hbot.count(j + k - 1) ? hbot[j + k - 1].group : FgAbGroup();

        // restrict delta_k to fiber degrees j -> j+k-1
        auto cols = fiber_degree_positions(ftop, j);
        auto rows = fiber_degree_positions(fbot, j + k - 1);
        IntMatrix dj(rows.size(), cols.size());
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t b2 = 0; b2 < cols.size(); ++b2)
                dj(a, b2) = delta_k(rows[a], cols[b2]);

        // engine side: d_k out of (k, j), conjugated into the fiber
        // homology presentations via the canonical identifications
        auto src_entry = pk.entries.find({k, j});
        auto dst_entry = pk.entries.find({0, j + k - 1});
        IntMatrix dk_engine =
            src_entry == pk.entries.end()
                ? IntMatrix(0, 0)
                : pk.differentials.count({k, j})
                      ? pk.differentials.at({k, j})
                      : IntMatrix(dst_entry == pk.entries.end() ? 0 : dst_entry->second.gens(),
                                  src_entry->second.gens());

        if (src_entry == pk.entries.end()) {
            // E^k entry vanished: the induced map must be zero on homology
            if (!dst_h.is_trivial() && !src_h.is_trivial()) {
                IntMatrix ind = induced_map(htop[j], hbot[j + k - 1], dj);
                for (std::size_t a = 0; a < ind.rows(); ++a)
                    for (std::size_t b2 = 0; b2 < ind.cols(); ++b2)
                        if (hbot[j + k - 1].reduce(a, ind(a, b2)) != 0) out.agrees = false;
            }
            continue;
        }

        // identification: page generator lift -> top-fiber homology class
        const QuotientPresentation& sp = src_entry->second;
        IntMatrix iota_src(htop[j].gens(), sp.gens());
        for (std::size_t g = 0; g < sp.gens(); ++g) {
            // take the top-level part of the ambient lift, as a fiber chain
            std::vector<Int> lift = sp.gen_lifts.col(g);
            std::vector<Int> fib(cols.size());
            for (std::size_t a = 0; a < cols.size(); ++a) {
                auto pos = fc.positions.at({top, ftop.points[cols[a]].label});
                fib[a] = lift[pos.second];
            }
            auto coords = htop[j].project(fib);
            for (std::size_t t = 0; t < coords.size(); ++t) iota_src(t, g) = coords[t];
        }
        if (dst_h.is_trivial()) {
            // nothing to compare beyond d_k vanishing into a trivial group
            continue;
        }
        const QuotientPresentation& dp = dst_entry->second;
        IntMatrix iota_dst(hbot[j + k - 1].gens(), dp.gens());
        for (std::size_t g = 0; g < dp.gens(); ++g) {
            std::vector<Int> lift = dp.gen_lifts.col(g);
            std::vector<Int> fib(rows.size());
            for (std::size_t a = 0; a < rows.size(); ++a) {
                auto pos = fc.positions.at({bot, fbot.points[rows[a]].label});
                fib[a] = lift[pos.second];
            }
            auto coords = hbot[j + k - 1].project(fib);
            for (std::size_t t = 0; t < coords.size(); ++t) iota_dst(t, g) = coords[t];
        }

        IntMatrix lhs = iota_dst * dk_engine;             // page route
        IntMatrix rhs = induced_map(htop[j], hbot[j + k - 1], dj) * iota_src;  // block route
        if (!presented_maps_equal(hbot[j + k - 1], lhs, rhs)) out.agrees = false;
    }
    return out;
}

// Collapse checks for the degeneration criterion.
inline bool has_higher_blocks(const FamilyDescriptor& d) {
    for (const auto& b : d.blocks)
        if (b.k >= 2 && !b.matrix.is_zero()) return true;
    return false;
}

// Rank collapse at E^2: every d_r with r >= 2 has rank zero over Q.
inline bool collapses_at_e2_over_q(const FamilyComplex& fc) {
    const int len = fc.filtered.max_level() - fc.filtered.min_level();
    for (int r = 2; r <= len + 1; ++r) {
        Page p = page(fc.filtered, r);
        for (const auto& [key, m] : p.differentials)
            if (p.d_rank(key.first, key.second) > 0) return false;
    }
    return true;
}

// Collapse over Z: no page differential is nonzero at all for r >= 2.
inline bool collapses_at_e2_over_z(const FamilyComplex& fc) {
    const int len = fc.filtered.max_level() - fc.filtered.min_level();
    for (int r = 2; r <= len + 1; ++r)
        if (!page(fc.filtered, r).differentials_vanish()) return false;
    return true;
}

}  // namespace morsefam
