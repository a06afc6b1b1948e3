#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "morsefam/complexes.hpp"

namespace morsefam {

struct CriticalPoint {
    std::string label;
    int index = 0;
    bool operator==(const CriticalPoint& o) const { return label == o.label && index == o.index; }
};

// Net signed flow-line count between critical points of adjacent index.
struct FlowCount {
    std::string from, to;
    Int count;
    bool operator==(const FlowCount& o) const {
        return from == o.from && to == o.to && count == o.count;
    }
};

// Combinatorial Morse data for one pair (f, g): critical points, signed
// counts, and an opaque token recording which orientation convention
// produced the signs. Geometry only enters through the flowcount module.
struct MorseData {
    std::vector<CriticalPoint> points;
    std::vector<FlowCount> flows;
    std::string orientation = "std";

    bool operator==(const MorseData& o) const {
        return points == o.points && flows == o.flows && orientation == o.orientation;
    }

    const CriticalPoint& point(const std::string& label) const {
        for (const auto& p : points)
            if (p.label == label) return p;
        throw contract_error("MorseData: unknown critical point " + label);
    }

    std::vector<std::string> labels_at_index(int i) const {
        std::vector<std::string> out;
        for (const auto& p : points)
            if (p.index == i) out.push_back(p.label);
        return out;
    }

    int min_index() const {
        int m = 0;
        bool first = true;
        for (const auto& p : points) {
            if (first || p.index < m) m = p.index;
            first = false;
        }
        return m;
    }
    int max_index() const {
        int m = 0;
        bool first = true;
        for (const auto& p : points) {
            if (first || p.index > m) m = p.index;
            first = false;
        }
        return m;
    }

    Int net_count(const std::string& from, const std::string& to) const {
        Int c = 0;
        for (const auto& f : flows)
            if (f.from == from && f.to == to) c += f.count;
        return c;
    }

    void validate() const {
        std::set<std::string> seen;
        for (const auto& p : points) {
            if (p.index < 0) throw data_error("MorseData: negative index for " + p.label);
            if (!seen.insert(p.label).second)
                throw data_error("MorseData: duplicate label " + p.label);
        }
        for (const auto& f : flows) {
            const auto& a = point(f.from);
            const auto& b = point(f.to);
            if (a.index != b.index + 1)
                throw data_error("MorseData: flow " + f.from + "->" + f.to +
                                 " not between adjacent indices");
        }
    }
};

// Chain complex generated by the critical points; rejects the data when
// the boundary fails d^2 = 0, naming an offending pair.
inline GradedComplex morse_complex(const MorseData& m) {
    m.validate();
    std::map<int, std::vector<std::string>> labels;
    for (const auto& p : m.points) labels[p.index].push_back(p.label);
    std::map<int, std::map<std::string, std::size_t>> pos;
    for (auto& [n, ls] : labels)
        for (std::size_t k = 0; k < ls.size(); ++k) pos[n][ls[k]] = k;

    std::map<int, IntMatrix> diffs;
    for (auto& [n, ls] : labels) {
        if (labels.find(n - 1) == labels.end()) continue;
        IntMatrix d(labels[n - 1].size(), ls.size());
        for (const auto& f : m.flows) {
            const auto& a = m.point(f.from);
            if (a.index != n) continue;
            d(pos[n - 1][f.to], pos[n][f.from]) += f.count;
        }
        diffs[n] = std::move(d);
    }
    try {
        return GradedComplex::build(std::move(labels), std::move(diffs));
    } catch (const data_error&) {
        // locate an offending pair for the report
        for (const auto& p : m.points)
            for (const auto& r : m.points) {
                if (p.index != r.index + 2) continue;
                Int coeff = 0;
                for (const auto& q : m.points) {
                    if (q.index != r.index + 1) continue;
                    coeff += m.net_count(p.label, q.label) * m.net_count(q.label, r.label);
                }
                if (coeff != 0)
                    throw data_error("morse_complex: d^2 != 0 at pair (" + p.label + ", " +
                                     r.label + ")");
            }
        throw;
    }
}

// Flip the orientation choice of one critical point: negates exactly the
// counts involving it. Homology is invariant under this.
inline MorseData flip_orientation(MorseData m, const std::string& label) {
    for (auto& f : m.flows)
        if (f.from == label || f.to == label) f.count = -f.count;
    m.orientation += "/flip:" + label;
    return m;
}

// Continuation data between two Morse data sets: a degree-0 chain map,
// optionally with a homotopy K against another continuation.
struct ContinuationData {
    MorseData source, target;
    ChainMap phi;
    std::optional<ChainMap> other_phi;
    std::optional<FilteredHomotopy> homotopy;
};

struct ContinuationReport {
    bool ok = true;
    std::vector<ChainMapResidual> chain_residuals;
    std::vector<ChainMapResidual> homotopy_residuals;
};

inline ContinuationReport verify_continuation(const ContinuationData& c) {
    ContinuationReport rep;
    GradedComplex src = morse_complex(c.source), dst = morse_complex(c.target);
    rep.chain_residuals = verify_chain_map(src, dst, c.phi);
    if (c.other_phi) {
        auto more = verify_chain_map(src, dst, *c.other_phi);
        rep.chain_residuals.insert(rep.chain_residuals.end(), more.begin(), more.end());
    }
    if (c.homotopy && c.other_phi)
        rep.homotopy_residuals = verify_homotopy(src, dst, *c.homotopy, c.phi, *c.other_phi);
    rep.ok = rep.chain_residuals.empty() && rep.homotopy_residuals.empty();
    return rep;
}

// Complex of presented modules indexed by bidegree (i, j): terms at (i,j)
// map to (i-1, j). The common machinery behind homology with local
// coefficients and the E^2 crosschecks.
struct CoefficientComplex {
    std::map<Bidegree, PresentedModule> terms;
    std::map<Bidegree, IntMatrix> maps;  // at (i,j): term(i,j) -> term(i-1,j)

    using Key = std::pair<int, int>;

    PresentedModule term(int i, int j) const {
        auto it = terms.find({i, j});
        return it == terms.end() ? PresentedModule() : it->second;
    }
    IntMatrix map_at(int i, int j) const {
        auto it = maps.find({i, j});
        if (it != maps.end()) return it->second;
        return IntMatrix(term(i - 1, j).gens, term(i, j).gens);
    }

    void validate() const {
        for (const auto& [k, m] : maps) {
            auto [i, j] = k;
            if (!presented_map_well_defined(term(i, j), term(i - 1, j), m))
                throw data_error("CoefficientComplex: map not well defined");
            IntMatrix dd = map_at(i - 1, j) * m;
            Subgroup rel = image(term(i - 2, j).pad_rels());
            for (std::size_t c = 0; c < dd.cols(); ++c)
                if (!rel.contains(dd.col(c)))
                    throw data_error("CoefficientComplex: d^2 != 0");
        }
    }

    std::map<Bidegree, FgAbGroup> homology() const {
        std::map<Bidegree, FgAbGroup> h;
        std::set<Bidegree> keys;
        for (const auto& [k, t] : terms) keys.insert(k);
        for (const auto& [i, j] : keys) {
            QuotientPresentation q = presented_homology_at(term(i + 1, j), map_at(i + 1, j),
                                                           term(i, j), map_at(i, j),
                                                           term(i - 1, j));
            if (!q.group.is_trivial()) h[{i, j}] = q.group;
        }
        return h;
    }
};

// One base flow line on the Morse base, carrying its per-degree stalk
// transport and the sign with which it enters the coefficient differential.
struct Transport {
    std::string from, to;
    int sign = 1;
    std::map<int, IntMatrix> maps;  // per stalk degree j

    IntMatrix map_j(int j, std::size_t rows, std::size_t cols) const {
        auto it = maps.find(j);
        return it == maps.end() ? IntMatrix(rows, cols) : it->second;
    }
};

// Local coefficient system on a Morse base: graded stalk at each base
// critical point, an invertible transport per base flow line, and loop
// words serving as monodromy certificates.
struct LocalSystem {
    MorseData base;
    std::map<std::string, std::map<int, FgAbGroup>> stalks;
    std::vector<Transport> transports;
    // each loop is a word in transports, (index, exponent ±1)
    std::vector<std::vector<std::pair<std::size_t, int>>> loops;

    FgAbGroup stalk(const std::string& x, int j) const {
        auto it = stalks.find(x);
        if (it == stalks.end()) return FgAbGroup();
        auto jt = it->second.find(j);
        return jt == it->second.end() ? FgAbGroup() : jt->second;
    }

    std::set<int> stalk_degrees() const {
        std::set<int> out;
        for (const auto& [x, g] : stalks)
            for (const auto& [j, grp] : g)
                if (!grp.is_trivial()) out.insert(j);
        return out;
    }

    void validate() const {
        base.validate();
        for (const auto& t : transports) {
            const auto& a = base.point(t.from);
            const auto& b = base.point(t.to);
            if (a.index != b.index + 1)
                throw data_error("LocalSystem: transport on non-flow pair " + t.from + "->" +
                                 t.to);
            for (int j : stalk_degrees()) {
                PresentedModule s = PresentedModule::from_group(stalk(t.from, j));
                PresentedModule d = PresentedModule::from_group(stalk(t.to, j));
                if (s.gens == 0 && d.gens == 0) continue;
                if (!presented_map_is_iso(s, d, t.map_j(j, d.gens, s.gens)))
                    throw data_error("LocalSystem: transport " + t.from + "->" + t.to +
                                     " is not invertible in degree " + std::to_string(j));
            }
        }
        // signed transport counts must reproduce the base flow counts
        std::map<std::pair<std::string, std::string>, Int> sums;
        for (const auto& t : transports) sums[{t.from, t.to}] += t.sign;
        for (const auto& [k, s] : sums)
            if (s != base.net_count(k.first, k.second))
                throw data_error("LocalSystem: transport signs disagree with base counts " +
                                 k.first + "->" + k.second);
    }

    // Net coefficient map stalk(x)_j -> stalk(y)_j: sum of sign * transport.
    IntMatrix net_map(const std::string& x, const std::string& y, int j) const {
        std::size_t rows = PresentedModule::from_group(stalk(y, j)).gens;
        std::size_t cols = PresentedModule::from_group(stalk(x, j)).gens;
        IntMatrix m(rows, cols);
        for (const auto& t : transports) {
            if (t.from != x || t.to != y) continue;
            IntMatrix tm = t.map_j(j, rows, cols);
            m = m + (t.sign > 0 ? tm : -tm);
        }
        return m;
    }

    CoefficientComplex coefficient_complex() const {
        CoefficientComplex cc;
        std::map<int, std::vector<std::string>> strata;
        for (const auto& p : base.points) strata[p.index].push_back(p.label);
        for (int j : stalk_degrees()) {
            for (const auto& [i, xs] : strata) {
                std::vector<std::pair<std::size_t, Int>> diag;
                std::size_t offset = 0;
                for (const auto& x : xs) {
                    FgAbGroup g = stalk(x, j);
                    for (std::size_t t = 0; t < g.torsion.size(); ++t)
                        diag.push_back({offset + t, g.torsion[t]});
                    offset += g.torsion.size() + g.free_rank;
                }
                const std::size_t gens = offset;
                IntMatrix rels(gens, diag.size());
                for (std::size_t c = 0; c < diag.size(); ++c) rels(diag[c].first, c) = diag[c].second;
                if (gens) cc.terms[{i, j}] = PresentedModule(gens, std::move(rels));
            }
            for (const auto& [i, xs] : strata) {
                auto below = strata.find(i - 1);
                if (below == strata.end()) continue;
                std::size_t rows = cc.term(i - 1, j).gens, cols = cc.term(i, j).gens;
                if (rows == 0 || cols == 0) continue;
                IntMatrix big(rows, cols);
                std::size_t coff = 0;
                for (const auto& x : xs) {
                    std::size_t xg = PresentedModule::from_group(stalk(x, j)).gens;
                    std::size_t roff = 0;
                    for (const auto& y : below->second) {
                        std::size_t yg = PresentedModule::from_group(stalk(y, j)).gens;
                        IntMatrix m = net_map(x, y, j);
                        for (std::size_t r = 0; r < yg; ++r)
                            for (std::size_t c = 0; c < xg; ++c) big(roff + r, coff + c) = m(r, c);
                        roff += yg;
                    }
                    coff += xg;
                }
                if (!big.is_zero()) cc.maps[{i, j}] = std::move(big);
            }
        }
        return cc;
    }

    // Composite transport along a loop word, per degree (stalks along the
    // loop must be abstractly identified; the word must close up).
    IntMatrix monodromy(std::size_t loop_idx, int j) const {
        const auto& word = loops.at(loop_idx);
        if (word.empty()) throw contract_error("LocalSystem: empty loop word");
        std::size_t n = PresentedModule::from_group(
                            stalk(word.front().second > 0 ? transports[word.front().first].from
                                                          : transports[word.front().first].to,
                                  j))
                            .gens;
        IntMatrix acc = IntMatrix::identity(n);
        for (const auto& [ti, e] : word) {
            const Transport& t = transports[ti];
            std::size_t rows = PresentedModule::from_group(stalk(t.to, j)).gens;
            std::size_t cols = PresentedModule::from_group(stalk(t.from, j)).gens;
            IntMatrix m = t.map_j(j, rows, cols);
            if (e < 0) {
                auto inv = solve_matrix(m, IntMatrix::identity(rows));
                if (!inv) throw data_error("LocalSystem: transport not invertible over Z");
                m = *inv;
            }
            acc = m * acc;
        }
        return acc;
    }
};

// H_i(B; F_j) via the base Morse complex with twisted coefficients.
inline std::map<Bidegree, FgAbGroup> homology_local_coeffs(const LocalSystem& l) {
    l.validate();
    CoefficientComplex cc = l.coefficient_complex();
    cc.validate();
    return cc.homology();
}

// (coker(1-Phi), ker(1-Phi)) for an invertible monodromy matrix: the two
// E^2 entries of a family over the circle.
inline std::pair<FgAbGroup, FgAbGroup> circle_monodromy(const IntMatrix& phi) {
    if (phi.rows() != phi.cols()) throw contract_error("circle_monodromy: matrix not square");
    Int det = determinant(phi);
    if (det != 1 && det != -1)
        throw contract_error("circle_monodromy: matrix not invertible over Z");
    IntMatrix one_minus = IntMatrix::identity(phi.rows()) - phi;
    FgAbGroup coker = cokernel_group(one_minus);
    FgAbGroup ker = FgAbGroup::free(kernel(one_minus).rank());
    return {coker, ker};
}

}  // namespace morsefam
