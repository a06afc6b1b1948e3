#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "morsefam/complexes.hpp"
#include "morsefam/subgroup.hpp"

namespace morsefam {

// Requested precision cannot be met by the recorded data. Never silent.
struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precision floor: an element is known modulo terms of omega-value <= floor.
// nullopt plays the role of -infinity (the element is exact).
using Floor = std::optional<Rat>;

inline Floor floor_max(const Floor& a, const Floor& b) {
    if (!a) return b;
    if (!b) return a;
    return std::max(*a, *b);
}

inline bool at_or_below(const Rat& v, const Floor& f) { return f && v <= *f; }

// Free abelian coefficient lattice Γ with an exact rational homomorphism
// ω: Γ -> Q; K = ker(ω) is computed and saturated.
struct CoeffLattice {
    std::size_t rank = 0;
    std::vector<Rat> omega;
    Subgroup ker;

    static CoeffLattice make(std::vector<Rat> omega_values) {
        CoeffLattice l;
        l.rank = omega_values.size();
        l.omega = std::move(omega_values);
        // scale to an integer row and take the kernel
        Int scale = 1;
        for (const auto& w : l.omega) scale *= denominator(w);
        IntMatrix row(1, l.rank);
        for (std::size_t i = 0; i < l.rank; ++i)
            row(0, i) = numerator(l.omega[i]) * (scale / denominator(l.omega[i]));
        l.ker = kernel(row);
        return l;
    }

    bool operator==(const CoeffLattice& o) const { return rank == o.rank && omega == o.omega; }

    Rat omega_of(const std::vector<Int>& a) const {
        if (a.size() != rank) throw contract_error("CoeffLattice: class length mismatch");
        Rat v = 0;
        for (std::size_t i = 0; i < rank; ++i) v += omega[i] * Rat(a[i]);
        return v;
    }

    std::size_t value_rank() const { return rank - ker.rank(); }  // rank of Γ/K
};

inline std::vector<Int> vec_add(const std::vector<Int>& a, const std::vector<Int>& b) {
    std::vector<Int> c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}
inline std::vector<Int> vec_neg(const std::vector<Int>& a) {
    std::vector<Int> c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = -a[i];
    return c;
}
inline std::vector<Int> vec_scaled(const std::vector<Int>& a, const Int& k) {
    std::vector<Int> c(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * k;
    return c;
}

// Truncated Γ-indexed series with a precision floor. Coef is Int for the
// Z-mode ring and Rat for the field mode.
template <typename Coef>
struct NovikovSeries {
    CoeffLattice lattice;
    std::map<std::vector<Int>, Coef> terms;  // only omega(A) > floor, nonzero coefficients
    Floor floor;                             // nullopt: exact

    NovikovSeries() = default;
    explicit NovikovSeries(CoeffLattice l) : lattice(std::move(l)) {}

    static NovikovSeries zero(const CoeffLattice& l) { return NovikovSeries(l); }

    static NovikovSeries monomial(const CoeffLattice& l, const std::vector<Int>& a,
                                  const Coef& c) {
        NovikovSeries s(l);
        if (c != Coef(0)) s.terms[a] = c;
        return s;
    }

    static NovikovSeries one(const CoeffLattice& l) {
        return monomial(l, std::vector<Int>(l.rank, Int(0)), Coef(1));
    }

    bool is_zero() const { return terms.empty(); }
    bool exactly_one() const {
        return terms.size() == 1 && terms.begin()->second == Coef(1) &&
               terms.begin()->first == std::vector<Int>(lattice.rank, Int(0));
    }

    // Largest omega value in the support; nullopt for empty support.
    std::optional<Rat> max_omega() const {
        std::optional<Rat> m;
        for (const auto& [a, c] : terms) {
            Rat v = lattice.omega_of(a);
            if (!m || v > *m) m = v;
        }
        return m;
    }

    // The unique support class of maximal omega value, if unique.
    std::optional<std::pair<std::vector<Int>, Coef>> leading() const {
        auto m = max_omega();
        if (!m) return std::nullopt;
        std::optional<std::pair<std::vector<Int>, Coef>> out;
        for (const auto& [a, c] : terms)
            if (lattice.omega_of(a) == *m) {
                if (out) return std::nullopt;  // tie: no well-defined leading term
                out = {a, c};
            }
        return out;
    }

    void drop_below_floor() {
        if (!floor) return;
        for (auto it = terms.begin(); it != terms.end();)
            it = at_or_below(lattice.omega_of(it->first), floor) ? terms.erase(it)
                                                                 : std::next(it);
    }

    NovikovSeries truncated(const Floor& f) const {
        NovikovSeries s = *this;
        s.floor = floor_max(s.floor, f);
        s.drop_below_floor();
        return s;
    }

    NovikovSeries operator+(const NovikovSeries& o) const {
        check_lattice(o);
        NovikovSeries s(lattice);
        s.terms = terms;
        for (const auto& [a, c] : o.terms) {
            auto [it, fresh] = s.terms.try_emplace(a, c);
            if (!fresh) {
                it->second += c;
                if (it->second == Coef(0)) s.terms.erase(it);
            }
        }
        s.floor = floor_max(floor, o.floor);
        s.drop_below_floor();
        return s;
    }

    NovikovSeries operator-() const {
        NovikovSeries s = *this;
        for (auto& [a, c] : s.terms) c = -c;
        return s;
    }

    NovikovSeries operator-(const NovikovSeries& o) const { return *this + (-o); }

    // Floor rule for products: unknown tails contribute below
    // max(floor_1 + maxw_2, floor_2 + maxw_1, floor_1 + floor_2).
    NovikovSeries operator*(const NovikovSeries& o) const {
        check_lattice(o);
        NovikovSeries s(lattice);
        for (const auto& [a, c] : terms)
            for (const auto& [b, d] : o.terms) {
                auto key = vec_add(a, b);
                Coef prod = c * d;
                auto [it, fresh] = s.terms.try_emplace(key, prod);
                if (!fresh) {
                    it->second += prod;
                    if (it->second == Coef(0)) s.terms.erase(it);
                }
            }
        Floor f;
        auto m1 = max_omega(), m2 = o.max_omega();
        if (floor && m2) f = floor_max(f, Floor(*floor + *m2));
        if (o.floor && m1) f = floor_max(f, Floor(*o.floor + *m1));
        if (floor && o.floor) f = floor_max(f, Floor(*floor + *o.floor));
        s.floor = f;
        s.drop_below_floor();
        return s;
    }

    NovikovSeries scaled(const Coef& k) const {
        NovikovSeries s = *this;
        if (k == Coef(0)) {
            s.terms.clear();
            return s;
        }
        for (auto& [a, c] : s.terms) c = c * k;
        return s;
    }

    bool operator==(const NovikovSeries& o) const {
        return terms == o.terms && floor == o.floor;
    }

    // Equality of the known parts down to a common floor.
    bool agrees_with(const NovikovSeries& o, const Floor& down_to) const {
        NovikovSeries d = (*this - o).truncated(down_to);
        return d.terms.empty();
    }

    std::string to_string() const {
        if (terms.empty()) return floor ? "O(" + to_str(*floor) + ")" : "0";
        std::string s;
        for (const auto& [a, c] : terms) {
            if (!s.empty()) s += " + ";
            std::string mono = "e^[";
            for (std::size_t i = 0; i < a.size(); ++i)
                mono += (i ? "," : "") + a[i].str();
            mono += "]";
            s += coef_str(c) + (a == std::vector<Int>(a.size(), Int(0)) ? "" : "*" + mono);
        }
        if (floor) s += " + O(" + to_str(*floor) + ")";
        return s;
    }

  private:
    static std::string to_str(const Rat& r) {
        return numerator(r).str() + (denominator(r) == 1 ? "" : "/" + denominator(r).str());
    }
    static std::string coef_str(const Int& c) { return c.str(); }
    static std::string coef_str(const Rat& c) { return to_str(c); }

    void check_lattice(const NovikovSeries& o) const {
        if (!(lattice == o.lattice)) throw contract_error("NovikovSeries: lattice mismatch");
    }
};

using NovikovElement = NovikovSeries<Int>;
using NovikovElementQ = NovikovSeries<Rat>;

inline NovikovElementQ to_rational(const NovikovElement& e) {
    NovikovElementQ q(e.lattice);
    q.floor = e.floor;
    for (const auto& [a, c] : e.terms) q.terms[a] = Rat(c);
    return q;
}

// Geometric-series inverse of a unit, to the requested precision. In the
// integer ring the leading coefficient must be ±1; over the field any
// nonzero leading coefficient works. The leading omega value must be
// attained by a unique class (otherwise there is no leading unit).
template <typename Coef>
NovikovSeries<Coef> invert(const NovikovSeries<Coef>& u, const Rat& target) {
    auto lead = u.leading();
    if (!lead) {
        if (u.is_zero() && !u.floor) throw contract_error("invert: exact zero is not a unit");
        throw data_error("invert: no well-defined leading term (zero to precision, or the "
                         "maximal omega value is attained more than once)");
    }
    const auto& [a0, c0] = *lead;
    if constexpr (std::is_same_v<Coef, Int>) {
        if (c0 != 1 && c0 != -1)
            throw data_error("invert: leading coefficient " + c0.str() +
                             " is not a unit of Z; use the field mode");
    }
    Rat w0 = u.lattice.omega_of(a0);
    if (u.floor && *u.floor - 2 * w0 > target)
        throw precision_error("invert: input floor too shallow for the requested precision");

    // u = c0 e^{a0} (1 - w), all omega(w) < 0
    Coef c0inv;
    if constexpr (std::is_same_v<Coef, Int>)
        c0inv = c0;  // ±1
    else
        c0inv = Coef(1) / c0;
    NovikovSeries<Coef> prefactor =
        NovikovSeries<Coef>::monomial(u.lattice, vec_neg(a0), c0inv);
    NovikovSeries<Coef> w = NovikovSeries<Coef>::one(u.lattice) - (prefactor * u);
    w = w.truncated(Floor(target - w0));  // deeper terms cannot affect the result

    NovikovSeries<Coef> acc = NovikovSeries<Coef>::one(u.lattice);
    NovikovSeries<Coef> pw = w;
    auto mw = w.max_omega();
    if (mw && *mw >= 0) throw data_error("invert: leading term is not strictly dominant");
    while (!pw.is_zero()) {
        acc = acc + pw;
        pw = (pw * w).truncated(Floor(target - w0));
    }
    NovikovSeries<Coef> out = (prefactor * acc).truncated(Floor(target));
    out.floor = Floor(target);
    return out;
}

// --- Novikov complexes ----------------------------------------------------

struct AnchoredCritPoint {
    std::string label;
    int index = 0;
    std::vector<Int> anchor;  // class relative to the chosen base anchor
    Rat action = 0;
    bool operator==(const AnchoredCritPoint& o) const {
        return label == o.label && index == o.index && anchor == o.anchor && action == o.action;
    }
};

// One recorded flow record (p, q, class, signed count). The class is the
// exponent of the contribution to the differential: count * e^{mu}.
struct NovikovFlow {
    std::string from, to;
    std::vector<Int> mu;
    Int count;
};

struct NovikovComplexData {
    CoeffLattice lattice;
    std::vector<AnchoredCritPoint> points;
    std::vector<NovikovFlow> flows;
    Floor data_floor;  // flows with omega(mu) <= data_floor are unrecorded

    const AnchoredCritPoint& point(const std::string& label) const {
        for (const auto& p : points)
            if (p.label == label) return p;
        throw contract_error("NovikovComplexData: unknown point " + label);
    }

    void validate() const {
        for (const auto& f : flows) {
            const auto& a = point(f.from);
            const auto& b = point(f.to);
            if (a.index != b.index + 1)
                throw data_error("NovikovComplexData: flow " + f.from + "->" + f.to +
                                 " not between adjacent indices");
            if (f.mu.size() != lattice.rank)
                throw data_error("NovikovComplexData: class length mismatch");
        }
        // anchors: the action must transform by omega under anchor changes;
        // with anchors stored relative to a base choice this pins
        // action = action_at_base + omega(anchor).
        for (const auto& p : points)
            if (p.anchor.size() != lattice.rank)
                throw data_error("NovikovComplexData: anchor length mismatch");
    }

    // Re-anchor one critical point by A: the anchor shifts by A, the
    // action by omega(A), and differential entries pick up e^{∓A}.
    NovikovComplexData reanchored(const std::string& label, const std::vector<Int>& a) const {
        NovikovComplexData out = *this;
        for (auto& p : out.points)
            if (p.label == label) {
                p.anchor = vec_add(p.anchor, a);
                p.action += lattice.omega_of(a);
            }
        for (auto& f : out.flows) {
            if (f.from == label) f.mu = vec_add(f.mu, vec_neg(a));
            if (f.to == label) f.mu = vec_add(f.mu, a);
        }
        return out;
    }

    std::map<int, std::vector<std::string>> labels_by_index() const {
        std::map<int, std::vector<std::string>> out;
        for (const auto& p : points) out[p.index].push_back(p.label);
        return out;
    }

    // Differential matrices over the Novikov ring, one per degree.
    std::map<int, std::vector<std::vector<NovikovElement>>> boundary_matrices() const {
        validate();
        auto labels = labels_by_index();
        std::map<std::string, std::pair<int, std::size_t>> pos;
        for (auto& [n, ls] : labels)
            for (std::size_t i = 0; i < ls.size(); ++i) pos[ls[i]] = {n, i};
        std::map<int, std::vector<std::vector<NovikovElement>>> out;
        for (auto& [n, ls] : labels) {
            if (!labels.count(n - 1)) continue;
            std::vector<std::vector<NovikovElement>> m(
                labels[n - 1].size(),
                std::vector<NovikovElement>(ls.size(), NovikovElement::zero(lattice)));
            for (auto& row : m)
                for (auto& e : row) e.floor = data_floor;
            for (const auto& f : flows) {
                if (pos[f.from].first != n) continue;
                m[pos[f.to].second][pos[f.from].second] =
                    m[pos[f.to].second][pos[f.from].second] +
                    NovikovElement::monomial(lattice, f.mu, f.count).truncated(data_floor);
            }
            out[n] = std::move(m);
        }
        return out;
    }
};

enum class NovikovMode { z_truncated, q_field };

struct NovikovHomology {
    NovikovMode mode;
    Rat precision;
    bool exact = false;                      // Γ trivial: exact Morse reduction
    std::map<int, FgAbGroup> exact_groups;   // only when exact
    std::map<int, std::size_t> rank;         // rank over the Novikov field
    // Z-mode: leading data of the non-unit pivots left after elimination,
    // valid only to the stated precision
    std::map<int, std::vector<NovikovElement>> elementary;
};

namespace detail {

template <typename Coef>
using SeriesMatrix = std::vector<std::vector<NovikovSeries<Coef>>>;

template <typename Coef>
std::size_t matrix_cols(const SeriesMatrix<Coef>& m) {
    return m.empty() ? 0 : m[0].size();
}

enum class EntryClass { zero, pivotable, ambiguous };

// At precision P: an entry with support above P (or exact and nonzero)
// can act as a pivot; an empty-support entry whose floor is shallower
// than P cannot be certified zero.
template <typename Coef>
EntryClass classify_entry(const NovikovSeries<Coef>& e, const Rat& p) {
    for (const auto& [a, c] : e.terms)
        if (e.lattice.omega_of(a) > p) return EntryClass::pivotable;
    if (!e.floor && !e.terms.empty()) return EntryClass::pivotable;
    if (e.terms.empty() && e.floor && *e.floor > p) return EntryClass::ambiguous;
    return EntryClass::zero;
}

// Working depth for intermediate truncation: deep enough that the floors
// accumulated by pivoting never climb above the requested precision.
template <typename Coef>
Rat working_depth(const SeriesMatrix<Coef>& m, const Rat& precision) {
    Rat w = 0;
    for (const auto& row : m)
        for (const auto& e : row)
            for (const auto& [a, c] : e.terms) {
                Rat v = e.lattice.omega_of(a);
                if (v < 0) v = -v;
                if (v > w) w = v;
            }
    Rat span = (2 * w + 1) * Rat(int(std::min(m.size(), matrix_cols<Coef>(m))) + 1);
    return precision - span;
}

// Gaussian elimination over the Novikov field; returns the rank of the
// structure visible above the requested precision. Throws precision_error
// when a zero decision cannot be certified at this precision.
inline std::size_t field_rank(SeriesMatrix<Rat> m, const Rat& precision) {
    std::size_t rank = 0;
    const std::size_t rows = m.size(), cols = matrix_cols<Rat>(m);
    if (rows == 0 || cols == 0) return 0;
    const Rat deep = working_depth<Rat>(m, precision);
    std::vector<bool> row_used(rows, false);
    while (true) {
        std::optional<Rat> best;
        std::size_t pr = rows, pc = cols;
        bool ambiguous = false;
        for (std::size_t r = 0; r < rows; ++r) {
            if (row_used[r]) continue;
            for (std::size_t c = 0; c < cols; ++c) {
                EntryClass cls = classify_entry(m[r][c], precision);
                if (cls == EntryClass::ambiguous) ambiguous = true;
                if (cls != EntryClass::pivotable) continue;
                auto mo = m[r][c].max_omega();
                if (!best || *mo > *best) {
                    best = *mo;
                    pr = r;
                    pc = c;
                }
            }
        }
        if (pr == rows) {
            if (ambiguous)
                throw precision_error("novikov elimination: entries are zero to precision "
                                      "only; request higher precision");
            break;
        }
        if (!m[pr][pc].leading())
            throw precision_error("novikov elimination: pivot has tied leading classes");
        NovikovElementQ inv = invert(m[pr][pc], deep);
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == pr || row_used[r]) continue;
            if (m[r][pc].is_zero() && !m[r][pc].floor) continue;
            NovikovElementQ factor = m[r][pc] * inv;
            for (std::size_t c = 0; c < cols; ++c)
                m[r][c] = (m[r][c] - factor * m[pr][c]).truncated(Floor(deep));
        }
        row_used[pr] = true;
        ++rank;
    }
    return rank;
}

inline SeriesMatrix<Rat> to_rational_matrix(const SeriesMatrix<Int>& m) {
    SeriesMatrix<Rat> out(m.size());
    for (std::size_t r = 0; r < m.size(); ++r)
        for (const auto& e : m[r]) out[r].push_back(to_rational(e));
    return out;
}

}  // namespace detail

// Homology of a Novikov complex. With a trivial lattice this reduces to
// Morse homology over Z, computed exactly. In field mode (Γ/K of rank 1)
// ranks are exact at the stated precision. In Z-mode, elimination uses
// unit pivots only and the leftover non-unit elementary data is reported
// with its precision stamp.
inline NovikovHomology novikov_homology(const NovikovComplexData& n, NovikovMode mode,
                                        const Rat& precision) {
    NovikovHomology out;
    out.mode = mode;
    out.precision = precision;
    n.validate();

    if (n.lattice.rank == 0) {
        // exact reduction: the ring is Z
        MorseData m;
        for (const auto& p : n.points) m.points.push_back({p.label, p.index});
        for (const auto& f : n.flows) m.flows.push_back({f.from, f.to, f.count});
        out.exact = true;
        out.exact_groups = homology_groups(morse_complex(m));
        for (const auto& [deg, g] : out.exact_groups) out.rank[deg] = g.free_rank;
        return out;
    }

    auto mats = n.boundary_matrices();
    auto labels = n.labels_by_index();

    // d^2 = 0 to precision
    for (auto& [deg, m] : mats) {
        auto above = mats.find(deg + 1);
        if (above == mats.end()) continue;
        const auto& a = m;
        const auto& b = above->second;
        for (std::size_t r = 0; r < a.size(); ++r)
            for (std::size_t c = 0; c < detail::matrix_cols<Int>(b); ++c) {
                NovikovElement acc = NovikovElement::zero(n.lattice);
                for (std::size_t k = 0; k < b.size(); ++k) acc = acc + a[r][k] * b[k][c];
                if (!acc.truncated(Floor(precision)).is_zero())
                    throw data_error("novikov_homology: d^2 != 0 to the requested precision");
            }
    }

    if (mode == NovikovMode::q_field) {
        if (n.lattice.value_rank() != 1)
            throw contract_error("novikov_homology: field mode needs Γ/K of rank 1");
        std::map<int, std::size_t> dims, ranks;
        for (const auto& [deg, ls] : labels) dims[deg] = ls.size();
        for (const auto& [deg, m] : mats)
            ranks[deg] = detail::field_rank(detail::to_rational_matrix(m), precision);
        for (const auto& [deg, dim] : dims) {
            std::size_t r_out = ranks.count(deg) ? ranks[deg] : 0;
            std::size_t r_in = ranks.count(deg + 1) ? ranks[deg + 1] : 0;
            out.rank[deg] = dim - r_out - r_in;
        }
        return out;
    }

    // Z-mode: eliminate with unit pivots, report leftover leading data
    std::map<int, std::size_t> matrix_rank;
    for (auto& [deg, m0] : mats) {
        auto m = m0;
        const std::size_t rows = m.size(), cols = detail::matrix_cols<Int>(m);
        const Rat deep = detail::working_depth<Int>(m, precision);
        std::vector<bool> row_used(rows, false), col_used(cols, false);
        std::size_t units = 0;
        while (true) {
            std::size_t pr = rows, pc = cols;
            std::optional<Rat> best;
            for (std::size_t r = 0; r < rows; ++r) {
                if (row_used[r]) continue;
                for (std::size_t c = 0; c < cols; ++c) {
                    if (col_used[c]) continue;
                    if (detail::classify_entry(m[r][c], precision) !=
                        detail::EntryClass::pivotable)
                        continue;
                    auto lead = m[r][c].leading();
                    if (!lead || (lead->second != 1 && lead->second != -1)) continue;
                    Rat w = n.lattice.omega_of(lead->first);
                    if (!best || w > *best) {
                        best = w;
                        pr = r;
                        pc = c;
                    }
                }
            }
            if (pr == rows) break;
            NovikovElement inv = invert(m[pr][pc], deep);
            for (std::size_t r = 0; r < rows; ++r) {
                if (r == pr || row_used[r]) continue;
                if (m[r][pc].is_zero()) continue;
                NovikovElement factor = m[r][pc] * inv;
                for (std::size_t c = 0; c < cols; ++c)
                    m[r][c] = (m[r][c] - factor * m[pr][c]).truncated(Floor(deep));
            }
            row_used[pr] = true;
            col_used[pc] = true;
            ++units;
        }
        // leftover Schur block: elementary data plus its rank over the field
        std::vector<NovikovElement> leftovers;
        detail::SeriesMatrix<Int> schur;
        for (std::size_t r = 0; r < rows; ++r) {
            if (row_used[r]) continue;
            std::vector<NovikovElement> row;
            for (std::size_t c = 0; c < cols; ++c) {
                if (col_used[c]) continue;
                row.push_back(m[r][c]);
                if (detail::classify_entry(m[r][c], precision) ==
                    detail::EntryClass::pivotable)
                    leftovers.push_back(m[r][c].truncated(Floor(precision)));
            }
            if (!row.empty()) schur.push_back(std::move(row));
        }
        if (!leftovers.empty()) out.elementary[deg] = std::move(leftovers);
        std::size_t field_extra =
            schur.empty() ? 0 : detail::field_rank(detail::to_rational_matrix(schur), precision);
        matrix_rank[deg] = units + field_extra;
    }
    for (const auto& [deg, ls] : labels) {
        std::size_t r_out = matrix_rank.count(deg) ? matrix_rank[deg] : 0;
        std::size_t r_in = matrix_rank.count(deg + 1) ? matrix_rank[deg + 1] : 0;
        out.rank[deg] = ls.size() - r_out - r_in;
    }
    return out;
}

// Collapse the classes onto Γ/ker(ω), re-expressed in a complement basis;
// needed before field-mode homology when ker(ω) is nontrivial.
inline NovikovComplexData reduce_classes_mod_kernel(const NovikovComplexData& n) {
    if (n.lattice.ker.rank() == 0) return n;
    QuotientPresentation q = quotient(Subgroup::full(n.lattice.rank), n.lattice.ker);
    std::vector<Rat> omega;
    for (std::size_t g = 0; g < q.gens(); ++g)
        omega.push_back(n.lattice.omega_of(q.gen_lifts.col(g)));
    NovikovComplexData out;
    out.lattice = CoeffLattice::make(std::move(omega));
    out.data_floor = n.data_floor;
    for (const auto& p : n.points)
        out.points.push_back({p.label, p.index, q.project(p.anchor), p.action});
    for (const auto& f : n.flows) out.flows.push_back({f.from, f.to, q.project(f.mu), f.count});
    return out;
}

// --- family Novikov complexes over the circle -----------------------------

namespace detail {

// Reduced row echelon form over the Novikov field, modifying m in place;
// returns the pivot columns. Used for kernel bases.
inline std::vector<std::size_t> field_rref(SeriesMatrix<Rat>& m, const Rat& precision) {
    std::vector<std::size_t> pivot_cols;
    if (m.empty()) return pivot_cols;
    const std::size_t rows = m.size(), cols = matrix_cols<Rat>(m);
    const Rat deep = working_depth<Rat>(m, precision) - 1;
    std::size_t pr = 0;
    for (std::size_t c = 0; c < cols && pr < rows; ++c) {
        std::size_t best_r = rows;
        std::optional<Rat> best;
        bool ambiguous = false;
        for (std::size_t r = pr; r < rows; ++r) {
            EntryClass cls = classify_entry(m[r][c], precision);
            if (cls == EntryClass::ambiguous) ambiguous = true;
            if (cls != EntryClass::pivotable) continue;
            auto mo = m[r][c].max_omega();
            if (!best || *mo > *best) {
                best = *mo;
                best_r = r;
            }
        }
        if (best_r == rows) {
            if (ambiguous)
                throw precision_error("novikov rref: column is zero to precision only");
            continue;
        }
        std::swap(m[best_r], m[pr]);
        NovikovElementQ inv = invert(m[pr][c], deep);
        for (std::size_t cc = 0; cc < cols; ++cc)
            m[pr][cc] = (m[pr][cc] * inv).truncated(Floor(deep));
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == pr) continue;
            if (m[r][c].is_zero() && !m[r][c].floor) continue;
            NovikovElementQ factor = m[r][c];
            for (std::size_t cc = 0; cc < cols; ++cc)
                m[r][cc] = (m[r][cc] - factor * m[pr][cc]).truncated(Floor(deep));
        }
        pivot_cols.push_back(c);
        ++pr;
    }
    return pivot_cols;
}

// Kernel basis (as columns) of a matrix over the Novikov field.
inline SeriesMatrix<Rat> field_kernel_basis(SeriesMatrix<Rat> m, const CoeffLattice& l,
                                            const Rat& precision) {
    const std::size_t cols = matrix_cols<Rat>(m);
    std::vector<std::size_t> piv = m.empty() ? std::vector<std::size_t>{}
                                             : field_rref(m, precision);
    std::vector<bool> is_pivot(cols, false);
    for (std::size_t c : piv) is_pivot[c] = true;
    SeriesMatrix<Rat> basis(cols);
    std::size_t nker = 0;
    for (std::size_t c = 0; c < cols; ++c)
        if (!is_pivot[c]) ++nker;
    for (std::size_t r = 0; r < cols; ++r)
        basis[r].assign(nker, NovikovElementQ::zero(l));
    std::size_t k = 0;
    for (std::size_t fc = 0; fc < cols; ++fc) {
        if (is_pivot[fc]) continue;
        basis[fc][k] = NovikovElementQ::one(l);
        for (std::size_t p = 0; p < piv.size(); ++p)
            basis[piv[p]][k] = -m[p][fc];
        ++k;
    }
    return basis;
}

inline SeriesMatrix<Rat> series_product(const SeriesMatrix<Rat>& a, const SeriesMatrix<Rat>& b,
                                        const CoeffLattice& l) {
    std::size_t rows = a.size(), inner = matrix_cols<Rat>(a), cols = matrix_cols<Rat>(b);
    SeriesMatrix<Rat> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        out[r].assign(cols, NovikovElementQ::zero(l));
        for (std::size_t k = 0; k < inner; ++k)
            for (std::size_t c = 0; c < cols; ++c)
                out[r][c] = out[r][c] + a[r][k] * b[k][c];
    }
    return out;
}

inline SeriesMatrix<Rat> series_hcat(const SeriesMatrix<Rat>& a, const SeriesMatrix<Rat>& b) {
    SeriesMatrix<Rat> out = a;
    for (std::size_t r = 0; r < out.size(); ++r)
        out[r].insert(out[r].end(), b[r].begin(), b[r].end());
    return out;
}

}  // namespace detail

// One base edge of the two-point circle base: its sign in delta_1, its
// reference-family class, and the fiber transport matrix over the ring.
struct NovikovTransportEdge {
    int sign = 1;
    std::vector<Int> chi;
    detail::SeriesMatrix<Int> matrix;  // rows: target fiber points, cols: source
};

// Over B = S^1 a family of reference points always exists (H^2 = 0); an
// instance is pinned by the class of the generating loop.
struct ReferenceFamilyS1 {
    std::vector<Int> chi_loop;
};

struct FamilyNovikovData {
    std::string name;
    CoeffLattice lattice;
    NovikovComplexData fiber_top, fiber_bot;  // over the index-1 / index-0 base points
    NovikovTransportEdge edge_a, edge_b;

    ReferenceFamilyS1 reference() const {
        return {vec_add(edge_a.chi, vec_neg(edge_b.chi))};
    }

    // Shift the reference family by A (acting on the a-edge): the induced
    // monodromy is rescaled by exactly e^A.
    FamilyNovikovData shifted_reference(const std::vector<Int>& a) const {
        FamilyNovikovData out = *this;
        out.edge_a.chi = vec_add(out.edge_a.chi, a);
        return out;
    }

    // delta_1 = sign_a e^{chi_a} T_a + sign_b e^{chi_b} T_b.
    detail::SeriesMatrix<Int> delta1() const {
        std::size_t rows = fiber_bot.points.size(), cols = fiber_top.points.size();
        detail::SeriesMatrix<Int> out(rows);
        for (auto& r : out) r.assign(cols, NovikovElement::zero(lattice));
        auto add_edge = [&](const NovikovTransportEdge& e) {
            NovikovElement twist =
                NovikovElement::monomial(lattice, e.chi, Int(e.sign));
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c)
                    out[r][c] = out[r][c] + twist * e.matrix[r][c];
        };
        add_edge(edge_a);
        add_edge(edge_b);
        return out;
    }
};

struct FamilyNovikovResult {
    Rat precision;
    std::map<int, std::size_t> total_rank;    // family Novikov homology over the field
    std::map<Bidegree, std::size_t> e2_dim;   // E^2 = E^infty dimensions
};

// Assemble and compute the family Novikov invariants over the field
// Λ_Q. The base is the two-point circle, so E^2 = E^infty and the E^2
// row j is ker/coker of the induced delta_1 on fiber Novikov homology.
inline FamilyNovikovResult family_novikov_assemble(const FamilyNovikovData& d,
                                                   const Rat& precision) {
    if (!(d.fiber_top.lattice == d.lattice) || !(d.fiber_bot.lattice == d.lattice))
        throw data_error("family_novikov: fiber classes are not locally constant "
                         "(lattice mismatch)");
    if (d.lattice.rank > 0 && (d.lattice.value_rank() != 1 || d.lattice.ker.rank() != 0))
        throw contract_error("family_novikov: field mode needs Γ = Z with injective ω; "
                             "reduce classes mod the kernel first");
    d.fiber_top.validate();
    d.fiber_bot.validate();

    FamilyNovikovResult out;
    out.precision = precision;

    auto top_mats = d.fiber_top.boundary_matrices();
    auto bot_mats = d.fiber_bot.boundary_matrices();
    auto top_labels = d.fiber_top.labels_by_index();
    auto bot_labels = d.fiber_bot.labels_by_index();
    detail::SeriesMatrix<Int> delta1 = d.delta1();

    // delta^2 = 0 to precision: delta_1 must be a chain map over the ring
    std::map<std::string, std::pair<int, std::size_t>> tpos, bpos;
    for (auto& [n, ls] : top_labels)
        for (std::size_t i = 0; i < ls.size(); ++i) tpos[ls[i]] = {n, i};
    for (auto& [n, ls] : bot_labels)
        for (std::size_t i = 0; i < ls.size(); ++i) bpos[ls[i]] = {n, i};
    {
        std::size_t nt = d.fiber_top.points.size(), nb = d.fiber_bot.points.size();
        detail::SeriesMatrix<Int> dt(nt), db(nb);
        for (auto& r : dt) r.assign(nt, NovikovElement::zero(d.lattice));
        for (auto& r : db) r.assign(nb, NovikovElement::zero(d.lattice));
        auto fill = [&](const NovikovComplexData& f,
                        std::map<std::string, std::pair<int, std::size_t>>&,
                        detail::SeriesMatrix<Int>& m) {
            std::map<std::string, std::size_t> flat;
            for (std::size_t i = 0; i < f.points.size(); ++i) flat[f.points[i].label] = i;
            for (const auto& fl : f.flows)
                m[flat[fl.to]][flat[fl.from]] =
                    m[flat[fl.to]][flat[fl.from]] +
                    NovikovElement::monomial(f.lattice, fl.mu, fl.count);
        };
        fill(d.fiber_top, tpos, dt);
        fill(d.fiber_bot, bpos, db);
        // chain-map identity d_bot * delta1 = delta1 * d_top, to precision
        for (std::size_t r = 0; r < nb; ++r)
            for (std::size_t c = 0; c < nt; ++c) {
                NovikovElement acc = NovikovElement::zero(d.lattice);
                for (std::size_t k = 0; k < nb; ++k) acc = acc + db[r][k] * delta1[k][c];
                for (std::size_t k = 0; k < nt; ++k) acc = acc - delta1[r][k] * dt[k][c];
                if (!acc.truncated(Floor(precision)).is_zero())
                    throw data_error("family_novikov: delta^2 != 0 to the requested precision");
            }
    }

    // per fiber degree j: dims of fiber homology and the rank of the
    // induced map, over the field
    auto restrict_delta1 = [&](int j) {
        auto rows_j = bot_labels.count(j) ? bot_labels[j] : std::vector<std::string>{};
        auto cols_j = top_labels.count(j) ? top_labels[j] : std::vector<std::string>{};
        std::map<std::string, std::size_t> tflat, bflat;
        for (std::size_t i = 0; i < d.fiber_top.points.size(); ++i)
            tflat[d.fiber_top.points[i].label] = i;
        for (std::size_t i = 0; i < d.fiber_bot.points.size(); ++i)
            bflat[d.fiber_bot.points[i].label] = i;
        detail::SeriesMatrix<Rat> m(rows_j.size());
        for (std::size_t r = 0; r < rows_j.size(); ++r) {
            m[r].assign(cols_j.size(), NovikovElementQ::zero(d.lattice));
            for (std::size_t c = 0; c < cols_j.size(); ++c)
                m[r][c] = to_rational(delta1[bflat[rows_j[r]]][tflat[cols_j[c]]]);
        }
        return m;
    };

    std::set<int> degrees;
    for (auto& [n, ls] : top_labels) degrees.insert(n);
    for (auto& [n, ls] : bot_labels) degrees.insert(n);

    auto rank_of = [&](std::map<int, detail::SeriesMatrix<Int>>& mats, int n) -> std::size_t {
        auto it = mats.find(n);
        if (it == mats.end()) return 0;
        return detail::field_rank(detail::to_rational_matrix(it->second), precision);
    };

    for (int j : degrees) {
        std::size_t top_dim = top_labels.count(j) ? top_labels[j].size() : 0;
        std::size_t bot_dim = bot_labels.count(j) ? bot_labels[j].size() : 0;
        std::size_t ht = top_dim - rank_of(top_mats, j) - rank_of(top_mats, j + 1);
        std::size_t hb = bot_dim - rank_of(bot_mats, j) - rank_of(bot_mats, j + 1);

        // induced map rank on homology: rank[d1 Z | B_bot] - rank[B_bot]
        std::size_t rho = 0;
        if (ht && hb) {
            auto dt_j = top_mats.count(j) ? detail::to_rational_matrix(top_mats[j])
                                          : detail::SeriesMatrix<Rat>{};
            detail::SeriesMatrix<Rat> z;
            if (dt_j.empty()) {
                // no outgoing differential: all of C_j is cycles
                z.assign(top_dim, {});
                for (std::size_t r = 0; r < top_dim; ++r) {
                    z[r].assign(top_dim, NovikovElementQ::zero(d.lattice));
                    z[r][r] = NovikovElementQ::one(d.lattice);
                }
            } else {
                z = detail::field_kernel_basis(dt_j, d.lattice, precision);
            }
            detail::SeriesMatrix<Rat> dz =
                detail::series_product(restrict_delta1(j), z, d.lattice);
            detail::SeriesMatrix<Rat> bb;
            if (bot_mats.count(j + 1)) {
                bb = detail::to_rational_matrix(bot_mats[j + 1]);
            } else {
                bb.assign(bot_dim, {});
                for (auto& r : bb) r.assign(0, NovikovElementQ::zero(d.lattice));
            }
            std::size_t rank_bb = bb.empty() || detail::matrix_cols<Rat>(bb) == 0
                                      ? 0
                                      : detail::field_rank(bb, precision);
            std::size_t rank_both = detail::field_rank(detail::series_hcat(dz, bb), precision);
            rho = rank_both - rank_bb;
        }
        if (ht) out.e2_dim[{1, j}] = ht - rho;
        if (hb) out.e2_dim[{0, j}] = hb - rho;
        if (out.e2_dim.count({1, j}) && out.e2_dim[{1, j}] == 0) out.e2_dim.erase({1, j});
        if (out.e2_dim.count({0, j}) && out.e2_dim[{0, j}] == 0) out.e2_dim.erase({0, j});
    }

    // total homology from the two-column E^infty = E^2
    for (const auto& [key, dim] : out.e2_dim) out.total_rank[key.first + key.second] += dim;
    return out;
}

template <typename Coef>
NovikovSeries<Coef> project_series(const NovikovSeries<Coef>& e, const QuotientPresentation& q,
                                   const CoeffLattice& target) {
    NovikovSeries<Coef> out(target);
    out.floor = e.floor;
    for (const auto& [cls, c] : e.terms) {
        auto key = q.project(cls);
        auto [it, fresh] = out.terms.try_emplace(key, c);
        if (!fresh) {
            it->second += c;
            if (it->second == Coef(0)) out.terms.erase(it);
        }
    }
    out.drop_below_floor();
    return out;
}

// Collapse all recorded classes onto Γ/ker(ω); after this the data
// qualifies for the field mode.
inline FamilyNovikovData reduce_mod_kernel(const FamilyNovikovData& d) {
    if (d.lattice.ker.rank() == 0) return d;
    QuotientPresentation q = quotient(Subgroup::full(d.lattice.rank), d.lattice.ker);
    std::vector<Rat> omega;
    for (std::size_t g = 0; g < q.gens(); ++g)
        omega.push_back(d.lattice.omega_of(q.gen_lifts.col(g)));
    CoeffLattice lat = CoeffLattice::make(std::move(omega));
    FamilyNovikovData out;
    out.name = d.name + "/modK";
    out.lattice = lat;
    out.fiber_top = reduce_classes_mod_kernel(d.fiber_top);
    out.fiber_bot = reduce_classes_mod_kernel(d.fiber_bot);
    auto conv_edge = [&](const NovikovTransportEdge& e) {
        NovikovTransportEdge ne;
        ne.sign = e.sign;
        ne.chi = q.project(e.chi);
        ne.matrix.resize(e.matrix.size());
        for (std::size_t r = 0; r < e.matrix.size(); ++r)
            for (const auto& el : e.matrix[r])
                ne.matrix[r].push_back(project_series(el, q, lat));
        return ne;
    };
    out.edge_a = conv_edge(d.edge_a);
    out.edge_b = conv_edge(d.edge_b);
    return out;
}

// The two assembled complexes of reference families differing by A carry
// monodromy data differing by exactly the unit e^A; page dimensions agree.
struct RescalingCheck {
    bool monodromy_rescaled = false;
    bool pages_isomorphic = false;
    bool ok() const { return monodromy_rescaled && pages_isomorphic; }
};

inline RescalingCheck reference_rescaling_check(const FamilyNovikovData& d,
                                                const std::vector<Int>& a,
                                                const Rat& precision) {
    RescalingCheck out;
    FamilyNovikovData shifted = d.shifted_reference(a);
    // edge data: (e^{chi_a'} T_a) = e^A (e^{chi_a} T_a) exactly, edge b unchanged
    NovikovElement ea = NovikovElement::monomial(d.lattice, a, Int(1));
    out.monodromy_rescaled = true;
    for (std::size_t r = 0; r < d.edge_a.matrix.size(); ++r)
        for (std::size_t c = 0; c < d.edge_a.matrix[r].size(); ++c) {
            NovikovElement lhs =
                NovikovElement::monomial(d.lattice, shifted.edge_a.chi, Int(1)) *
                shifted.edge_a.matrix[r][c];
            NovikovElement rhs = ea *
                                 NovikovElement::monomial(d.lattice, d.edge_a.chi, Int(1)) *
                                 d.edge_a.matrix[r][c];
            if (!(lhs == rhs)) out.monodromy_rescaled = false;
        }
    // reference classes differ by A on the loop
    std::vector<Int> loop_diff =
        vec_add(shifted.reference().chi_loop, vec_neg(d.reference().chi_loop));
    if (loop_diff != a) out.monodromy_rescaled = false;

    FamilyNovikovResult r1 = family_novikov_assemble(reduce_mod_kernel(d), precision);
    FamilyNovikovResult r2 = family_novikov_assemble(reduce_mod_kernel(shifted), precision);
    out.pages_isomorphic = r1.e2_dim == r2.e2_dim && r1.total_rank == r2.total_rank;
    return out;
}

}  // namespace morsefam
