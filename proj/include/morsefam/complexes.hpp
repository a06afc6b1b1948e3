#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "morsefam/presented.hpp"

namespace morsefam {

using Bidegree = std::pair<int, int>;  // (filtration column i, complementary degree j)

// Finite free Z-chain complex, homological convention (the differential
// lowers degree). Basis elements carry string labels so that every
// generator of an assembled complex stays traceable. d^2 = 0 is checked
// eagerly: invalid complexes cannot be instantiated.
class GradedComplex {
  public:
    GradedComplex() = default;

    static GradedComplex build(std::map<int, std::vector<std::string>> labels,
                               std::map<int, IntMatrix> diffs) {
        GradedComplex c;
        c.labels_ = std::move(labels);
        for (auto it = c.labels_.begin(); it != c.labels_.end();)
            it = it->second.empty() ? c.labels_.erase(it) : std::next(it);
        for (auto& [n, m] : diffs) {
            if (m.rows() != c.dim(n - 1) || m.cols() != c.dim(n))
                throw contract_error("GradedComplex: differential shape at degree " +
                                     std::to_string(n));
            if (!m.is_zero()) c.diff_[n] = std::move(m);
        }
        for (const auto& [n, m] : c.diff_) {
            IntMatrix dd = c.differential(n - 1) * m;
            if (!dd.is_zero())
                throw data_error("GradedComplex: d^2 != 0 at degree " + std::to_string(n));
        }
        return c;
    }

    bool empty() const { return labels_.empty(); }
    int lo() const { return empty() ? 0 : labels_.begin()->first; }
    int hi() const { return empty() ? -1 : labels_.rbegin()->first; }

    std::size_t dim(int n) const {
        auto it = labels_.find(n);
        return it == labels_.end() ? 0 : it->second.size();
    }

    const std::vector<std::string>& labels(int n) const {
        static const std::vector<std::string> none;
        auto it = labels_.find(n);
        return it == labels_.end() ? none : it->second;
    }

    IntMatrix differential(int n) const {
        auto it = diff_.find(n);
        return it == diff_.end() ? IntMatrix(dim(n - 1), dim(n)) : it->second;
    }

    std::size_t total_rank() const {
        std::size_t t = 0;
        for (const auto& [n, l] : labels_) t += l.size();
        return t;
    }

    // Algebraic dual: C^n re-housed in homological degree (shift - n).
    GradedComplex dual(int shift = 0) const {
        std::map<int, std::vector<std::string>> labels;
        std::map<int, IntMatrix> diffs;
        for (const auto& [n, l] : labels_) {
            auto& out = labels[shift - n];
            for (const auto& s : l) out.push_back(s + "*");
        }
        for (int n = lo(); n <= hi(); ++n) {
            IntMatrix dt = differential(n).transpose();  // C^{n-1} -> C^n
            if (!dt.is_zero()) diffs[shift - (n - 1)] = dt;
        }
        return build(std::move(labels), std::move(diffs));
    }

  private:
    std::map<int, std::vector<std::string>> labels_;
    std::map<int, IntMatrix> diff_;
};

// H_n = ker d_n / im d_{n+1}, with cycle-representative access through
// the presentation lifts.
inline std::map<int, QuotientPresentation> homology(const GradedComplex& c) {
    std::map<int, QuotientPresentation> h;
    for (int n = c.lo(); n <= c.hi(); ++n) {
        if (c.dim(n) == 0) continue;
        Subgroup cycles = kernel(c.differential(n));
        Subgroup boundaries = image(c.differential(n + 1));
        h[n] = quotient(cycles, boundaries);
    }
    return h;
}

inline std::map<int, FgAbGroup> homology_groups(const GradedComplex& c) {
    std::map<int, FgAbGroup> out;
    for (auto& [n, q] : homology(c)) out[n] = q.group;
    return out;
}

struct FiltrationViolation {
    int degree;
    std::string source_label;  // generator whose boundary raises the level
    std::string target_label;
};

// GradedComplex whose basis elements carry a filtration level; the
// differential must map F_i into F_i.
class FilteredComplex {
  public:
    FilteredComplex() = default;

    static FilteredComplex build(GradedComplex complex, std::map<int, std::vector<int>> levels) {
        FilteredComplex f;
        f.complex_ = std::move(complex);
        f.levels_ = std::move(levels);
        for (int n = f.complex_.lo(); n <= f.complex_.hi(); ++n)
            if (f.levels_[n].size() != f.complex_.dim(n))
                throw contract_error("FilteredComplex: level count mismatch at degree " +
                                     std::to_string(n));
        if (auto v = f.check_levels())
            throw data_error("FilteredComplex: differential raises level of " + v->source_label +
                             " to " + v->target_label);
        return f;
    }

    // Plain complex with every generator at level 0.
    static FilteredComplex at_level_zero(GradedComplex complex) {
        std::map<int, std::vector<int>> levels;
        for (int n = complex.lo(); n <= complex.hi(); ++n)
            levels[n] = std::vector<int>(complex.dim(n), 0);
        return build(std::move(complex), std::move(levels));
    }

    const GradedComplex& complex() const { return complex_; }
    int level(int n, std::size_t idx) const { return levels_.at(n)[idx]; }
    const std::vector<int>& levels(int n) const {
        static const std::vector<int> none;
        auto it = levels_.find(n);
        return it == levels_.end() ? none : it->second;
    }

    int min_level() const {
        int m = 0;
        bool first = true;
        for (const auto& [n, ls] : levels_)
            for (int l : ls) {
                if (first || l < m) m = l;
                first = false;
            }
        return m;
    }
    int max_level() const {
        int m = 0;
        bool first = true;
        for (const auto& [n, ls] : levels_)
            for (int l : ls) {
                if (first || l > m) m = l;
                first = false;
            }
        return m;
    }

    std::optional<FiltrationViolation> check_levels() const {
        for (int n = complex_.lo(); n <= complex_.hi(); ++n) {
            IntMatrix d = complex_.differential(n);
            for (std::size_t c = 0; c < d.cols(); ++c)
                for (std::size_t r = 0; r < d.rows(); ++r)
                    if (d(r, c) != 0 && level(n - 1, r) > level(n, c))
                        return FiltrationViolation{n, complex_.labels(n)[c],
                                                   complex_.labels(n - 1)[r]};
        }
        return std::nullopt;
    }

  private:
    GradedComplex complex_;
    std::map<int, std::vector<int>> levels_;
};

// Confirms d^2 = 0 and filtration preservation for data that may not have
// gone through the validating constructors (e.g. freshly deserialized).
inline std::optional<FiltrationViolation> verify_filtered(const FilteredComplex& f) {
    return f.check_levels();
}

// Degree-preserving map of complexes, stored per degree.
struct ChainMap {
    std::map<int, IntMatrix> components;

    IntMatrix component(const GradedComplex& src, const GradedComplex& dst, int n) const {
        auto it = components.find(n);
        return it == components.end() ? IntMatrix(dst.dim(n), src.dim(n)) : it->second;
    }

    static ChainMap identity(const GradedComplex& c) {
        ChainMap m;
        for (int n = c.lo(); n <= c.hi(); ++n)
            if (c.dim(n)) m.components[n] = IntMatrix::identity(c.dim(n));
        return m;
    }
};

struct ChainMapResidual {
    int degree;
    IntMatrix residual;
};

// d' Phi - Phi d, per degree; empty when Phi is a chain map.
inline std::vector<ChainMapResidual> verify_chain_map(const GradedComplex& src,
                                                      const GradedComplex& dst,
                                                      const ChainMap& phi) {
    std::vector<ChainMapResidual> bad;
    int lo = std::min(src.lo(), dst.lo()), hi = std::max(src.hi(), dst.hi());
    for (int n = lo; n <= hi; ++n) {
        IntMatrix lhs = dst.differential(n) * phi.component(src, dst, n);
        IntMatrix rhs = phi.component(src, dst, n - 1) * src.differential(n);
        IntMatrix res = lhs - rhs;
        if (!res.is_zero()) bad.push_back({n, std::move(res)});
    }
    return bad;
}

// Filtered chain map: additionally maps F_i into F_i.
inline bool chain_map_preserves_levels(const FilteredComplex& src, const FilteredComplex& dst,
                                       const ChainMap& phi) {
    for (int n = src.complex().lo(); n <= src.complex().hi(); ++n) {
        IntMatrix m = phi.component(src.complex(), dst.complex(), n);
        for (std::size_t c = 0; c < m.cols(); ++c)
            for (std::size_t r = 0; r < m.rows(); ++r)
                if (m(r, c) != 0 && dst.level(n, r) > src.level(n, c)) return false;
    }
    return true;
}

// Degree +1 homotopy K. For the filtered variant K may raise the level
// by at most one.
struct FilteredHomotopy {
    std::map<int, IntMatrix> components;  // K_n: C_n -> C'_{n+1}

    IntMatrix component(const GradedComplex& src, const GradedComplex& dst, int n) const {
        auto it = components.find(n);
        return it == components.end() ? IntMatrix(dst.dim(n + 1), src.dim(n)) : it->second;
    }
};

// d K + K d - Phi0 + Phi1, per degree; empty result means the homotopy
// identity d K + K d = Phi0 - Phi1 holds.
inline std::vector<ChainMapResidual> verify_homotopy(const GradedComplex& src,
                                                     const GradedComplex& dst,
                                                     const FilteredHomotopy& K,
                                                     const ChainMap& phi0, const ChainMap& phi1) {
    std::vector<ChainMapResidual> bad;
    int lo = std::min(src.lo(), dst.lo()), hi = std::max(src.hi(), dst.hi());
    for (int n = lo; n <= hi; ++n) {
        IntMatrix res = dst.differential(n + 1) * K.component(src, dst, n) +
                        K.component(src, dst, n - 1) * src.differential(n) -
                        phi0.component(src, dst, n) + phi1.component(src, dst, n);
        if (!res.is_zero()) bad.push_back({n, std::move(res)});
    }
    return bad;
}

inline bool homotopy_level_bound(const FilteredComplex& src, const FilteredComplex& dst,
                                 const FilteredHomotopy& K) {
    for (int n = src.complex().lo(); n <= src.complex().hi(); ++n) {
        IntMatrix m = K.component(src.complex(), dst.complex(), n);
        for (std::size_t c = 0; c < m.cols(); ++c)
            for (std::size_t r = 0; r < m.rows(); ++r)
                if (m(r, c) != 0 && dst.level(n + 1, r) > src.level(n, c) + 1) return false;
    }
    return true;
}

// Degree +2 map with d L - L d = K0 - K1.
inline std::vector<ChainMapResidual> verify_second_homotopy(
    const GradedComplex& src, const GradedComplex& dst, const std::map<int, IntMatrix>& L,
    const FilteredHomotopy& K0, const FilteredHomotopy& K1) {
    auto comp = [&](int n) {
        auto it = L.find(n);
        return it == L.end() ? IntMatrix(dst.dim(n + 2), src.dim(n)) : it->second;
    };
    std::vector<ChainMapResidual> bad;
    int lo = std::min(src.lo(), dst.lo()), hi = std::max(src.hi(), dst.hi());
    for (int n = lo; n <= hi; ++n) {
        IntMatrix res = dst.differential(n + 2) * comp(n) - comp(n - 1) * src.differential(n) -
                        K0.component(src, dst, n) + K1.component(src, dst, n);
        if (!res.is_zero()) bad.push_back({n, std::move(res)});
    }
    return bad;
}

}  // namespace morsefam
