#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "morsefam/builtins.hpp"
#include "morsefam/novikov.hpp"

using namespace morsefam;

namespace {

CoeffLattice rank1(const Rat& w = Rat(-1)) { return CoeffLattice::make({w}); }

NovikovElement mono(const CoeffLattice& l, long long k, long long c) {
    return NovikovElement::monomial(l, {Int(k)}, Int(c));
}

// Circle with a Morse 1-form of class c != 0: two generators, the two
// flow arcs differ by the fundamental loop.
NovikovComplexData circle_one_form(const CoeffLattice& l, const Int& scale = 1) {
    NovikovComplexData n;
    n.lattice = l;
    n.points = {{"p", 1, {Int(0)}, Rat(0)}, {"q", 0, {Int(0)}, Rat(0)}};
    n.flows = {{"p", "q", {Int(0)}, scale}, {"p", "q", {Int(1)}, -scale}};
    return n;
}

}  // namespace

TEST_CASE("novikov ring operations") {
    CoeffLattice l = rank1();
    NovikovElement one = NovikovElement::one(l);

    SECTION("1 * x = x at any precision") {
        NovikovElement x = mono(l, 0, 3) + mono(l, 2, -5);
        REQUIRE(one * x == x);
        NovikovElement xf = x.truncated(Floor(Rat(-4)));
        REQUIRE(one * xf == xf);
    }
    SECTION("(1 - e^A)(1 + e^A + e^2A) = 1 - e^3A, so = 1 to precision w(3A)") {
        NovikovElement u = one - mono(l, 1, 1);
        NovikovElement v = one + mono(l, 1, 1) + mono(l, 2, 1);
        NovikovElement prod = u * v;
        REQUIRE(prod == one - mono(l, 3, 1));
        REQUIRE(prod.agrees_with(one, Floor(Rat(-3))));
        REQUIRE_FALSE(prod.agrees_with(one, Floor(Rat(-4))));
    }
    SECTION("commutativity against a brute-force convolution oracle") {
        std::mt19937_64 rng(40);
        std::uniform_int_distribution<int> kdist(-3, 3), cdist(-4, 4);
        for (int t = 0; t < 30; ++t) {
            NovikovElement a = NovikovElement::zero(l), b = NovikovElement::zero(l);
            for (int i = 0; i < 5; ++i) {
                a = a + mono(l, kdist(rng), cdist(rng));
                b = b + mono(l, kdist(rng), cdist(rng));
            }
            NovikovElement ab = a * b;
            REQUIRE(ab == b * a);
            // oracle: all pairwise products
            std::map<Int, Int> conv;
            for (const auto& [ka, ca] : a.terms)
                for (const auto& [kb, cb] : b.terms) {
                    Int key = ka[0] + kb[0];
                    conv[key] += ca * cb;
                }
            for (const auto& [k, c] : conv) {
                auto it = ab.terms.find({k});
                if (c == 0)
                    REQUIRE(it == ab.terms.end());
                else {
                    REQUIRE(it != ab.terms.end());
                    REQUIRE(it->second == c);
                }
            }
        }
    }
    SECTION("product floor rule") {
        // u known above -2, v exact with max omega 0: unknown tail of u
        // times v reaches up to -2; the documented floor is the max rule
        NovikovElement u = mono(l, 0, 1).truncated(Floor(Rat(-2)));
        NovikovElement v = NovikovElement::one(l) + mono(l, 1, 5);
        NovikovElement uv = u * v;
        REQUIRE(uv.floor == Floor(Rat(-2)));
        NovikovElement w = mono(l, 1, 2).truncated(Floor(Rat(-3)));
        // floors -2 and -3, max omegas 0 and -1: max(-2 + -1, -3 + 0, -5) = -3
        REQUIRE((u * w).floor == Floor(Rat(-3)));
    }
}

TEST_CASE("novikov inversion") {
    CoeffLattice l = rank1();
    NovikovElement one = NovikovElement::one(l);
    SECTION("invert(1) = 1") {
        NovikovElement inv = invert(one, Rat(-5));
        REQUIRE(inv.agrees_with(one, Floor(Rat(-5))));
    }
    SECTION("geometric series: invert(1 - e^A) to precision -3") {
        NovikovElement u = one - mono(l, 1, 1);
        NovikovElement inv = invert(u, Rat(-3));
        NovikovElement expect = one + mono(l, 1, 1) + mono(l, 2, 1);
        REQUIRE(inv.agrees_with(expect, Floor(Rat(-3))));
        REQUIRE((u * inv).agrees_with(one, Floor(Rat(-3))));
    }
    SECTION("u * invert(u) = 1 to every requested precision; refinement is monotone") {
        std::mt19937_64 rng(41);
        std::uniform_int_distribution<int> kdist(1, 3), cdist(-3, 3);
        for (int t = 0; t < 20; ++t) {
            NovikovElement u = (t % 2 ? one : -one);
            for (int i = 0; i < 3; ++i) u = u + mono(l, kdist(rng), cdist(rng));
            NovikovElement shallow = invert(u, Rat(-4));
            NovikovElement deep = invert(u, Rat(-9));
            REQUIRE((u * shallow).agrees_with(one, Floor(Rat(-4))));
            REQUIRE((u * deep).agrees_with(one, Floor(Rat(-9))));
            // already-reported terms never change when precision increases
            REQUIRE(deep.agrees_with(shallow, Floor(Rat(-4))));
        }
    }
    SECTION("invert(2 - e^A): refused over Z, fine over Q") {
        NovikovElement u = one.scaled(Int(2)) - mono(l, 1, 1);
        REQUIRE_THROWS_AS(invert(u, Rat(-3)), data_error);
        NovikovElementQ uq = to_rational(u);
        NovikovElementQ inv = invert(uq, Rat(-3));
        REQUIRE((uq * inv).agrees_with(NovikovElementQ::one(l), Floor(Rat(-3))));
        // leading coefficient of the inverse is 1/2
        REQUIRE(inv.terms.at({Int(0)}) == Rat(1, 2));
    }
    SECTION("tied leading classes are refused") {
        CoeffLattice l2 = CoeffLattice::make({Rat(-1), Rat(-1)});
        NovikovElement u = NovikovElement::monomial(l2, {Int(1), Int(0)}, Int(1)) +
                           NovikovElement::monomial(l2, {Int(0), Int(1)}, Int(1));
        REQUIRE_THROWS_AS(invert(u, Rat(-5)), data_error);
    }
}

TEST_CASE("novikov homology") {
    SECTION("trivial lattice reduces exactly to Morse homology") {
        for (const auto& name : {"klein", "torus-trivial"}) {
            MorseData base = builtins::descriptor_by_name(name).base;
            NovikovComplexData n;
            n.lattice = CoeffLattice::make({});
            for (const auto& p : base.points) n.points.push_back({p.label, p.index, {}, Rat(0)});
            for (const auto& f : base.flows) n.flows.push_back({f.from, f.to, {}, f.count});
            NovikovHomology h = novikov_homology(n, NovikovMode::z_truncated, Rat(-5));
            REQUIRE(h.exact);
            REQUIRE(h.exact_groups == homology_groups(morse_complex(base)));
        }
    }
    SECTION("circle with nonzero class is acyclic") {
        NovikovComplexData n = circle_one_form(rank1());
        NovikovHomology hq = novikov_homology(n, NovikovMode::q_field, Rat(-6));
        REQUIRE(hq.rank[0] == 0);
        REQUIRE(hq.rank[1] == 0);
        NovikovHomology hz = novikov_homology(n, NovikovMode::z_truncated, Rat(-6));
        REQUIRE(hz.rank[0] == 0);
        REQUIRE(hz.rank[1] == 0);
        REQUIRE(hz.elementary.empty());  // the unit pivot clears everything
    }
    SECTION("2(1 - e^A): zero over the field, Z/2-like leftover over Z") {
        NovikovComplexData n = circle_one_form(rank1(), 2);
        NovikovHomology hq = novikov_homology(n, NovikovMode::q_field, Rat(-6));
        REQUIRE(hq.rank[0] == 0);
        REQUIRE(hq.rank[1] == 0);
        for (const Rat& prec : {Rat(-4), Rat(-8), Rat(-16)}) {
            NovikovHomology hz = novikov_homology(n, NovikovMode::z_truncated, prec);
            REQUIRE(hz.rank[0] == 0);
            REQUIRE(hz.rank[1] == 0);
            REQUIRE(hz.elementary.count(1) == 1);
            REQUIRE(hz.elementary[1].size() == 1);
            auto lead = hz.elementary[1][0].leading();
            REQUIRE(lead.has_value());
            REQUIRE(abs_int(lead->second) == 2);
        }
    }
    SECTION("d^2 != 0 data is rejected") {
        NovikovComplexData n;
        n.lattice = rank1();
        n.points = {{"a", 2, {Int(0)}, Rat(0)},
                    {"b", 1, {Int(0)}, Rat(0)},
                    {"c", 0, {Int(0)}, Rat(0)}};
        n.flows = {{"a", "b", {Int(0)}, 1}, {"b", "c", {Int(0)}, 1}};
        REQUIRE_THROWS_AS(novikov_homology(n, NovikovMode::q_field, Rat(-4)), data_error);
    }
    SECTION("shallow data floor raises an explicit precision error") {
        NovikovComplexData n = circle_one_form(rank1());
        n.data_floor = Floor(Rat(-2));  // flows below -2 unrecorded
        REQUIRE_THROWS_AS(novikov_homology(n, NovikovMode::q_field, Rat(-10)),
                          precision_error);
    }
    SECTION("re-anchoring shifts the action by omega(A) and keeps homology") {
        NovikovComplexData n = circle_one_form(rank1());
        NovikovComplexData m = n.reanchored("p", {Int(3)});
        REQUIRE(m.point("p").action == n.point("p").action + Rat(-3));
        NovikovHomology h1 = novikov_homology(n, NovikovMode::q_field, Rat(-8));
        NovikovHomology h2 = novikov_homology(m, NovikovMode::q_field, Rat(-8));
        REQUIRE(h1.rank == h2.rank);
    }
    SECTION("kernel reduction") {
        CoeffLattice l2 = CoeffLattice::make({Rat(-1), Rat(0)});
        REQUIRE(l2.ker.rank() == 1);
        NovikovComplexData n;
        n.lattice = l2;
        n.points = {{"p", 1, {Int(0), Int(0)}, Rat(0)}, {"q", 0, {Int(0), Int(0)}, Rat(0)}};
        n.flows = {{"p", "q", {Int(0), Int(0)}, 1}, {"p", "q", {Int(1), Int(2)}, -1}};
        NovikovComplexData r = reduce_classes_mod_kernel(n);
        REQUIRE(r.lattice.rank == 1);
        NovikovHomology h = novikov_homology(r, NovikovMode::q_field, Rat(-8));
        REQUIRE(h.rank[0] == 0);
        REQUIRE(h.rank[1] == 0);
    }
}

TEST_CASE("family novikov over the circle") {
    CoeffLattice l = rank1();

    auto identity_edges = [&](FamilyNovikovData& d, std::size_t n) {
        d.edge_a.sign = 1;
        d.edge_b.sign = -1;
        d.edge_a.chi = std::vector<Int>(d.lattice.rank, Int(0));
        d.edge_b.chi = std::vector<Int>(d.lattice.rank, Int(0));
        d.edge_a.matrix.assign(n, std::vector<NovikovElement>(n, NovikovElement::zero(d.lattice)));
        d.edge_b.matrix = d.edge_a.matrix;
        for (std::size_t i = 0; i < n; ++i) {
            d.edge_a.matrix[i][i] = NovikovElement::one(d.lattice);
            d.edge_b.matrix[i][i] = NovikovElement::one(d.lattice);
        }
    };

    SECTION("trivial T^2 bundle with nonzero fiber class is acyclic") {
        FamilyNovikovData d;
        d.name = "t2-oneform";
        d.lattice = l;
        d.fiber_top = circle_one_form(l);
        d.fiber_bot = circle_one_form(l);
        identity_edges(d, 2);
        FamilyNovikovResult r = family_novikov_assemble(d, Rat(-8));
        REQUIRE(r.e2_dim.empty());
        REQUIRE(r.total_rank.empty());
    }
    SECTION("exact forms reduce to the family module output over Z ⊂ Λ") {
        CoeffLattice l0 = CoeffLattice::make({});
        FamilyNovikovData d;
        d.name = "torus-exact";
        d.lattice = l0;
        NovikovComplexData fib;
        fib.lattice = l0;
        fib.points = {{"q1", 1, {}, Rat(0)}, {"q0", 0, {}, Rat(0)}};
        fib.flows = {{"q1", "q0", {}, 1}, {"q1", "q0", {}, -1}};
        d.fiber_top = fib;
        d.fiber_bot = fib;
        identity_edges(d, 2);
        FamilyNovikovResult r = family_novikov_assemble(d, Rat(-4));
        // matches the Q-ranks of the trivial torus family
        FamilyComplex fc = assemble(builtins::torus_trivial());
        Page p2 = page(fc.filtered, 2);
        for (const auto& [key, q] : p2.entries)
            REQUIRE(r.e2_dim[key] == q.group.free_rank);
        REQUIRE(r.total_rank[0] == 1);
        REQUIRE(r.total_rank[1] == 2);
        REQUIRE(r.total_rank[2] == 1);
    }
    SECTION("monodromy twisted by e^chi: E^2_{0,j} = coker(1 - e^chi Phi)") {
        // stalk Λ (one fiber point), Phi = [1]: 1 - e^chi is a unit when
        // omega(chi) != 0, so both E^2 entries vanish
        FamilyNovikovData d;
        d.name = "seidel-twist";
        d.lattice = l;
        NovikovComplexData pt;
        pt.lattice = l;
        pt.points = {{"c", 0, {Int(0)}, Rat(0)}};
        d.fiber_top = pt;
        d.fiber_bot = pt;
        identity_edges(d, 1);
        d.edge_a.chi = {Int(1)};  // monodromy e^chi, omega(chi) = -1
        FamilyNovikovResult r = family_novikov_assemble(d, Rat(-8));
        REQUIRE(r.e2_dim.empty());
        // chi = 0 instead: coker(1 - 1) = Λ at both corners
        d.edge_a.chi = {Int(0)};
        FamilyNovikovResult r0 = family_novikov_assemble(d, Rat(-8));
        REQUIRE(r0.e2_dim[{0, 0}] == 1);
        REQUIRE(r0.e2_dim[{1, 0}] == 1);
    }
    SECTION("reference rescaling: A = 0 and a nonzero shift") {
        FamilyNovikovData d;
        d.lattice = l;
        d.fiber_top = circle_one_form(l);
        d.fiber_bot = circle_one_form(l);
        identity_edges(d, 2);
        RescalingCheck c0 = reference_rescaling_check(d, {Int(0)}, Rat(-8));
        REQUIRE(c0.ok());
        RescalingCheck c1 = reference_rescaling_check(d, {Int(2)}, Rat(-8));
        REQUIRE(c1.ok());
        // the loop class really shifted
        REQUIRE(d.shifted_reference({Int(2)}).reference().chi_loop ==
                std::vector<Int>{Int(2)});
    }
    SECTION("shift by A in ker(omega): a unit of omega-value 0") {
        CoeffLattice l2 = CoeffLattice::make({Rat(-1), Rat(0)});
        FamilyNovikovData d;
        d.lattice = l2;
        NovikovComplexData pt;
        pt.lattice = l2;
        pt.points = {{"c", 0, {Int(0), Int(0)}, Rat(0)}};
        d.fiber_top = pt;
        d.fiber_bot = pt;
        d.edge_a.sign = 1;
        d.edge_b.sign = -1;
        d.edge_a.chi = {Int(0), Int(0)};
        d.edge_b.chi = {Int(0), Int(0)};
        d.edge_a.matrix = {{NovikovElement::one(l2)}};
        d.edge_b.matrix = {{NovikovElement::one(l2)}};
        std::vector<Int> a_in_k = {Int(0), Int(1)};
        REQUIRE(l2.omega_of(a_in_k) == Rat(0));
        RescalingCheck c = reference_rescaling_check(d, a_in_k, Rat(-8));
        REQUIRE(c.ok());
    }
}
