#pragma once

#include "morsefam/cubical.hpp"

namespace morsefam {
namespace builtins {

// Height function on the circle: one max, one min, two flow lines with
// cancelling signs.
inline MorseData circle_morse(const std::string& hi = "x1", const std::string& lo = "x0") {
    MorseData m;
    m.points = {{hi, 1}, {lo, 0}};
    m.flows = {{hi, lo, 1}, {hi, lo, -1}};
    return m;
}

inline MorseData circle_fiber() { return circle_morse("q1", "q0"); }

inline MorseData sphere_morse() {
    MorseData m;
    m.points = {{"n2", 2}, {"s0", 0}};
    return m;
}

inline MorseData sphere_fiber() {
    MorseData m;
    m.points = {{"p2", 2}, {"p0", 0}};
    return m;
}

inline MorseData torus_morse() {
    MorseData m;
    m.points = {{"M", 2}, {"a", 1}, {"b", 1}, {"m", 0}};
    m.flows = {{"M", "a", 1}, {"M", "a", -1}, {"M", "b", 1}, {"M", "b", -1},
               {"a", "m", 1}, {"a", "m", -1}, {"b", "m", 1}, {"b", "m", -1}};
    return m;
}

// f = cos(2θ) on the circle: two maxima, two minima.
inline MorseData double_cosine_fiber() {
    MorseData m;
    m.points = {{"m1", 1}, {"m2", 1}, {"n1", 0}, {"n2", 0}};
    m.flows = {{"m1", "n1", 1}, {"m1", "n2", -1}, {"m2", "n2", 1}, {"m2", "n1", -1}};
    return m;
}

// Klein bottle as the S^1-fiber family over S^1 whose monodromy reverses
// the fiber orientation: one edge transports by the identity, the other
// by the flip (+1 on points, -1 on the degree-1 chain group).
inline FamilyDescriptor klein() {
    FamilyDescriptor d;
    d.name = "klein";
    d.dim_base = 1;
    d.fiber_dim = 1;
    d.base = circle_morse();
    d.fibers = {{"x1", circle_fiber()}, {"x0", circle_fiber()}};
    d.oriented_fibers = false;  // the flip reverses fiber orientation
    // net delta_1 = (+1)*id + (-1)*flip on [q1, q0] coordinates
    d.blocks = {{1, "x1", "x0", IntMatrix{{2, 0}, {0, 0}}}};
    return d;
}

// Constant family S^1 x S^1 with identity transports: net delta_1 = 0.
inline FamilyDescriptor torus_trivial() {
    FamilyDescriptor d;
    d.name = "torus-trivial";
    d.dim_base = 1;
    d.fiber_dim = 1;
    d.base = circle_morse();
    d.fibers = {{"x1", circle_fiber()}, {"x0", circle_fiber()}};
    return d;
}

// f(t, θ) = cos(θ - 2πt) over the trivial circle bundle: the critical
// circle rotates once; the monodromy is the identity on homology and the
// emitted combinatorial data matches the constant family.
inline FamilyDescriptor rotating_torus() {
    FamilyDescriptor d = torus_trivial();
    d.name = "rotating-torus";
    d.base.orientation = "std/rotating";
    return d;
}

// Two-critical-point base S^2 with circle fibers and a delta_2 block of
// a given degree-0 -> degree-1 coefficient.
inline FamilyDescriptor sphere_base_toy(const Int& delta2 = 0) {
    FamilyDescriptor d;
    d.name = "sphere-base-toy";
    d.dim_base = 2;
    d.fiber_dim = 1;
    d.base = sphere_morse();
    d.fibers = {{"n2", circle_fiber()}, {"s0", circle_fiber()}};
    if (delta2 != 0) {
        IntMatrix m(2, 2);  // rows [q1,q0] of the target, cols [q1,q0] of the source
        m(0, 1) = delta2;   // fiber degree 0 -> 1
        d.blocks = {{2, "n2", "s0", m}};
    }
    return d;
}

// S^1 x S^2 with trivial transports (m = 1, n = 2), combinatorial only.
inline FamilyDescriptor s1_by_s2() {
    FamilyDescriptor d;
    d.name = "s1-by-s2";
    d.dim_base = 1;
    d.fiber_dim = 2;
    d.base = circle_morse();
    d.fibers = {{"x1", sphere_fiber()}, {"x0", sphere_fiber()}};
    return d;
}

// The same combinatorial S^2 fiber over the two-point S^2 base ("the
// combinatorial-only bundle"): collapses, total space S^2 x S^2 pattern.
inline FamilyDescriptor s2_combinatorial() {
    FamilyDescriptor d;
    d.name = "s2-combinatorial";
    d.dim_base = 2;
    d.fiber_dim = 2;
    d.base = sphere_morse();
    d.fibers = {{"n2", sphere_fiber()}, {"s0", sphere_fiber()}};
    return d;
}

// Family over S^1 whose fiber chain group is Z^n in a single degree and
// whose monodromy is the given invertible matrix: net delta_1 = phi - 1.
inline FamilyDescriptor monodromy_family(const IntMatrix& phi, int degree = 0) {
    if (phi.rows() != phi.cols()) throw contract_error("monodromy_family: phi not square");
    FamilyDescriptor d;
    d.name = "monodromy";
    d.dim_base = 1;
    d.fiber_dim = degree;  // bookkeeping only
    d.base = circle_morse();
    MorseData fiber;
    for (std::size_t i = 0; i < phi.rows(); ++i)
        fiber.points.push_back({"e" + std::to_string(i), degree});
    d.fibers = {{"x1", fiber}, {"x0", fiber}};
    IntMatrix net = phi - IntMatrix::identity(phi.rows());
    if (!net.is_zero()) d.blocks = {{1, "x1", "x0", net}};
    return d;
}

// Mapping-torus toy with fiber S^0: the two points are swapped around the
// loop, so the total space is the connected double cover of the circle.
inline FamilyDescriptor mapping_torus_s0() {
    FamilyDescriptor d;
    d.name = "mapping-torus-s0";
    d.dim_base = 1;
    d.fiber_dim = 0;
    d.base = circle_morse();
    MorseData fiber;
    fiber.points = {{"c1", 0}, {"c2", 0}};
    d.fibers = {{"x1", fiber}, {"x0", fiber}};
    d.blocks = {{1, "x1", "x0", IntMatrix{{1, -1}, {-1, 1}}}};  // id - swap
    return d;
}

// Flat family over the torus base with fiber cos(2θ) and commuting
// chain-level monodromies: a rotation ρ around one loop and a reflection
// R around the other. All delta_{>=2} blocks vanish and the page
// differential d_2 : E^2_{2,0} -> E^2_{0,1} = Z/2 is nonzero — the
// integral collapse fails, but only through torsion.
inline FamilyDescriptor torsion_flat() {
    FamilyDescriptor d;
    d.name = "torsion-flat";
    d.dim_base = 2;
    d.fiber_dim = 1;
    d.base = torus_morse();
    MorseData fiber = double_cosine_fiber();
    for (const auto& x : {"M", "a", "b", "m"}) d.fibers[x] = fiber;
    // chain transports on [m1, m2, n1, n2]
    IntMatrix rho{{0, 1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}};   // rotation by π
    IntMatrix refl{{-1, 0, 0, 0}, {0, -1, 0, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}};  // θ -> -θ
    IntMatrix id = IntMatrix::identity(4);
    d.blocks = {{1, "M", "a", id - rho},
                {1, "M", "b", -(id - refl)},
                {1, "a", "m", id - refl},
                {1, "b", "m", id - rho}};
    return d;
}

// A flat family over S^1 from explicit invertible chain transports on a
// shared fiber: net delta_1 = sum of signed transports.
inline FamilyDescriptor circle_family_from_transports(const MorseData& fiber,
                                                      const IntMatrix& t_a,
                                                      const IntMatrix& t_b,
                                                      const std::string& name = "circle-family") {
    FamilyDescriptor d;
    d.name = name;
    d.dim_base = 1;
    d.fiber_dim = 1;
    d.base = circle_morse();
    d.fibers = {{"x1", fiber}, {"x0", fiber}};
    IntMatrix net = t_a - t_b;
    if (!net.is_zero()) d.blocks = {{1, "x1", "x0", net}};
    return d;
}

// --- cubical data -------------------------------------------------------

// S^1 as two vertices and two edges; edge "ea" runs v0 -> v1, edge "eb"
// runs v1 -> v0.
inline Cubulation circle_cubulation() {
    Cubulation k;
    k.cubes = {{"v0", 0, {}, false},
               {"v1", 0, {}, false},
               {"ea", 1, {{"v1", 1}, {"v0", -1}}, false},
               {"eb", 1, {{"v0", 1}, {"v1", -1}}, false}};
    return k;
}

// Klein family data over the two-vertex cubulation: the flip transport
// sits on the half-edge from eb's center down to v0.
inline CubicalData klein_cubical() {
    CubicalData d;
    d.name = "klein-cubical";
    d.cubulation = circle_cubulation();
    for (const auto& id : {"v0", "v1", "ea", "eb"}) d.fiber_data[id] = circle_fiber();
    IntMatrix id2 = IntMatrix::identity(2);
    IntMatrix flip{{-1, 0}, {0, 1}};  // -1 on q1, +1 on q0
    d.blocks = {{1, "ea", "v0", id2},
                {1, "ea", "v1", id2},
                {1, "eb", "v1", id2},
                {1, "eb", "v0", flip}};
    return d;
}

inline CubicalData trivial_cubical(const MorseData& fiber, const std::string& name) {
    CubicalData d;
    d.name = name;
    d.cubulation = circle_cubulation();
    for (const auto& id : {"v0", "v1", "ea", "eb"}) d.fiber_data[id] = fiber;
    IntMatrix id_m = IntMatrix::identity(fiber.points.size());
    d.blocks = {{1, "ea", "v0", id_m},
                {1, "ea", "v1", id_m},
                {1, "eb", "v1", id_m},
                {1, "eb", "v0", id_m}};
    return d;
}

inline CubicalData torus_cubical() { return trivial_cubical(circle_fiber(), "torus-cubical"); }

// Double cover of the circle: four vertices and four edges upstairs,
// alternating over ea and eb. Pulling back the Klein data gives the
// torus upstairs.
inline Cubulation double_cover_cubulation() {
    Cubulation k;
    k.cubes = {{"w0", 0, {}, false},
               {"w1", 0, {}, false},
               {"w2", 0, {}, false},
               {"w3", 0, {}, false},
               {"f0", 1, {{"w1", 1}, {"w0", -1}}, false},   // over ea
               {"f1", 1, {{"w2", 1}, {"w1", -1}}, false},   // over eb
               {"f2", 1, {{"w3", 1}, {"w2", -1}}, false},   // over ea
               {"f3", 1, {{"w0", 1}, {"w3", -1}}, false}};  // over eb
    return k;
}

inline CubicalData klein_pullback_cubical() {
    CubicalData d;
    d.name = "klein-pullback";
    d.cubulation = double_cover_cubulation();
    for (const auto& c : d.cubulation.cubes) d.fiber_data[c.id] = circle_fiber();
    IntMatrix id2 = IntMatrix::identity(2);
    IntMatrix flip{{-1, 0}, {0, 1}};
    d.blocks = {{1, "f0", "w0", id2}, {1, "f0", "w1", id2},
                {1, "f1", "w2", flip}, {1, "f1", "w1", id2},
                {1, "f2", "w2", id2}, {1, "f2", "w3", id2},
                {1, "f3", "w0", flip}, {1, "f3", "w3", id2}};
    return d;
}

inline CubulationMap double_cover_map() {
    CubulationMap m;
    m.cube_images = {{"w0", "v0"}, {"w1", "v1"}, {"w2", "v0"}, {"w3", "v1"},
                     {"f0", "ea"}, {"f1", "eb"}, {"f2", "ea"}, {"f3", "eb"}};
    return m;
}

inline std::vector<std::string> descriptor_names() {
    return {"klein",         "torus-trivial", "rotating-torus",   "sphere-base-toy",
            "s1-by-s2",      "s2-combinatorial", "mapping-torus-s0", "torsion-flat",
            "monodromy-flip"};
}

inline FamilyDescriptor descriptor_by_name(const std::string& name) {
    if (name == "klein") return klein();
    if (name == "torus-trivial") return torus_trivial();
    if (name == "rotating-torus") return rotating_torus();
    if (name == "sphere-base-toy") return sphere_base_toy(1);
    if (name == "s1-by-s2") return s1_by_s2();
    if (name == "s2-combinatorial") return s2_combinatorial();
    if (name == "mapping-torus-s0") return mapping_torus_s0();
    if (name == "torsion-flat") return torsion_flat();
    if (name == "monodromy-flip") return monodromy_family(IntMatrix{{-1}}, 0);
    throw contract_error("unknown example: " + name);
}

}  // namespace builtins
}  // namespace morsefam
