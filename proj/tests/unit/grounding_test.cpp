#include "doctest.h"
#include "sosr/grounding.hpp"
#include "sosr/sos.hpp"
#include "support.hpp"

using namespace sosr;
using namespace sosr::test;

namespace {

std::set<std::string> strings(const std::vector<GroundConstraint>& gs) {
  std::set<std::string> out;
  for (const auto& g : gs) out.insert(g.str());
  return out;
}

// Number of distinct orbits, by brute-force enumeration of renamings.
std::size_t orbit_count(const std::set<Monomial>& ms, const std::set<std::string>& constants) {
  std::set<std::set<Monomial>> orbits;
  for (const auto& m : ms) orbits.insert(renaming_orbit(m, constants));
  return orbits.size();
}

}  // namespace

TEST_CASE("ground: constant plus two generic names") {
  auto kb = parse_kb("const alex\nforall x: P(x, alex) >= 0\n");
  auto gnd = ground(kb, 2);
  CHECK(strings(gnd.logical) == std::set<std::string>{"P(alex,alex) >= 0", "P(#1,alex) >= 0", "P(#2,alex) >= 0"});
  CHECK(gnd.universe.size() == 3);
  CHECK(gnd.k == 2);
}

TEST_CASE("ground: an equality guard selects one substitution") {
  auto kb = parse_kb("const alex\nforall x: x = alex => Q(x) >= 0\n");
  CHECK(strings(ground(kb, 2).logical) == std::set<std::string>{"Q(alex) >= 0"});
}

TEST_CASE("ground: off-diagonal guard") {
  auto kb = parse_kb("const alex\nforall x, y: !(x = y) => R(x, y) >= 0\n");
  CHECK(strings(ground(kb, 1).logical) == std::set<std::string>{"R(alex,#1) >= 0", "R(#1,alex) >= 0"});
}

TEST_CASE("ground: constant constraints") {
  // Satisfied ones are dropped, violated ones kept.
  auto kb = parse_kb("const a\nforall x: P(x) - P(x) + 1 >= 0\nP(a) >= 0\n");
  CHECK(ground(kb, 1).logical.size() == 1);
  auto bad = parse_kb("const a\nforall x: P(x) - P(x) - 1 >= 0\n");
  CHECK(ground(bad, 1).logical.size() == 1);
}

TEST_CASE("ground: extra constants and rules") {
  auto kb = parse_kb(
      "const DrugA\nforall x, d: if E[t(x,d)*s(x)] - 0.8*E[t(x,d)] <= 0 then stage(d) = 0\n");
  auto gnd = ground(kb, 2, {"m1"});
  CHECK(gnd.constants == std::set<std::string>{"DrugA", "m1"});
  CHECK(gnd.universe.size() == 4);
  CHECK(gnd.rules.size() == 16);
  CHECK(gnd.logical.empty());
}

TEST_CASE("canonical_form examples") {
  std::set<std::string> c = {"alex"};
  CHECK(canonical_form(mono("P(#7,alex)*P(#7,alex)"), c) == mono("P(#1,alex)^2"));
  CHECK(canonical_form(mono("P(#3,alex)*Q(#5)"), c) == canonical_form(mono("P(#9,alex)*Q(#2)"), c));
  CHECK(canonical_form(mono("P(alex,alex)"), c) == mono("P(alex,alex)"));
  // Same shape, different generic sharing: not equivalent.
  CHECK(canonical_form(mono("P(#1,alex)*Q(#1)"), c) != canonical_form(mono("P(#1,alex)*Q(#2)"), c));
  // Non-constant identifiers are renameable.
  CHECK(canonical_form(mono("P(bob,alex)"), c) == mono("P(#1,alex)"));
}

TEST_CASE("canonical_form is invariant under renaming of generics") {
  Rng rng(3);
  std::set<std::string> c = {"a"};
  std::vector<Atom> atoms;
  for (const auto* n : {"a", "#1", "#2", "#3"}) {
    atoms.push_back(atom(std::string("P(") + n + ")"));
    for (const auto* m : {"a", "#1", "#2", "#3"}) atoms.push_back(atom(std::string("R(") + n + "," + m + ")"));
  }
  for (int i = 0; i < 300; ++i) {
    Monomial m = random_monomial(rng, atoms, 4);
    Monomial canon = canonical_form(m, c);
    for (const auto& image : renaming_orbit(m, c)) CHECK(canonical_form(image, c) == canon);
    // The representative is a member of the orbit.
    CHECK(renaming_orbit(m, c).count(canon) == 1);
  }
}

TEST_CASE("equivalence_classes") {
  std::set<std::string> c = {"alex"};
  auto classes = equivalence_classes({mono("P(alex,alex)"), mono("P(#1,alex)"), mono("P(#2,alex)")}, c);
  REQUIRE(classes.size() == 2);
  CHECK(classes[0].members.size() + classes[1].members.size() == 3);
  CHECK(equivalence_classes({}, c).empty());
}

TEST_CASE("equivalence_classes agree with orbit enumeration") {
  auto kb = parse_kb("const alex\nforall x: P(x, alex) >= 0\n");
  auto gnd = ground(kb, 2);
  auto basis = monomials_up_to(gnd.atoms(), 2);
  std::set<Monomial> ms(basis.begin(), basis.end());
  auto classes = equivalence_classes(ms, gnd.constants);
  CHECK(classes.size() == orbit_count(ms, gnd.constants));
  // Members of a class share the orbit; different classes never do.
  for (const auto& cls : classes)
    for (const auto& m : cls.members) CHECK(renaming_orbit(m, gnd.constants) == renaming_orbit(cls.representative, gnd.constants));

  auto drug = parse_kb("const DrugA, DrugB\nforall x, d: t(x,d)^2 - t(x,d) = 0\nforall x: s(x)^2 - s(x) = 0\n");
  auto g2 = ground(drug, 2);
  auto b2 = monomials_up_to(g2.atoms(), 2);
  std::set<Monomial> m2(b2.begin(), b2.end());
  CHECK(equivalence_classes(m2, g2.constants).size() == orbit_count(m2, g2.constants));
}

TEST_CASE("idempotent_atom and the bounds table") {
  CHECK(idempotent_atom(idempotent("t(a)")) == atom("t(a)"));
  CHECK(idempotent_atom(logical("t(a) - t(a)^2", Relation::Eq)) == atom("t(a)"));
  CHECK_FALSE(idempotent_atom(logical("t(a)^2 - t(a)")).has_value());  // inequality
  CHECK_FALSE(idempotent_atom(logical("t(a)^2 - s(a)", Relation::Eq)).has_value());

  auto kb = parse_kb("const a\nbounds t(x) in [-5, 5]\nt(a)^2 - t(a) = 0\nh(a) >= 0\n");
  auto gnd = ground(kb, 0);
  auto table = build_bounds_table(kb, gnd.atoms(), gnd.logical);
  CHECK(table.atom_bounds(atom("t(a)")) == Interval{0, 1});
  CHECK_FALSE(table.atom_bounds(atom("h(a)")).has_value());
}
