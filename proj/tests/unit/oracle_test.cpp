#include "doctest.h"
#include "sosr/oracle.hpp"
#include "sosr/partial.hpp"
#include "support.hpp"

using namespace sosr;
using namespace sosr::test;

namespace {

ValueGrid boolean_grid(const std::vector<std::string>& atoms) {
  ValueGrid g;
  for (const auto& a : atoms) g.values[atom(a)] = {0, 1};
  return g;
}

}  // namespace

TEST_CASE("enumerate_worlds") {
  auto g = boolean_grid({"t(a)", "s(a)", "u(a)"});
  CHECK(enumerate_worlds({atom("t(a)"), atom("s(a)")}, g).size() == 4);
  CHECK(enumerate_worlds({atom("t(a)"), atom("s(a)"), atom("u(a)")}, g).size() == 8);
  ValueGrid h;
  h.values[atom("x(a)")] = {0, Rational(1, 2), 1};
  auto w = enumerate_worlds({atom("x(a)")}, h);
  REQUIRE(w.size() == 3);
  CHECK(w[1].at(atom("x(a)")) == Rational(1, 2));
  // First atom varies slowest.
  auto v = enumerate_worlds({atom("t(a)"), atom("s(a)")}, g);
  CHECK(v[1].at(atom("t(a)")) == 0);
  CHECK(v[1].at(atom("s(a)")) == 1);
  CHECK_THROWS_AS(enumerate_worlds({atom("t(a)"), atom("s(a)"), atom("u(a)")}, g, 2), SizeGuardError);
}

TEST_CASE("default_grid") {
  BoundsTable t;
  t.bound_atom(atom("t(a)"), {0, 1});
  t.bound_atom(atom("x(a)"), {-1, 1});
  auto g = default_grid({atom("t(a)"), atom("x(a)")}, {idempotent("t(a)")}, t, 4);
  CHECK(g.values.at(atom("t(a)")) == std::vector<Rational>{0, 1});
  CHECK(g.values.at(atom("x(a)")).size() == 5);
  CHECK(g.values.at(atom("x(a)"))[1] == Rational(-1, 2));
  CHECK_FALSE(g.exact);
  CHECK(default_grid({atom("t(a)")}, {idempotent("t(a)")}, t).exact);
}

TEST_CASE("brute_force_consistency examples") {
  auto g = boolean_grid({"t(a)", "s(a)"});
  auto unsat = brute_force_consistency({idempotent("t(a)")}, {expectation("t(a) - 0.9"), expectation("0.5 - t(a)")}, g);
  CHECK_FALSE(unsat.satisfiable);
  CHECK(unsat.exact);

  auto premise = brute_force_consistency(
      {idempotent("t(a)"), idempotent("s(a)")},
      {expectation("t(a) - 0.9"), expectation("0.5 - t(a)*s(a)"), expectation("t(a)*s(a) - 0.8*t(a) - 0.000001")}, g);
  CHECK_FALSE(premise.satisfiable);

  auto point = brute_force_consistency({idempotent("t(a)")}, {expectation("t(a) - 0.3", Relation::Eq)},
                                       boolean_grid({"t(a)"}));
  REQUIRE(point.satisfiable);
  std::map<Rational, Rational> dist;  // value of t -> probability
  for (const auto& [p, w] : point.distribution) dist[w.at(atom("t(a)"))] += p;
  CHECK(dist[0] == Rational(7, 10));
  CHECK(dist[1] == Rational(3, 10));
  CHECK(point.worlds == 2);
}

TEST_CASE("brute_force_consistency: distributions satisfy every row exactly") {
  Rng rng(17);
  std::vector<Atom> atoms = {atom("t(a)"), atom("s(a)")};
  auto g = boolean_grid({"t(a)", "s(a)"});
  for (int i = 0; i < 100; ++i) {
    std::vector<GroundConstraint> l = {idempotent("t(a)"), idempotent("s(a)")};
    if (uniform_int(rng, 0, 1))
      l.push_back(normalize(GroundConstraint::Kind::Logical, random_polynomial(rng, atoms, 2, 2), Relation::Ge, 0, "r"));
    std::vector<GroundConstraint> e;
    for (int j = uniform_int(rng, 1, 3); j > 0; --j)
      e.push_back(normalize(GroundConstraint::Kind::Expectation, random_polynomial(rng, atoms, 2, 3),
                            uniform_int(rng, 0, 4) ? Relation::Ge : Relation::Eq, 0, "r"));
    auto v = brute_force_consistency(l, e, g);
    if (!v.satisfiable) continue;
    Rational total = 0;
    for (const auto& [p, w] : v.distribution) {
      CHECK(p > 0);
      CHECK(satisfies(w, l));
      total += p;
    }
    CHECK(total == 1);
    for (const auto& c : e) {
      Rational value = 0;
      for (const auto& [p, w] : v.distribution) value += p * evaluate(c.poly, w);
      if (c.is_equality())
        CHECK(value == 0);
      else
        CHECK(value >= 0);
    }
  }
}

TEST_CASE("brute_force_consistency with conditional rules") {
  auto kb = parse_kb(
      "const a\nbounds * in [0, 1]\nt(a)^2 - t(a) = 0\nq(a)^2 - q(a) = 0\n"
      "if E[t(a)] >= 0.5 then q(a) = 1\nE[t(a)] >= 0.6\n");
  auto gnd = ground(kb, 0);
  auto grid = boolean_grid({"t(a)", "q(a)"});
  CHECK(brute_force_consistency(gnd, {}, grid, Rational(1, 1000)).satisfiable);
  // The rule fires, so q(a) = 0 contradicts it.
  CHECK_FALSE(brute_force_consistency(gnd, {logical("-q(a)", Relation::Eq)}, grid, Rational(1, 1000)).satisfiable);
  auto weak = parse_kb(
      "const a\nbounds * in [0, 1]\nt(a)^2 - t(a) = 0\nq(a)^2 - q(a) = 0\n"
      "if E[t(a)] >= 0.5 then q(a) = 1\nE[t(a)] >= 0.2\n");
  auto g2 = ground(weak, 0);
  CHECK(brute_force_consistency(g2, {logical("-q(a)", Relation::Eq)}, grid, Rational(1, 1000)).satisfiable);
}

TEST_CASE("brute_force_bounds examples") {
  std::vector<GroundConstraint> l = {idempotent("t(a)"), idempotent("s(a)")};
  auto g = boolean_grid({"t(a)", "s(a)"});
  auto a = brute_force_bounds(mono("t(a)*s(a)"), model({{"t(a)", 0}}), l, g);
  CHECK(a == std::pair<Rational, Rational>{0, 0});
  auto b = brute_force_bounds(mono("s(a)"), PartialModel{}, l, g);
  CHECK(b == std::pair<Rational, Rational>{0, 1});
  auto c = brute_force_bounds(mono("t(a)*s(a)"), model({{"t(a)", 1}}), l, g);
  CHECK(c == std::pair<Rational, Rational>{0, 1});
  l.push_back(logical("1 - t(a) - s(a)"));
  CHECK_THROWS_AS(brute_force_bounds(mono("s(a)"), model({{"t(a)", 1}, {"s(a)", 1}}), l, g), DataConflict);
}

TEST_CASE("exact_feasible_point") {
  using R = Rational;
  // x + y = 1, x - y = 1/2
  auto p = exact_feasible_point({{R(1), R(1)}, {R(1), R(-1)}}, {R(1), R(1, 2)});
  REQUIRE(p.has_value());
  CHECK((*p)[0] == R(3, 4));
  CHECK((*p)[1] == R(1, 4));
  // x + y = 1, x + y = 2
  CHECK_FALSE(exact_feasible_point({{R(1), R(1)}, {R(1), R(1)}}, {R(1), R(2)}).has_value());
  // x - y = 0 with x + y = 0 forces zero.
  auto z = exact_feasible_point({{R(1), R(-1)}, {R(1), R(1)}}, {R(0), R(0)});
  REQUIRE(z.has_value());
  CHECK((*z)[0] == 0);
}
