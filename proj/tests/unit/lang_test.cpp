#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sosr/lang.hpp"
#include "support.hpp"

using namespace sosr;
using namespace sosr::test;

namespace {

std::string read(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

KnowledgeBase drug_kb() { return parse_kb(read(SOSR_TEST_DATA "/drug.kb")); }

template <class T>
std::size_t count_of(const KnowledgeBase& kb) {
  std::size_t n = 0;
  for (const auto& c : kb.constraints) n += std::holds_alternative<T>(c);
  return n;
}

}  // namespace

TEST_CASE("parse_kb: quantified constraint with a constant") {
  auto kb = parse_kb("const alex\nforall x: P(x, alex) >= 0\n");
  REQUIRE(kb.constraints.size() == 1);
  CHECK(std::holds_alternative<LogicalConstraint>(kb.constraints[0]));
  CHECK(quantifier_rank(kb) == 1);
  CHECK(kb.constants == std::set<std::string>{"alex"});
}

TEST_CASE("parse_kb: empty input is an error") {
  CHECK_THROWS_AS(parse_kb(""), ParseError);
  CHECK_THROWS_AS(parse_kb("// only a comment\n\n"), ParseError);
}

TEST_CASE("parse_kb: drug trial") {
  auto kb = drug_kb();
  CHECK(count_of<LogicalConstraint>(kb) == 3);
  CHECK(count_of<ConditionalRule>(kb) == 1);
  CHECK(count_of<ExpectationConstraint>(kb) == 0);
  const auto& rule = std::get<ConditionalRule>(kb.constraints.back());
  CHECK(rule.variables.size() == 2);
  CHECK(rule.premise.rel == Relation::Le);
  CHECK(rule.conclusion.rel == Relation::Eq);
  CHECK(kb.signature.at("treated") == 2);
}

TEST_CASE("parse_kb: errors carry a position") {
  try {
    parse_kb("const a\nforall x: P(x) >= \n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() > 1);
  }
  CHECK_THROWS_AS(parse_kb("forall x: P(x) + P(x, x) >= 0\n"), ParseError);  // arity clash
  CHECK_THROWS_AS(parse_kb("bounds * in [1, 0]\nP(a) >= 0\n"), ParseError);
}

TEST_CASE("parse_kb: coefficients stay exact") {
  auto kb = parse_kb("const a\nP(a) - 0.1*Q(a) >= 1/3\n");
  const auto& body = std::get<LogicalConstraint>(kb.constraints[0]).body;
  CHECK(body.rhs == Rational(1, 3));
  CHECK(body.poly.coefficient(TermMonomial(as_term(atom("Q(a)")))) == Rational(-1, 10));
}

TEST_CASE("quantifier_rank") {
  CHECK(quantifier_rank(parse_kb("forall x, d: treated(x,d)^2 - treated(x,d) = 0\n")) == 2);
  CHECK(quantifier_rank(parse_kb("const a\nP(a) >= 0\nE[P(a)] <= 1/2\n")) == 0);
  // Renaming bound variables leaves the rank alone.
  CHECK(quantifier_rank(parse_kb("forall u, w: treated(u,w)^2 - treated(u,w) = 0\n")) == 2);
  // A guard variable counts even when the body does not use it.
  CHECK(quantifier_rank(parse_kb("const a\nforall x, y: !(x = y) => P(x) >= 0\n")) == 2);
}

TEST_CASE("render_kb round-trips") {
  auto kb = drug_kb();
  auto again = parse_kb(render_kb(kb));
  CHECK(again == kb);
  CHECK(render_kb(again) == render_kb(kb));
}

TEST_CASE("render_kb round-trips random knowledge bases") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    auto text = random_rank1_kb(rng, "alex");
    auto kb = parse_kb(text);
    INFO(text);
    CHECK(parse_kb(render_kb(kb)) == kb);
  }
}

TEST_CASE("negate_query: expectation upper bound") {
  auto kb = parse_kb("const a\nbounds * in [0, 1]\nE[P(a)] >= 0\n");
  auto q = parse_query("E[P(a)] <= 0.5", kb);
  auto goals = negate_query(q, Rational(1, 1000), {});
  REQUIRE(goals.size() == 1);
  REQUIRE(goals[0].added.size() == 1);
  const auto& g = goals[0].added[0];
  CHECK(g.kind == GroundConstraint::Kind::Expectation);
  // e(P(a)) - 1/2 - 1/1000 >= 0
  CHECK(g.poly == poly("P(a) - 501/1000"));
  CHECK(g.rel == Relation::Ge);
}

TEST_CASE("negate_query: point equality splits") {
  auto kb = drug_kb();
  auto q = parse_query("second_stage(DrugA) = 1", kb);
  auto goals = negate_query(q, Rational(1, 100), {});
  REQUIRE(goals.size() == 2);
  CHECK(goals[0].added[0].poly == poly("99/100 - second_stage(DrugA)"));
  CHECK(goals[1].added[0].poly == poly("second_stage(DrugA) - 101/100"));
  CHECK_THROWS(negate_query(q, Rational(-1), {}));
}

TEST_CASE("negate_query: one attempt per named drug") {
  auto kb = drug_kb();
  auto q = parse_query("forall d: second_stage(d) = 1", kb);
  std::vector<Name> drugs = {Name::constant("DrugA"), Name::constant("DrugB")};
  auto instances = query_instances(q, drugs);
  REQUIRE(instances.size() == 2);
  CHECK(instances[0].first == "d=DrugA");
  CHECK(instances[1].first == "d=DrugB");
  auto goals = negate_query(q, Rational(1, 1000000), drugs);
  CHECK(goals.size() == 4);
  auto listed = parse_query("forall d in {DrugB}: second_stage(d) = 1", kb);
  CHECK(query_instances(listed, drugs).size() == 1);
  CHECK(render_query(parse_query(render_query(listed), kb)) == render_query(listed));
}

TEST_CASE("parse_query: existential queries are unsupported") {
  auto kb = drug_kb();
  CHECK_THROWS_AS(parse_query("exists d: second_stage(d) = 1", kb), UnsupportedQuery);
  CHECK(query_constants(parse_query("second_stage(DrugC) = 1", kb)) == std::set<std::string>{"DrugC"});
}

TEST_CASE("ground syntax parsing") {
  CHECK(atom("P(#1,alex)").args[0] == Name::generic(1));
  CHECK(mono("t(a)^2*s(a)").degree() == 3);
  CHECK(poly("1 - t(a) - s(a)").str() == "1 - s(a) - t(a)");
  CHECK_THROWS_AS(atom("2*t(a)"), ParseError);
}
