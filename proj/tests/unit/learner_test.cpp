#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sosr/learner.hpp"
#include "sosr/report.hpp"
#include "support.hpp"

using namespace sosr;
using namespace sosr::test;

namespace {

KnowledgeBase drug_kb() {
  std::ifstream in(SOSR_TEST_DATA "/drug.kb");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_kb(ss.str());
}

std::vector<PartialModel> drug_data(std::size_t m, std::uint64_t seed) {
  return simulate(load_mixture(SOSR_TEST_DATA "/drug_mixture.jsonl"), parse_mask("shrunk=0.2", seed), m);
}

LearnerConfig drug_config() {
  LearnerConfig cfg;
  cfg.delta = 0.01;
  cfg.threads = 2;
  return cfg;
}

}  // namespace

TEST_CASE("Hoeffding slack variants") {
  // n = 2 atoms, d = 2: C = 1 + 4 + 6 = 11 monomials in 2n = 4 variables.
  CHECK(log_monomial_count(2, 2) == doctest::Approx(std::log(11.0)));
  CHECK(log_monomial_count(1, 4) == doctest::Approx(std::log(4.0)));  // capped at 2n
  const double printed = std::sqrt(std::log(11 / 0.01)) / 2000;
  const double textbook = std::sqrt(std::log(22 / 0.01) / 2000);
  CHECK(hoeffding_slack_printed(1, 0.01, 2, 2, 1000) == doctest::Approx(printed));
  CHECK(hoeffding_slack_textbook(1, 0.01, 2, 2, 1000) == doctest::Approx(textbook));
  CHECK(printed == doctest::Approx(0.0013232).epsilon(1e-4));
  CHECK(textbook == doctest::Approx(0.0620338).epsilon(1e-4));

  LearnerConfig cfg;
  cfg.delta = 0.01;
  cfg.slack = SlackVariant::Max;
  CHECK(hoeffding_slack(cfg, 2, 1000) == doctest::Approx(textbook));
  cfg.slack = SlackVariant::Printed;
  CHECK(hoeffding_slack(cfg, 2, 1000) == doctest::Approx(printed));
  cfg.norm_bound = 2;
  CHECK(hoeffding_slack(cfg, 2, 1000) == doctest::Approx(2 * printed));

  // delta -> 1 leaves S sqrt(ln C) / (2m); m -> infinity sends both to 0.
  CHECK(hoeffding_slack_printed(1, 1 - 1e-12, 2, 2, 1000) == doctest::Approx(std::sqrt(std::log(11.0)) / 2000));
  CHECK(hoeffding_slack_printed(1, 0.01, 2, 2, 100000000) < 1e-7);
  CHECK(hoeffding_slack_textbook(1, 0.01, 2, 2, 100000000) < 1e-3);
  CHECK(hoeffding_slack_textbook(1, 0.01, 2, 2, 4000) < hoeffding_slack_textbook(1, 0.01, 2, 2, 1000));

  CHECK(parse_slack_variant("textbook") == SlackVariant::Textbook);
  CHECK(slack_variant_name(SlackVariant::Max) == "max");
  CHECK_THROWS(parse_slack_variant("loose"));
}

TEST_CASE("LearnerConfig::validate") {
  LearnerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.degree = 3;
  CHECK_THROWS_AS(cfg.validate(), DegreeError);
  cfg = {};
  cfg.delta = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.threads = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("learn_moment_bounds on fully observed data gives empirical means") {
  auto kb = parse_kb("const a\nbounds * in [0, 1]\nt(a)^2 - t(a) = 0\ns(a)^2 - s(a) = 0\n");
  auto gnd = ground(kb, 0);
  auto table = build_bounds_table(kb, gnd.atoms(), gnd.logical);
  auto basis = monomials_up_to(gnd.atoms(), 2);
  auto classes = equivalence_classes({basis.begin() + 1, basis.end()}, gnd.constants);
  std::vector<PartialModel> data = {model({{"t(a)", 1}, {"s(a)", 1}}), model({{"t(a)", 1}, {"s(a)", 0}}),
                                    model({{"t(a)", 0}, {"s(a)", 0}}), model({{"t(a)", 1}, {"s(a)", 1}})};
  LearnerConfig cfg;
  auto tbl = learn_moment_bounds(data, gnd.logical, classes, table, cfg, 0.1);
  CHECK(tbl.m == 4);
  CHECK(tbl.distinct_examples == 3);
  auto* t = tbl.find(mono("t(a)"));
  REQUIRE(t);
  CHECK(t->lower == doctest::Approx(0.75));
  CHECK(t->upper == doctest::Approx(0.75));
  CHECK(to_double(t->widened.lo) == doctest::Approx(0.65));
  CHECK(to_double(t->widened.hi) == doctest::Approx(0.85));
  CHECK(t->widened.lo <= Rational(65, 100));  // rounded outward
  auto* ts = tbl.find(mono("s(a)*t(a)"));
  REQUIRE(ts);
  CHECK(ts->lower == doctest::Approx(0.5));
  CHECK(ts->upper == doctest::Approx(0.5));
  // Rows are widened but clamped averages stay within the global bounds.
  auto tight = learn_moment_bounds({model({{"t(a)", 1}, {"s(a)", 1}})}, gnd.logical, classes, table, cfg, 0.1);
  CHECK(tight.find(mono("t(a)"))->upper == 1);
  CHECK(tight.informative().at(mono("t(a)")) == Interval{Rational(9, 10), Rational(11, 10)});
  auto loose = learn_moment_bounds({model({{"t(a)", 1}, {"s(a)", 1}})}, gnd.logical, classes, table, cfg, 1.5);
  CHECK(loose.informative().empty());
  CHECK_THROWS_AS(learn_moment_bounds({}, gnd.logical, classes, table, cfg, 0.1), DataError);
}

TEST_CASE("lifted classes are averaged once per class") {
  auto kb = parse_kb("const alex\nbounds * in [0, 1]\nforall x: P(x, alex)^2 - P(x, alex) = 0\n");
  auto gnd = ground(kb, 2);
  auto basis = monomials_up_to(gnd.atoms(), 2);
  auto classes = equivalence_classes({basis.begin() + 1, basis.end()}, gnd.constants);
  auto table = build_bounds_table(kb, gnd.atoms(), gnd.logical);
  // Symmetric data: each generic is observed as 1 in one example, hidden in the other.
  std::vector<PartialModel> data = {model({{"P(#1,alex)", 1}, {"P(#2,alex)", std::nullopt}, {"P(alex,alex)", 0}}),
                                    model({{"P(#2,alex)", 1}, {"P(#1,alex)", std::nullopt}, {"P(alex,alex)", 0}})};
  LearnerConfig cfg;
  auto tbl = learn_moment_bounds(data, gnd.logical, classes, table, cfg, 0);
  auto* p = tbl.find(canonical_form(mono("P(#1,alex)"), gnd.constants));
  REQUIRE(p);
  CHECK(p->members == 2);
  // Representative P(#1,alex): observed 1 in one example, [0,1] in the other.
  CHECK(p->lower == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(p->upper == doctest::Approx(1.0).epsilon(1e-6));
  // Averaging each member separately gives the same interval on symmetric data.
  TightestBounds tb(gnd.logical, table, 2);
  double lo2 = 0, hi2 = 0;
  for (const auto& rho : data) {
    auto b = tb.bounds(mono("P(#2,alex)"), rho);
    lo2 += b.first / 2;
    hi2 += b.second / 2;
  }
  CHECK(lo2 == doctest::Approx(p->lower).epsilon(1e-6));
  CHECK(hi2 == doctest::Approx(p->upper).epsilon(1e-6));
}

TEST_CASE("prepare_run fixes one grounding for every example") {
  auto kb = drug_kb();
  auto q = parse_query("forall d: second_stage(d) = 1", kb);
  auto data = drug_data(50, 1);
  auto run = prepare_run(kb, q, data, drug_config());
  CHECK(run.k == 2);
  CHECK(run.lift_constants == std::set<std::string>{"DrugA", "DrugB", "m1", "m2"});
  CHECK(run.atoms.size() == 48);
  CHECK(run.classes.size() == 781);
  CHECK(run.instances.size() == 6);  // every name of the universe
  for (const auto& rho : data)
    for (const auto& [a, v] : rho.values) CHECK(run.atoms.count(a) == 1);
  // Deterministic.
  auto again = prepare_run(kb, q, data, drug_config());
  CHECK(again.classes.size() == run.classes.size());
  CHECK(again.classes.front().representative == run.classes.front().representative);
}

TEST_CASE("restrict_to follows shared atoms") {
  std::vector<GroundConstraint> l = {idempotent("t(a)"), idempotent("s(a)"), idempotent("u(b)"),
                                     logical("1 - t(a) - s(a)")};
  std::vector<GroundConstraint> e = {expectation("u(b) - 0.5")};
  auto r = restrict_to({atom("t(a)")}, l, e);
  CHECK(r.atoms == std::set<Atom>{atom("t(a)"), atom("s(a)")});
  CHECK(r.logical.size() == 3);
  CHECK(r.expectation.empty());
  auto all = restrict_to({atom("u(b)")}, l, e);
  CHECK(all.expectation.size() == 1);
}

TEST_CASE("decide: drug trial refutes the DrugA instance") {
  auto kb = drug_kb();
  auto q = parse_query("forall d: second_stage(d) = 1", kb);
  auto rep = decide_consistency(kb, q, drug_data(1000, 7), drug_config());
  CHECK(rep.verdict == Verdict::Refuted);
  CHECK(rep.refuted_by == "d=DrugA");
  REQUIRE(rep.certificate.has_value());
  CHECK(verify_certificate(*rep.certificate).ok);
  bool drug_a_rule = false;
  for (const auto& r : rep.rules) drug_a_rule |= r.proved && r.label.find("d=DrugA") != std::string::npos;
  CHECK(drug_a_rule);
  REQUIRE(rep.table.has_value());
  auto* ts = rep.table->find(canonical_form(mono("shrunk(m1)*treated(m1,DrugA)"), rep.constants));
  REQUIRE(ts);
  CHECK(ts->lower >= 0.20);
  CHECK(ts->lower <= 0.36);
  CHECK(ts->upper >= 0.40);
  CHECK(ts->upper <= 0.50);
  auto* t = rep.table->find(mono("treated(m1,DrugA)"));
  REQUIRE(t);
  CHECK(t->lower == 1);
  CHECK(t->upper == 1);
  CHECK(rep.slack_textbook > rep.slack_printed);
}

TEST_CASE("decide: DrugB stays out of the second stage") {
  auto kb = drug_kb();
  auto data = drug_data(1000, 7);
  auto consistent = decide_consistency(kb, parse_query("second_stage(DrugB) = 0", kb), data, drug_config());
  CHECK(consistent.verdict == Verdict::Consistent);
  auto refuted = decide_consistency(kb, parse_query("second_stage(DrugA) = 1", kb), data, drug_config());
  CHECK(refuted.verdict == Verdict::Refuted);

  LearnerConfig prove = drug_config();
  prove.mode = DecideMode::Prove;
  auto proved = decide_consistency(kb, parse_query("second_stage(DrugA) = 0", kb), data, prove);
  CHECK(proved.verdict == Verdict::Proved);
  auto unproved = decide_consistency(kb, parse_query("second_stage(DrugA) = 1", kb), data, prove);
  CHECK(unproved.verdict == Verdict::Unproved);
}

TEST_CASE("decide without data or query") {
  auto kb = parse_kb("const a\nbounds * in [0, 1]\nt(a)^2 - t(a) = 0\nE[t(a)] >= 0.9\n");
  auto ok = decide_consistency(kb, std::nullopt, {}, LearnerConfig{});
  CHECK(ok.verdict == Verdict::Consistent);
  CHECK_FALSE(ok.table.has_value());
  auto q = parse_query("E[t(a)] <= 0.5", kb);
  auto bad = decide_consistency(kb, q, {}, LearnerConfig{});
  CHECK(bad.verdict == Verdict::Refuted);
  // A query already implied by the KB is consistent with it.
  CHECK(decide_consistency(kb, parse_query("E[t(a)] >= 0.5", kb), {}, LearnerConfig{}).verdict ==
        Verdict::Consistent);
}

TEST_CASE("decide reports are independent of the thread count") {
  auto kb = drug_kb();
  auto q = parse_query("forall d: second_stage(d) = 1", kb);
  auto data = drug_data(300, 3);
  LearnerConfig one = drug_config(), four = drug_config();
  one.threads = 1;
  four.threads = 4;
  auto a = dump(to_json(decide_consistency(kb, q, data, one), false));
  auto b = dump(to_json(decide_consistency(kb, q, data, four), false));
  CHECK(a == b);
}

TEST_CASE("decide: an inconsistent example is a conflict") {
  auto kb = parse_kb("const a\nbounds * in [0, 1]\nt(a)^2 - t(a) = 0\nforall x: 1 - t(x) - s(x) >= 0\n");
  std::vector<PartialModel> data = {model({{"t(a)", 1}, {"s(a)", 1}})};
  CHECK_THROWS_AS(decide_consistency(kb, std::nullopt, data, LearnerConfig{}), DataConflict);
}

TEST_CASE("sweep_groundings") {
  auto kb = parse_kb("const alex\nbounds * in [0, 1]\nforall x: P(x, alex)^2 - P(x, alex) = 0\n"
                     "forall x: E[P(x, alex)] >= 0.5\n");
  LearnerConfig cfg;
  cfg.k = 2;
  auto sweep = sweep_groundings(kb, std::nullopt, {}, cfg, {"bob", "carl", "dana"});
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[0].names == std::vector<std::string>{"bob", "carl"});
  for (const auto& e : sweep) CHECK(e.report.verdict == Verdict::Consistent);
  CHECK_THROWS(sweep_groundings(kb, std::nullopt, {}, cfg, {"bob"}));
}

TEST_CASE("sample complexity") {
  auto kb = parse_kb("const a\nbounds * in [0, 1]\nt(a)^2 - t(a) = 0\ns(a)^2 - s(a) = 0\n");
  LearnerConfig cfg;
  auto rep = decide_consistency(kb, std::nullopt, {}, cfg);
  // n = 2, d = 2, S = 1: (ln 4 + ln ln 100) / ln 10.
  double expected = (std::log(4.0) + std::log(std::log(100.0))) / std::log(10.0);
  CHECK(rep.sample_complexity_log10 == doctest::Approx(expected));
}
