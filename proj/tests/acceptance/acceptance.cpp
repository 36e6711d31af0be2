// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "sosr/learner.hpp"
#include "sosr/oracle.hpp"
#include "sosr/partial.hpp"
#include "sosr/sos.hpp"
#include "support.hpp"

using namespace sosr;
using namespace sosr::test;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

KnowledgeBase drug_kb() { return parse_kb(read_file(SOSR_TEST_DATA "/drug.kb")); }
WorldMixture drug_mixture() { return load_mixture(SOSR_TEST_DATA "/drug_mixture.jsonl"); }

Certificate load_cert(const std::string& name) {
  return certificate_from_json(nlohmann::json::parse(read_file(std::string(SOSR_TEST_DATA) + "/" + name)));
}

// 1. Both closing identities verify exactly.
Outcome reference_identities() {
  Outcome o{true, ""};
  for (const char* name : {"reference_cert_estimate.json", "reference_cert_learned.json"}) {
    Certificate c = load_cert(name);
    VerifyReport v = verify_certificate(c, 0);
    bool ok = v.ok && v.exact && v.max_residual == 0 && certificate_identity(c).is_constant();
    o.pass = o.pass && ok;
    o.detail += fmt("%s constant=%s residual=%g; ", name, to_string(v.constant).c_str(), v.max_residual);
  }
  return o;
}

// 2. Drug trial end to end.
Outcome drug_end_to_end() {
  auto kb = drug_kb();
  auto q = parse_query("forall d: second_stage(d) = 1", kb);
  auto data = simulate(drug_mixture(), parse_mask("shrunk=0.2", 7), 1000);
  LearnerConfig cfg;
  cfg.delta = 0.01;
  cfg.degree = 2;
  cfg.threads = 4;
  DecisionReport rep = decide_consistency(kb, q, data, cfg);
  bool rule = false;
  for (const auto& r : rep.rules)
    rule = rule || (r.proved && r.label.find("d=DrugA") != std::string::npos && r.label.find("x=m1") != std::string::npos);
  bool cert = rep.certificate && verify_certificate(*rep.certificate).ok;
  double lo = NAN, hi = NAN;
  if (rep.table)
    if (const auto* e = rep.table->find(canonical_form(parse_ground_monomial("treated(m1,DrugA)*shrunk(m1)"), rep.constants))) {
      lo = e->lower;
      hi = e->upper;
    }
  bool windows = lo >= 0.20 && lo <= 0.36 && hi >= 0.40 && hi <= 0.50;
  Outcome o;
  o.pass = rep.verdict == Verdict::Refuted && rep.refuted_by == "d=DrugA" && rule && cert && windows;
  o.detail = fmt("verdict=%s refuted_by=%s DrugA rule proved=%d certificate=%d Lbar(ts)=%.4f Ubar(ts)=%.4f slack=%.4f",
                 verdict_name(rep.verdict).c_str(), rep.refuted_by.c_str(), rule, cert, lo, hi,
                 rep.table ? rep.table->slack : NAN);
  return o;
}

// 3. Witnessing fraction of 1 - t - s >= 0.
Outcome witnessing() {
  auto kb = drug_kb();
  auto data = simulate(drug_mixture(), parse_mask("shrunk=0.2", 2024), 10000);
  auto run = prepare_run(kb, std::nullopt, data, LearnerConfig{});
  TightestBounds tb(run.gnd.logical, run.bounds, 2);
  Testability t = estimate_testability({parse_ground_polynomial("1 - treated(m1,DrugA) - shrunk(m1)")}, data, tb);
  return {std::abs(t.joint - 0.56) <= 0.03, fmt("fraction=%.4f over m=%zu (target 0.56 +- 0.03)", t.joint, t.examples)};
}

// 4. Grounding example.
Outcome grounding_example() {
  auto kb = parse_kb("const alex\nforall x: P(x, alex) >= 0\n");
  auto gnd = ground(kb, 2);
  std::set<Monomial> ms;
  for (const auto& g : gnd.logical)
    for (const auto& [m, c] : g.poly.terms())
      if (!m.is_constant()) ms.insert(m);
  auto classes = equivalence_classes(ms, gnd.constants);
  std::size_t n = gnd.logical.size() + gnd.expectation.size() + gnd.rules.size();
  return {n == 3 && classes.size() == 2, fmt("%zu ground constraints, %zu lift classes", n, classes.size())};
}

// 5. Soundness against the brute-force oracle on random Boolean KBs.
Outcome oracle_agreement() {
  Rng rng(20240501);
  const std::vector<std::string> names = {"p(a)", "q(a)", "r(a)"};
  int runs = 0, violations = 0, sat = 0, refuted = 0, unknown = 0;
  for (; runs < 600; ++runs) {
    int n = uniform_int(rng, 1, 3);
    std::vector<Atom> atoms;
    for (int i = 0; i < n; ++i) atoms.push_back(parse_atom(names[i]));
    KnowledgeBase kb;
    kb.constants = {"a"};
    kb.bounds.push_back({std::nullopt, {0, 1}});
    auto add_logical = [&](const Polynomial& p, Relation rel) {
      kb.constraints.push_back(LogicalConstraint{{}, EqualityExpr::always(), {as_term_polynomial(p), rel, 0}});
    };
    for (const auto& a : atoms) add_logical(Polynomial(Monomial(a, 2)) - Polynomial(Monomial(a)), Relation::Eq);
    for (int i = uniform_int(rng, 0, 4 - n); i > 0; --i) add_logical(random_polynomial(rng, atoms, 2, 3), Relation::Ge);
    for (int i = uniform_int(rng, 0, 3); i > 0; --i) {
      Relation rel = uniform_int(rng, 0, 3) ? Relation::Ge : Relation::Eq;
      kb.constraints.push_back(
          ExpectationConstraint{{}, EqualityExpr::always(), {as_term_polynomial(random_polynomial(rng, atoms, 2, 3)), rel, 0}});
    }
    auto gnd = ground(kb, 0);
    std::set<Atom> all = gnd.atoms();
    all.insert(atoms.begin(), atoms.end());
    auto table = build_bounds_table(kb, all, gnd.logical);
    bool satisfiable = brute_force_consistency(gnd.logical, gnd.expectation, default_grid(all, gnd.logical, table)).satisfiable;
    DecisionReport rep = decide_consistency(kb, std::nullopt, {}, LearnerConfig{});
    sat += satisfiable;
    refuted += rep.verdict == Verdict::Refuted;
    unknown += rep.verdict == Verdict::Unknown;
    if (satisfiable && rep.verdict == Verdict::Refuted) ++violations;
  }
  return {violations == 0 && runs >= 500,
          fmt("%d KBs: oracle satisfiable %d, SOS refuted %d, unknown %d, violations %d", runs, sat, refuted, unknown,
              violations)};
}

// P(X <= k) for X ~ Binomial(n, p).
double binomial_cdf(int k, int n, double p) {
  double total = 0;
  for (int i = 0; i <= k; ++i)
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) + i * std::log(p) +
                      (n - i) * std::log1p(-p));
  return total;
}

// 6. Hoeffding coverage of the widened intervals.
Outcome hoeffding_coverage() {
  auto kb = parse_kb("const a\nbounds * in [0, 1]\nt(a)^2 - t(a) = 0\ns(a)^2 - s(a) = 0\n");
  auto gnd = ground(kb, 0);
  auto table = build_bounds_table(kb, gnd.atoms(), gnd.logical);
  auto basis = monomials_up_to(gnd.atoms(), 2);
  auto classes = equivalence_classes({basis.begin() + 1, basis.end()}, gnd.constants);
  const Atom t = parse_atom("t(a)"), s = parse_atom("s(a)");
  WorldMixture mix;
  mix.worlds = {{0.3, {{t, 1}, {s, 1}}}, {0.2, {{t, 1}, {s, 0}}}, {0.1, {{t, 0}, {s, 1}}}, {0.4, {{t, 0}, {s, 0}}}};
  LearnerConfig cfg;
  cfg.delta = 0.05;
  const std::size_t m = 200;
  const double slack = hoeffding_slack(cfg, gnd.atoms().size(), m);
  const int runs = 500;
  int covered = 0;
  for (int r = 0; r < runs; ++r) {
    auto data = simulate(mix, parse_mask("0.3", 1000 + r), m);
    auto tbl = learn_moment_bounds(data, gnd.logical, classes, table, cfg, slack);
    bool all = true;
    for (const auto& e : tbl.entries) {
      Rational truth = 0;
      for (const auto& w : mix.worlds) truth += from_double(w.probability) * evaluate(Polynomial(e.representative), w.values);
      all = all && e.widened.contains(truth);
    }
    covered += all;
  }
  // Reject "coverage >= 0.95" only if so few covered runs are unlikely under it.
  double p_value = binomial_cdf(covered, runs, 0.95);
  return {p_value >= 0.01, fmt("%d/%d runs covered (%.1f%%), slack=%.4f, binomial p=%.3g", covered, runs,
                               100.0 * covered / runs, slack, p_value)};
}

// 7. Partial evaluation identity.
Outcome partial_evaluation_identity() {
  Rng rng(77);
  std::vector<Atom> atoms;
  for (const auto* a : {"t(a)", "s(a)", "t(b)", "s(b)", "u(a,b)"}) atoms.push_back(parse_atom(a));
  int failures = 0;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    Polynomial p = random_polynomial(rng, atoms, 4, 6);
    PartialModel rho;
    Assignment completion, unknown;
    for (const auto& a : atoms) {
      Rational v = random_rational(rng, 3, 5);
      completion[a] = v;
      if (uniform_int(rng, 0, 1)) {
        rho.values[a] = v;
      } else {
        if (uniform_int(rng, 0, 1)) rho.values[a] = std::nullopt;
        unknown[a] = v;
      }
    }
    try {
      if (evaluate(p, completion) != evaluate(partial_evaluate(p, rho), unknown)) ++failures;
    } catch (const std::out_of_range&) {
      ++failures;
    }
  }
  return {failures == 0, fmt("%d triples, %d mismatches", trials, failures)};
}

// 8. Lifted versus unlifted programs over GND(kb, 1).
Outcome lift_transfer() {
  Rng rng(8);
  int same = 0, feasible = 0, infeasible = 0;
  const int runs = 100;
  for (int i = 0; i < runs; ++i) {
    auto kb = parse_kb(random_rank1_kb(rng, "alex"));
    auto gnd = ground(kb, 1);
    auto table = build_bounds_table(kb, gnd.atoms(), gnd.logical);
    Canonicalizer lift(gnd.constants);
    ProgramSpec spec;
    spec.logical = gnd.logical;
    spec.expectation = gnd.expectation;
    spec.bounds = &table;
    spec.k = 1;
    Feasibility unlifted = solve_feasibility(assemble_program(spec)).verdict;
    spec.lift = &lift;
    Feasibility lifted = solve_feasibility(assemble_program(spec)).verdict;
    same += lifted == unlifted;
    feasible += lifted == Feasibility::Feasible;
    infeasible += lifted == Feasibility::Infeasible;
  }
  return {same == runs, fmt("%d/%d identical (feasible %d, infeasible %d)", same, runs, feasible, infeasible)};
}

// 9. SOS bounds contain the exact bounds.
Outcome relaxation_containment() {
  Rng rng(99);
  const std::vector<std::string> names = {"t(a)", "s(a)", "u(a)", "t(b)", "s(b)"};
  int checked = 0, violations = 0, conflicts = 0;
  while (checked < 200) {
    int n = uniform_int(rng, 2, 5);
    std::vector<Atom> atoms;
    for (int i = 0; i < n; ++i) atoms.push_back(parse_atom(names[i]));
    std::vector<GroundConstraint> logical;
    BoundsTable table;
    for (const auto& a : atoms) {
      logical.push_back(normalize(GroundConstraint::Kind::Logical, Polynomial(Monomial(a, 2)) - Polynomial(Monomial(a)),
                                  Relation::Eq, 0, "idempotent"));
      table.bound_atom(a, {0, 1});
    }
    for (int i = uniform_int(rng, 0, 3); i > 0; --i)
      logical.push_back(
          normalize(GroundConstraint::Kind::Logical, random_polynomial(rng, atoms, 2, 3), Relation::Ge, 0, "random"));
    PartialModel rho;
    for (const auto& a : atoms) {
      int r = uniform_int(rng, 0, 3);
      if (r == 0) rho.values[a] = uniform_int(rng, 0, 1);
      if (r == 1) rho.values[a] = std::nullopt;
    }
    Monomial v = random_monomial(rng, atoms, 2);
    auto grid = default_grid({atoms.begin(), atoms.end()}, logical, table);
    std::pair<Rational, Rational> exact;
    try {
      exact = brute_force_bounds(v, rho, logical, grid);
    } catch (const DataConflict&) {
      ++conflicts;
      continue;
    }
    TightestBounds tb(logical, table, 2);
    try {
      auto sos = tb.bounds(v, rho);
      const double tol = 1e-7;
      if (!(sos.first <= to_double(exact.first) + tol && to_double(exact.second) <= sos.second + tol)) ++violations;
    } catch (const DataConflict&) {
      ++violations;  // a completion exists, so the relaxation cannot be empty
    }
    ++checked;
  }
  return {violations == 0, fmt("%d pairs (skipped %d with no completion), %d violations", checked, conflicts, violations)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit;  // seconds, 0 for none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "reference identities verify exactly", 1, reference_identities},
      {2, "drug trial end to end", 60, drug_end_to_end},
      {3, "witnessing fraction", 0, witnessing},
      {4, "grounding example", 1, grounding_example},
      {5, "oracle agreement", 0, oracle_agreement},
      {6, "Hoeffding coverage", 0, hoeffding_coverage},
      {7, "partial evaluation identity", 0, partial_evaluation_identity},
      {8, "lift transfer", 0, lift_transfer},
      {9, "relaxation containment", 0, relaxation_containment},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = c.limit == 0 || secs < c.limit;
    bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("[%s] criterion %d: %s: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_time ? "" : ", over time limit");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
