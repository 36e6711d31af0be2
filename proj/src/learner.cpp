#include "sosr/learner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

namespace sosr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Rational round_down(double x) { return from_double(std::floor(x * 1e9)) / Rational(1'000'000'000); }
Rational round_up(double x) { return from_double(std::ceil(x * 1e9)) / Rational(1'000'000'000); }

}  // namespace

std::string slack_variant_name(SlackVariant v) {
  switch (v) {
    case SlackVariant::Printed: return "printed";
    case SlackVariant::Textbook: return "textbook";
    case SlackVariant::Max: return "max";
  }
  return "?";
}

SlackVariant parse_slack_variant(const std::string& s) {
  if (s == "printed") return SlackVariant::Printed;
  if (s == "textbook") return SlackVariant::Textbook;
  if (s == "max") return SlackVariant::Max;
  throw std::invalid_argument("unknown slack variant '" + s + "' (printed, textbook, max)");
}

void LearnerConfig::validate() const {
  if (degree < 2 || degree % 2) throw DegreeError("degree must be an even number >= 2");
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("delta must lie in (0,1)");
  if (!(norm_bound > 0)) throw std::invalid_argument("norm bound S must be positive");
  if (!(eps_q > 0)) throw std::invalid_argument("query margin must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be positive");
}

double log_monomial_count(std::size_t n, int d) {
  const double two_n = 2.0 * static_cast<double>(n);
  double best = -INFINITY;
  std::vector<double> logs;
  for (int i = 0; i <= d && i <= two_n; ++i) {
    double l = std::lgamma(two_n + 1) - std::lgamma(i + 1.0) - std::lgamma(two_n - i + 1);
    logs.push_back(l);
    best = std::max(best, l);
  }
  double sum = 0;
  for (double l : logs) sum += std::exp(l - best);
  return best + std::log(sum);
}

double hoeffding_slack_printed(double s, double delta, std::size_t n, int d, std::size_t m) {
  double arg = log_monomial_count(n, d) - std::log(delta);
  return s * std::sqrt(std::max(0.0, arg)) / (2.0 * static_cast<double>(m));
}

double hoeffding_slack_textbook(double s, double delta, std::size_t n, int d, std::size_t m) {
  double arg = std::log(2.0) + log_monomial_count(n, d) - std::log(delta);
  return s * std::sqrt(std::max(0.0, arg) / (2.0 * static_cast<double>(m)));
}

double hoeffding_slack(const LearnerConfig& cfg, std::size_t n, std::size_t m) {
  double p = hoeffding_slack_printed(cfg.norm_bound, cfg.delta, n, cfg.degree, m);
  double t = hoeffding_slack_textbook(cfg.norm_bound, cfg.delta, n, cfg.degree, m);
  switch (cfg.slack) {
    case SlackVariant::Printed: return p;
    case SlackVariant::Textbook: return t;
    case SlackVariant::Max: return std::max(p, t);
  }
  return std::max(p, t);
}

const MomentInterval* MomentIntervalTable::find(const Monomial& representative) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), representative,
                             [](const MomentInterval& e, const Monomial& m) { return graded_less(e.representative, m); });
  if (it != entries.end() && it->representative == representative) return &*it;
  return nullptr;
}

std::map<Monomial, Interval> MomentIntervalTable::informative() const {
  std::map<Monomial, Interval> out;
  for (const auto& e : entries) {
    Interval iv = intersect(e.widened, e.global);
    if (iv.lo > e.global.lo || iv.hi < e.global.hi) out.emplace(e.representative, e.widened);
  }
  return out;
}

MomentIntervalTable learn_moment_bounds(const std::vector<PartialModel>& data,
                                        const std::vector<GroundConstraint>& logical,
                                        const std::vector<LiftClass>& classes, const BoundsTable& table,
                                        const LearnerConfig& cfg, double slack) {
  if (data.empty()) throw DataError(0, "empty dataset");
  // Identical examples give identical bounds; solve each distinct one once.
  std::map<PartialModel, std::size_t> counts;
  for (const auto& rho : data) ++counts[rho];
  std::vector<std::pair<const PartialModel*, std::size_t>> distinct;
  for (const auto& [rho, n] : counts) distinct.emplace_back(&rho, n);

  const std::size_t nc = classes.size();
  std::vector<std::vector<std::pair<double, double>>> per_example(distinct.size());
  std::vector<std::exception_ptr> errors(distinct.size());
  auto work = [&](std::size_t first, std::size_t stride) {
    TightestBounds tb(logical, table, cfg.degree, SolveOptions{cfg.tol, {}, 1'000'000});
    for (std::size_t i = first; i < distinct.size(); i += stride) {
      try {
        auto ex = tb.prepare(*distinct[i].first);
        auto& out = per_example[i];
        out.reserve(nc);
        for (const auto& c : classes) out.push_back(tb.bounds(c.representative, ex));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), distinct.size());
  if (workers <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  MomentIntervalTable out;
  out.slack = slack;
  out.m = data.size();
  out.distinct_examples = distinct.size();
  const double m = static_cast<double>(data.size());
  for (std::size_t c = 0; c < nc; ++c) {
    double lo = 0, hi = 0;
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      lo += static_cast<double>(distinct[i].second) * per_example[i][c].first;
      hi += static_cast<double>(distinct[i].second) * per_example[i][c].second;
    }
    MomentInterval e;
    e.representative = classes[c].representative;
    e.members = classes[c].members.size();
    e.global = table.require(e.representative);
    e.lower = std::clamp(lo / m, to_double(e.global.lo), to_double(e.global.hi));
    e.upper = std::clamp(hi / m, e.lower, to_double(e.global.hi));
    e.widened = {round_down(e.lower - slack), round_up(e.upper + slack)};
    out.entries.push_back(std::move(e));
  }
  std::sort(out.entries.begin(), out.entries.end(),
            [](const MomentInterval& a, const MomentInterval& b) { return graded_less(a.representative, b.representative); });
  return out;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Consistent: return "Consistent";
    case Verdict::Refuted: return "Refuted";
    case Verdict::Proved: return "Proved";
    case Verdict::Unproved: return "Unproved";
    case Verdict::Unknown: return "Unknown";
  }
  return "?";
}

Restriction restrict_to(const std::set<Atom>& seed, const std::vector<GroundConstraint>& logical,
                        const std::vector<GroundConstraint>& expectation) {
  Restriction out;
  out.atoms = seed;
  std::vector<bool> used_l(logical.size()), used_e(expectation.size());
  auto touches = [&](const GroundConstraint& g) {
    for (const auto& a : g.poly.atoms())
      if (out.atoms.count(a)) return true;
    return false;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto [list, used] : {std::pair{&logical, &used_l}, std::pair{&expectation, &used_e}})
      for (std::size_t i = 0; i < list->size(); ++i) {
        if ((*used)[i] || !touches((*list)[i])) continue;
        (*used)[i] = true;
        changed = true;
        auto a = (*list)[i].poly.atoms();
        out.atoms.insert(a.begin(), a.end());
      }
  }
  for (std::size_t i = 0; i < logical.size(); ++i)
    if (used_l[i]) out.logical.push_back(logical[i]);
  for (std::size_t i = 0; i < expectation.size(); ++i)
    if (used_e[i]) out.expectation.push_back(expectation[i]);
  return out;
}

namespace {

struct Context {
  const BoundsTable* bounds;
  const std::map<Monomial, Interval>* learned;
  const Canonicalizer* canon;
  int degree;
  int k;
  SolveOptions options;
};

FeasibilityResult solve_restricted(const Context& ctx, const Restriction& r) {
  ProgramSpec spec;
  spec.logical = r.logical;
  spec.expectation = r.expectation;
  spec.extra_atoms = r.atoms;
  spec.bounds = ctx.bounds;
  spec.learned = ctx.learned;
  spec.degree = ctx.degree;
  spec.lift = ctx.canon;
  spec.k = ctx.k;
  return solve_feasibility(assemble_program(spec), ctx.options);
}

std::set<Atom> atoms_of(const std::vector<GroundConstraint>& gs) {
  std::set<Atom> out;
  for (const auto& g : gs) {
    auto a = g.poly.atoms();
    out.insert(a.begin(), a.end());
  }
  return out;
}

// Staged: the added constraints with their closure first, then the whole
// system. A restricted refutation already refutes the whole system.
GoalOutcome solve_goal(const Context& ctx, const std::string& label, const std::vector<GroundConstraint>& added,
                       const std::vector<GroundConstraint>& logical, const std::vector<GroundConstraint>& expectation,
                       std::optional<Certificate>& cert, const std::string& stage) {
  std::vector<GroundConstraint> l = logical, e = expectation;
  for (const auto& g : added) (g.kind == GroundConstraint::Kind::Logical ? l : e).push_back(g);
  GoalOutcome out{label, Feasibility::Unknown, stage, 0};
  Restriction r = restrict_to(atoms_of(added), l, e);
  FeasibilityResult res = solve_restricted(ctx, r);
  bool whole = r.logical.size() == l.size() && r.expectation.size() == e.size();
  if (res.verdict != Feasibility::Infeasible && !whole) {
    Restriction all;
    all.logical = l;
    all.expectation = e;
    all.atoms = atoms_of(l);
    auto ea = atoms_of(e);
    all.atoms.insert(ea.begin(), ea.end());
    all.atoms.insert(r.atoms.begin(), r.atoms.end());
    res = solve_restricted(ctx, all);
    out.stage = "full";
  }
  out.verdict = res.verdict;
  out.t = res.t;
  if (res.verdict == Feasibility::Infeasible) cert = std::move(res.certificate);
  return out;
}

std::vector<Polynomial> witness_polys(const GroundConstraint& g) {
  if (g.is_equality()) return {g.poly, -g.poly};
  return {g.poly};
}

}  // namespace

PreparedRun prepare_run(const KnowledgeBase& kb, const std::optional<Query>& query,
                        const std::vector<PartialModel>& data, const LearnerConfig& cfg,
                        const std::optional<std::vector<std::string>>& names) {
  cfg.validate();
  PreparedRun run;
  std::set<std::string> extra;
  if (query) extra = query_constants(*query);
  for (const auto& rho : data)
    for (const auto& [a, v] : rho.values)
      for (const auto& n : a.args)
        if (!n.is_generic()) extra.insert(n.id);
  run.lift_constants = kb.constants;
  run.lift_constants.insert(extra.begin(), extra.end());
  run.k = cfg.k >= 0 ? cfg.k : std::max(quantifier_rank(kb), query ? quantifier_rank(*query) : 0);
  if (names) {
    // Pool names are renameable: they join the grounding but not the
    // canonicalizer's constants.
    for (const auto& n : *names) extra.insert(n);
    run.k = 0;
  }
  run.gnd = ground(kb, run.k, extra);

  if (query) {
    if (cfg.mode == DecideMode::Hypothesis)
      run.instances = query_instances(*query, run.gnd.universe);
    else
      run.goals = negate_query(*query, from_double(cfg.eps_q), run.gnd.universe);
  }
  run.atoms = run.gnd.atoms();
  for (const auto& [l, g] : run.instances) {
    auto a = g.poly.atoms();
    run.atoms.insert(a.begin(), a.end());
  }
  for (const auto& goal : run.goals) {
    auto a = atoms_of(goal.added);
    run.atoms.insert(a.begin(), a.end());
  }
  run.bounds = build_bounds_table(kb, run.atoms, run.gnd.logical);
  auto compact = check_explicit_compactness(run.atoms, run.bounds);
  if (!compact.ok) throw CompactnessError("no finite bounds for " + compact.unbounded.front().str());

  std::size_t dropped = 0;
  for (const auto& rho : data)
    for (const auto& [a, v] : rho.values)
      if (!run.atoms.count(a)) ++dropped;
  if (dropped)
    run.warnings.push_back(std::to_string(dropped) +
                           " data entries mention atoms outside the grounding and were ignored");
  check_data_bounds(data, run.bounds);

  std::set<Monomial> monos;
  for (const auto& m : monomials_up_to(run.atoms, cfg.degree)) monos.insert(m);
  run.classes = equivalence_classes(monos, run.lift_constants);
  return run;
}

DecisionReport decide_consistency(const KnowledgeBase& kb, const std::optional<Query>& query,
                                  const std::vector<PartialModel>& data, const LearnerConfig& cfg,
                                  const std::optional<std::vector<std::string>>& names) {
  const auto t_start = Clock::now();
  PreparedRun run = prepare_run(kb, query, data, cfg, names);
  const GroundConstraintSet& gnd = run.gnd;
  const std::set<Atom>& atoms = run.atoms;
  const BoundsTable& table = run.bounds;
  const int k = run.k;
  const auto& instances = run.instances;
  const auto& goals = run.goals;

  DecisionReport rep;
  rep.mode = cfg.mode;
  rep.degree = cfg.degree;
  if (query) rep.query = render_query(*query);
  rep.k = names ? static_cast<int>(names->size()) : k;
  rep.constants = run.lift_constants;
  rep.atoms = atoms.size();
  rep.lift_classes = run.classes.size();
  rep.warnings = run.warnings;
  Canonicalizer canon(run.lift_constants);
  const auto& classes = run.classes;

  rep.slack_printed = hoeffding_slack_printed(cfg.norm_bound, cfg.delta, atoms.size(), cfg.degree,
                                              std::max<std::size_t>(data.size(), 1));
  rep.slack_textbook = hoeffding_slack_textbook(cfg.norm_bound, cfg.delta, atoms.size(), cfg.degree,
                                                std::max<std::size_t>(data.size(), 1));
  {
    const double n = static_cast<double>(atoms.size());
    rep.sample_complexity_log10 = (2 * std::log(cfg.norm_bound) + (n - 1) * std::log(n + cfg.degree) +
                                   std::log(std::log(1 / cfg.delta))) /
                                  std::log(10.0);
  }
  rep.timings["ground"] = seconds_since(t_start);

  std::map<Monomial, Interval> learned;
  if (!data.empty()) {
    auto t0 = Clock::now();
    double slack = hoeffding_slack(cfg, atoms.size(), data.size());
    rep.table = learn_moment_bounds(data, gnd.logical, classes, table, cfg, slack);
    learned = rep.table->informative();
    rep.timings["learn"] = seconds_since(t0);

    t0 = Clock::now();
    TightestBounds tb(gnd.logical, table, cfg.degree, SolveOptions{cfg.tol, {}, 1'000'000});
    std::vector<Polynomial> polys;
    std::vector<std::string> labels;
    for (const auto& g : gnd.logical)
      for (auto& p : witness_polys(g)) {
        labels.push_back(p.str() + " >= 0");
        polys.push_back(std::move(p));
      }
    if (!polys.empty()) {
      Testability tst = estimate_testability(polys, data, tb);
      WitnessStats ws;
      ws.joint = tst.joint;
      for (std::size_t i = 0; i < polys.size(); ++i) ws.per_constraint.emplace_back(labels[i], tst.per_constraint[i]);
      rep.witnessing = std::move(ws);
    }
    rep.timings["witness"] = seconds_since(t0);
  }

  Context ctx{&table, &learned, &canon, cfg.degree, k, SolveOptions{cfg.tol, {}, 1'000'000}};

  // Rule pre-phase: a conclusion joins the logical constraints once its
  // premise is proved, i.e. its negation is refuted. Repeat until stable.
  auto t_rules = Clock::now();
  std::vector<GroundConstraint> logical = gnd.logical;
  std::vector<bool> done(gnd.rules.size(), false);
  rep.rules.resize(gnd.rules.size());
  for (std::size_t i = 0; i < gnd.rules.size(); ++i) {
    const auto& r = gnd.rules[i];
    rep.rules[i].label = r.label;
    rep.rules[i].premise = r.premise.str();
    rep.rules[i].conclusion = r.conclusion.str();
  }
  const Rational eps = from_double(cfg.eps_q);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < gnd.rules.size(); ++i) {
      if (done[i]) continue;
      const auto& rule = gnd.rules[i];
      std::vector<Polynomial> negations{-rule.premise.poly - Polynomial(eps)};
      if (rule.premise.is_equality()) negations.push_back(rule.premise.poly - Polynomial(eps));
      bool proved = true;
      std::optional<Certificate> cert;
      for (const auto& neg : negations) {
        GroundConstraint g{GroundConstraint::Kind::Expectation, neg, Relation::Ge, "negated-premise"};
        if (neg.is_constant()) {
          proved = proved && neg.constant_term() < 0;
          continue;
        }
        std::vector<GroundConstraint> e = gnd.expectation;
        e.push_back(g);
        Restriction res = restrict_to(g.poly.atoms(), logical, e);
        FeasibilityResult fr = solve_restricted(ctx, res);
        if (fr.verdict != Feasibility::Infeasible) {
          proved = false;
          break;
        }
        if (!cert) cert = std::move(fr.certificate);
      }
      if (!proved) continue;
      done[i] = true;
      changed = true;
      rep.rules[i].proved = true;
      rep.rules[i].certificate = std::move(cert);
      logical.push_back(rule.conclusion);
    }
  }
  rep.timings["rules"] = seconds_since(t_rules);

  auto t_solve = Clock::now();
  if (cfg.mode == DecideMode::Hypothesis) {
    // Each query instance alone first, then the whole query, then the
    // system with no query at all when there is none.
    std::vector<GroundConstraint> all;
    for (const auto& [label, g] : instances) all.push_back(g);
    bool refuted = false, unknown = false;
    if (instances.size() > 1) {
      for (const auto& [label, g] : instances) {
        std::optional<Certificate> cert;
        GoalOutcome o = solve_goal(ctx, label, {g}, logical, gnd.expectation, cert, "instance");
        rep.goals.push_back(o);
        if (o.verdict == Feasibility::Infeasible) {
          rep.certificate = std::move(cert);
          rep.refuted_by = label;
          refuted = true;
          break;
        }
      }
    }
    if (!refuted) {
      std::optional<Certificate> cert;
      GoalOutcome o;
      if (all.empty()) {
        Restriction whole;
        whole.logical = logical;
        whole.expectation = gnd.expectation;
        whole.atoms = atoms;
        FeasibilityResult fr = solve_restricted(ctx, whole);
        o = {"kb", fr.verdict, "full", fr.t};
        if (fr.verdict == Feasibility::Infeasible) cert = std::move(fr.certificate);
      } else {
        o = solve_goal(ctx, query ? "query" : "kb", all, logical, gnd.expectation, cert, "query");
      }
      rep.goals.push_back(o);
      if (o.verdict == Feasibility::Infeasible) {
        rep.certificate = std::move(cert);
        rep.refuted_by = o.label;
        refuted = true;
      } else if (o.verdict == Feasibility::Unknown) {
        unknown = true;
      }
    }
    rep.verdict = refuted ? Verdict::Refuted : (unknown ? Verdict::Unknown : Verdict::Consistent);
  } else {
    bool all_refuted = true, unknown = false;
    for (const auto& goal : goals) {
      std::optional<Certificate> cert;
      GoalOutcome o = solve_goal(ctx, goal.label, goal.added, logical, gnd.expectation, cert, "goal");
      rep.goals.push_back(o);
      if (o.verdict != Feasibility::Infeasible) {
        all_refuted = false;
        unknown = unknown || o.verdict == Feasibility::Unknown;
        break;
      }
      if (!rep.certificate) rep.certificate = std::move(cert);
    }
    if (goals.empty()) all_refuted = false;
    rep.verdict = all_refuted ? Verdict::Proved : (unknown ? Verdict::Unknown : Verdict::Unproved);
  }
  rep.timings["solve"] = seconds_since(t_solve);
  rep.timings["total"] = seconds_since(t_start);
  return rep;
}

std::vector<SweepEntry> sweep_groundings(const KnowledgeBase& kb, const std::optional<Query>& query,
                                         const std::vector<PartialModel>& data, const LearnerConfig& cfg,
                                         const std::vector<std::string>& pool) {
  int k = cfg.k >= 0 ? cfg.k : std::max(quantifier_rank(kb), query ? quantifier_rank(*query) : 0);
  std::vector<std::string> names(pool.begin(), pool.end());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  if (k > static_cast<int>(names.size())) throw std::invalid_argument("name pool smaller than the grounding width");
  std::vector<SweepEntry> out;
  std::vector<bool> pick(names.size(), false);
  std::fill(pick.begin(), pick.begin() + k, true);
  do {
    std::vector<std::string> subset;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (pick[i]) subset.push_back(names[i]);
    out.push_back({subset, decide_consistency(kb, query, data, cfg, subset)});
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

}  // namespace sosr
