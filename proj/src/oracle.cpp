#include "sosr/oracle.hpp"

#include <cmath>

#include "sosr/partial.hpp"

namespace sosr {

ValueGrid default_grid(const std::set<Atom>& atoms, const std::vector<GroundConstraint>& logical,
                       const BoundsTable& table, int resolution) {
  if (resolution < 1) throw std::invalid_argument("grid resolution must be positive");
  std::set<Atom> boolean;
  for (const auto& g : logical)
    if (auto a = idempotent_atom(g)) boolean.insert(*a);
  ValueGrid grid;
  for (const auto& a : atoms) {
    auto& vals = grid.values[a];
    if (boolean.count(a)) {
      vals = {0, 1};
      continue;
    }
    grid.exact = false;
    Interval b = table.require(Monomial(a));
    for (int i = 0; i <= resolution; ++i) vals.push_back(b.lo + (b.hi - b.lo) * Rational(i, resolution));
  }
  return grid;
}

std::vector<Assignment> enumerate_worlds(const std::vector<Atom>& atoms, const ValueGrid& grid, int max_bits) {
  double bits = 0;
  for (const auto& a : atoms) {
    auto it = grid.values.find(a);
    if (it == grid.values.end() || it->second.empty()) throw std::invalid_argument("no grid values for " + a.str());
    bits += std::log2(static_cast<double>(it->second.size()));
  }
  if (bits > max_bits + 1e-9)
    throw SizeGuardError("enumeration needs " + std::to_string(bits) + " bits, guard is " + std::to_string(max_bits));
  std::vector<Assignment> out{Assignment{}};
  for (const auto& a : atoms) {
    std::vector<Assignment> next;
    const auto& vals = grid.values.at(a);
    next.reserve(out.size() * vals.size());
    for (const auto& w : out)
      for (const auto& v : vals) {
        next.push_back(w);
        next.back()[a] = v;
      }
    out = std::move(next);
  }
  return out;
}

bool satisfies(const Assignment& world, const std::vector<GroundConstraint>& logical) {
  for (const auto& g : logical) {
    Rational v = evaluate(g.poly, world);
    if (g.is_equality() ? v != 0 : v < 0) return false;
  }
  return true;
}

std::optional<std::vector<Rational>> exact_feasible_point(const std::vector<std::vector<Rational>>& a,
                                                          const std::vector<Rational>& b) {
  const std::size_t m = a.size();
  const std::size_t n = m ? a[0].size() : 0;
  const std::size_t cols = n + m;
  // Tableau [A | I | b]; artificial variables start basic.
  std::vector<std::vector<Rational>> t(m, std::vector<Rational>(cols + 1));
  std::vector<std::size_t> basis(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (b[i] < 0) throw std::invalid_argument("right-hand side must be nonnegative");
    for (std::size_t j = 0; j < n; ++j) t[i][j] = a[i][j];
    t[i][n + i] = 1;
    t[i][cols] = b[i];
    basis[i] = n + i;
  }
  // Reduced costs of minimizing the sum of artificials.
  std::vector<Rational> cost(cols + 1);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) cost[j] -= t[i][j];
  for (std::size_t i = 0; i < m; ++i) cost[cols] -= t[i][cols];

  while (true) {
    std::size_t enter = cols;
    for (std::size_t j = 0; j < cols; ++j)
      if (cost[j] < 0) {
        enter = j;
        break;
      }
    if (enter == cols) break;
    std::size_t leave = m;
    Rational best;
    for (std::size_t i = 0; i < m; ++i) {
      if (t[i][enter] <= 0) continue;
      Rational r = t[i][cols] / t[i][enter];
      if (leave == m || r < best || (r == best && basis[i] < basis[leave])) {
        leave = i;
        best = r;
      }
    }
    if (leave == m) break;  // unbounded cannot happen for a sum of artificials
    Rational piv = t[leave][enter];
    for (auto& x : t[leave]) x /= piv;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == leave || t[i][enter] == 0) continue;
      Rational f = t[i][enter];
      for (std::size_t j = 0; j <= cols; ++j)
        if (t[leave][j] != 0) t[i][j] -= f * t[leave][j];
    }
    if (cost[enter] != 0) {
      Rational f = cost[enter];
      for (std::size_t j = 0; j <= cols; ++j)
        if (t[leave][j] != 0) cost[j] -= f * t[leave][j];
    }
    basis[leave] = enter;
  }
  if (cost[cols] != 0) return std::nullopt;
  std::vector<Rational> x(n);
  for (std::size_t i = 0; i < m; ++i)
    if (basis[i] < n) x[basis[i]] = t[i][cols];
    else if (t[i][cols] != 0) return std::nullopt;
  return x;
}

OracleVerdict brute_force_consistency(const std::vector<GroundConstraint>& logical,
                                      const std::vector<GroundConstraint>& expectation, const ValueGrid& grid,
                                      int max_bits) {
  std::set<Atom> atom_set;
  for (const auto* group : {&logical, &expectation})
    for (const auto& g : *group) {
      auto a = g.poly.atoms();
      atom_set.insert(a.begin(), a.end());
    }
  std::vector<Atom> atoms(atom_set.begin(), atom_set.end());
  OracleVerdict out;
  out.exact = true;
  for (const auto& a : atoms)
    if (grid.values.count(a) && grid.values.at(a).size() != 2) out.exact = false;
  out.exact = out.exact && grid.exact;

  // Columns are worlds, deduplicated by their vector of expectation values.
  std::map<std::vector<Rational>, Assignment> columns;
  for (auto& w : enumerate_worlds(atoms, grid, max_bits)) {
    if (!satisfies(w, logical)) continue;
    ++out.worlds;
    std::vector<Rational> col;
    col.reserve(expectation.size());
    for (const auto& g : expectation) col.push_back(evaluate(g.poly, w));
    columns.try_emplace(std::move(col), std::move(w));
  }
  if (columns.empty()) return out;

  // sum p = 1; E[g] - s = 0 for inequalities, E[g] = 0 for equalities.
  std::size_t slacks = 0;
  for (const auto& g : expectation)
    if (!g.is_equality()) ++slacks;
  const std::size_t n = columns.size() + slacks;
  std::vector<std::vector<Rational>> a(expectation.size() + 1, std::vector<Rational>(n));
  std::vector<Rational> b(expectation.size() + 1);
  b[0] = 1;
  std::size_t j = 0;
  for (const auto& [col, w] : columns) {
    a[0][j] = 1;
    for (std::size_t i = 0; i < col.size(); ++i) a[i + 1][j] = col[i];
    ++j;
  }
  for (std::size_t i = 0; i < expectation.size(); ++i)
    if (!expectation[i].is_equality()) a[i + 1][j++] = -1;
  // Rows with a negative right-hand side do not occur: b is (1, 0, ..., 0).
  auto x = exact_feasible_point(a, b);
  if (!x) return out;
  out.satisfiable = true;
  j = 0;
  for (const auto& [col, w] : columns) {
    if ((*x)[j] != 0) out.distribution.emplace_back((*x)[j], w);
    ++j;
  }
  return out;
}

namespace {

// Each rule either concludes, or its premise fails by eps on one side.
OracleVerdict branch_rules(const std::vector<GroundRule>& rules, std::size_t i, std::vector<GroundConstraint>& logical,
                           std::vector<GroundConstraint>& expectation, const ValueGrid& grid, const Rational& eps,
                           int max_bits) {
  if (i == rules.size()) return brute_force_consistency(logical, expectation, grid, max_bits);
  const auto& rule = rules[i];
  logical.push_back(rule.conclusion);
  OracleVerdict v = branch_rules(rules, i + 1, logical, expectation, grid, eps, max_bits);
  logical.pop_back();
  if (v.satisfiable) return v;
  std::vector<Polynomial> failures{-rule.premise.poly - Polynomial(eps)};
  if (rule.premise.is_equality()) failures.push_back(rule.premise.poly - Polynomial(eps));
  for (auto& f : failures) {
    expectation.push_back({GroundConstraint::Kind::Expectation, std::move(f), Relation::Ge, "rule-premise-fails"});
    v = branch_rules(rules, i + 1, logical, expectation, grid, eps, max_bits);
    expectation.pop_back();
    if (v.satisfiable) return v;
  }
  return v;
}

}  // namespace

OracleVerdict brute_force_consistency(const GroundConstraintSet& gnd, const std::vector<GroundConstraint>& extra,
                                      const ValueGrid& grid, const Rational& eps, int max_bits) {
  if (gnd.rules.size() > 16) throw SizeGuardError("too many rule instances for branching");
  std::vector<GroundConstraint> logical = gnd.logical, expectation = gnd.expectation;
  for (const auto& g : extra) (g.kind == GroundConstraint::Kind::Logical ? logical : expectation).push_back(g);
  return branch_rules(gnd.rules, 0, logical, expectation, grid, eps, max_bits);
}

std::pair<Rational, Rational> brute_force_bounds(const Monomial& v, const PartialModel& rho,
                                                 const std::vector<GroundConstraint>& logical, const ValueGrid& grid,
                                                 int max_bits) {
  std::set<Atom> unknown;
  for (const auto& a : v.atoms())
    if (!rho.observed(a)) unknown.insert(a);
  std::vector<Polynomial> restricted;
  std::vector<bool> eq;
  for (const auto& g : logical) {
    Polynomial p = partial_evaluate(g.poly, rho);
    auto a = p.atoms();
    unknown.insert(a.begin(), a.end());
    restricted.push_back(std::move(p));
    eq.push_back(g.is_equality());
  }
  std::vector<Atom> atoms(unknown.begin(), unknown.end());
  std::optional<Rational> lo, hi;
  for (const auto& w : enumerate_worlds(atoms, grid, max_bits)) {
    bool ok = true;
    for (std::size_t i = 0; i < restricted.size() && ok; ++i) {
      Rational x = evaluate(restricted[i], w);
      ok = eq[i] ? x == 0 : x >= 0;
    }
    if (!ok) continue;
    Rational x = evaluate(v, [&](const Atom& a) {
      if (auto o = rho.value(a)) return *o;
      return w.at(a);
    });
    if (!lo || x < *lo) lo = x;
    if (!hi || x > *hi) hi = x;
  }
  if (!lo) throw DataConflict("no completion of the example satisfies the constraints");
  return {*lo, *hi};
}

}  // namespace sosr
