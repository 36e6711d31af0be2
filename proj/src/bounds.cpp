#include "sosr/bounds.hpp"

#include <numeric>

namespace sosr {

void BoundsTable::bound_atom(const Atom& atom, const Interval& range) {
  auto [it, inserted] = atoms_.try_emplace(atom, range);
  if (!inserted) it->second = intersect(it->second, range);
}

void BoundsTable::bound_monomial(const Monomial& m, const Interval& range) {
  if (m.degree() == 1 && m.factors().front().second == 1) {
    bound_atom(m.factors().front().first, range);
    return;
  }
  auto [it, inserted] = monomials_.try_emplace(m, range);
  if (!inserted) it->second = intersect(it->second, range);
}

void BoundsTable::bound_pattern(const TermMonomial& pattern, const Interval& range) {
  patterns_.emplace_back(pattern, range);
}

std::optional<Interval> BoundsTable::atom_bounds(const Atom& atom) const {
  auto it = atoms_.find(atom);
  if (it == atoms_.end()) return std::nullopt;
  return it->second;
}

std::optional<Interval> BoundsTable::bounds(const Monomial& m) const {
  Interval out{1, 1};
  for (const auto& [a, e] : m.factors()) {
    auto b = atom_bounds(a);
    if (!b) return std::nullopt;
    out = interval_product(out, interval_power(*b, e));
  }
  if (auto it = monomials_.find(m); it != monomials_.end()) out = intersect(out, it->second);
  for (const auto& [pattern, range] : patterns_)
    if (matches(pattern, m)) out = intersect(out, range);
  return out;
}

Interval BoundsTable::require(const Monomial& m) const {
  auto b = bounds(m);
  if (!b) throw CompactnessError("no finite bounds for monomial " + m.str());
  return *b;
}

bool matches(const Term& pattern, const Atom& atom, Substitution& binding) {
  if (pattern.predicate != atom.predicate || pattern.args.size() != atom.args.size()) return false;
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    const Arg& a = pattern.args[i];
    if (const auto* v = std::get_if<Variable>(&a)) {
      auto [it, inserted] = binding.try_emplace(*v, atom.args[i]);
      if (!inserted && it->second != atom.args[i]) return false;
    } else if (std::get<Name>(a) != atom.args[i]) {
      return false;
    }
  }
  return true;
}

namespace {

bool match_factors(const std::vector<TermMonomial::Factor>& pattern, std::vector<bool>& used,
                   std::size_t next, const std::vector<Monomial::Factor>& target, Substitution& binding) {
  if (next == pattern.size()) return true;
  for (std::size_t j = 0; j < target.size(); ++j) {
    if (used[j] || target[j].second != pattern[next].second) continue;
    Substitution trial = binding;
    if (!matches(pattern[next].first, target[j].first, trial)) continue;
    used[j] = true;
    if (match_factors(pattern, used, next + 1, target, trial)) {
      binding = std::move(trial);
      return true;
    }
    used[j] = false;
  }
  return false;
}

}  // namespace

bool matches(const TermMonomial& pattern, const Monomial& m) {
  if (pattern.factors().size() != m.factors().size()) return false;
  std::vector<bool> used(m.factors().size(), false);
  Substitution binding;
  return match_factors(pattern.factors(), used, 0, m.factors(), binding);
}

NaiveBounds naive_bounds(const Polynomial& p, const BoundsTable& table) {
  NaiveBounds out{0, 0};
  for (const auto& [m, c] : p.terms()) {
    Interval b = m.is_constant() ? Interval{1, 1} : table.require(m);
    if (c >= 0) {
      out.upper += c * b.hi;
      out.lower += c * b.lo;
    } else {
      out.upper += c * b.lo;
      out.lower += c * b.hi;
    }
  }
  return out;
}

CompactnessReport check_explicit_compactness(const std::set<Atom>& atoms, const BoundsTable& table) {
  CompactnessReport report;
  for (const Atom& a : atoms) {
    if (!table.atom_bounds(a)) {
      report.ok = false;
      report.unbounded.emplace_back(a);
    }
  }
  return report;
}

}  // namespace sosr
