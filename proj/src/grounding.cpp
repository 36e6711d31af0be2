#include "sosr/grounding.hpp"

#include <algorithm>
#include <functional>

namespace sosr {

std::set<Atom> GroundConstraintSet::atoms() const {
  std::set<Atom> out;
  auto add = [&](const GroundConstraint& g) {
    auto a = g.poly.atoms();
    out.insert(a.begin(), a.end());
  };
  for (const auto& g : logical) add(g);
  for (const auto& g : expectation) add(g);
  for (const auto& r : rules) {
    add(r.premise);
    add(r.conclusion);
  }
  return out;
}

std::vector<Name> name_universe(const std::set<std::string>& constants, int k) {
  std::vector<Name> out;
  for (const auto& c : constants) out.push_back(Name::constant(c));
  for (int i = 1; i <= k; ++i) out.push_back(Name::generic(i));
  return out;
}

namespace {

void for_each_substitution(const std::vector<Variable>& vars, const std::vector<Name>& universe,
                           const EqualityExpr& guard, const std::function<void(const Substitution&)>& visit) {
  Substitution theta;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == vars.size()) {
      if (guard.evaluate(theta)) visit(theta);
      return;
    }
    for (const Name& n : universe) {
      theta[vars[i]] = n;
      rec(i + 1);
    }
  };
  rec(0);
}

std::string label_of(const Substitution& theta) {
  std::string out;
  for (const auto& [v, n] : theta) out += (out.empty() ? "" : ",") + v.name + "=" + n.str();
  return out;
}

bool trivially_true(const GroundConstraint& g) {
  if (!g.poly.is_constant()) return false;
  Rational c = g.poly.constant_term();
  return g.is_equality() ? c == 0 : c >= 0;
}

}  // namespace

GroundConstraintSet ground(const KnowledgeBase& kb, int k, const std::set<std::string>& extra_constants) {
  if (k < 0) throw std::invalid_argument("negative grounding width");
  GroundConstraintSet out;
  out.k = k;
  out.constants = kb.constants;
  out.constants.insert(extra_constants.begin(), extra_constants.end());
  out.universe = name_universe(out.constants, k);

  std::set<GroundConstraint> logical, expectation;
  std::map<std::pair<GroundConstraint, GroundConstraint>, std::string> rules;
  for (const auto& c : kb.constraints) {
    if (const auto* l = std::get_if<LogicalConstraint>(&c)) {
      for_each_substitution(l->variables, out.universe, l->guard, [&](const Substitution& theta) {
        auto g = normalize(GroundConstraint::Kind::Logical, instantiate(l->body.poly, theta), l->body.rel,
                           l->body.rhs, "kb");
        if (!trivially_true(g)) logical.insert(std::move(g));
      });
    } else if (const auto* e = std::get_if<ExpectationConstraint>(&c)) {
      for_each_substitution(e->variables, out.universe, e->guard, [&](const Substitution& theta) {
        auto g = normalize(GroundConstraint::Kind::Expectation, instantiate(e->body.linear, theta), e->body.rel,
                           e->body.rhs, "kb");
        if (!trivially_true(g)) expectation.insert(std::move(g));
      });
    } else {
      const auto& r = std::get<ConditionalRule>(c);
      for_each_substitution(r.variables, out.universe, r.guard, [&](const Substitution& theta) {
        auto premise = normalize(GroundConstraint::Kind::Expectation, instantiate(r.premise.linear, theta),
                                 r.premise.rel, r.premise.rhs, "rule-premise");
        auto conclusion = normalize(GroundConstraint::Kind::Logical, instantiate(r.conclusion.poly, theta),
                                    r.conclusion.rel, r.conclusion.rhs, "rule");
        if (trivially_true(conclusion)) return;
        rules.try_emplace({premise, conclusion}, label_of(theta));
      });
    }
  }
  out.logical.assign(logical.begin(), logical.end());
  out.expectation.assign(expectation.begin(), expectation.end());
  for (auto& [key, label] : rules) out.rules.push_back({label, key.first, key.second});
  return out;
}

// ---------------------------------------------------------------------------
// Canonical forms

namespace {

constexpr std::size_t kMaxRelabelings = 40320;

// Renaming-invariant description of where a name occurs in m.
std::vector<std::string> occurrence_signature(const Monomial& m, const Name& n,
                                              const std::function<bool(const Name&)>& renameable) {
  std::vector<std::string> sig;
  for (const auto& [atom, e] : m.factors()) {
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      if (atom.args[i] != n) continue;
      std::string s = atom.predicate + "(";
      for (std::size_t j = 0; j < atom.args.size(); ++j) {
        if (j) s += ",";
        if (atom.args[j] == n)
          s += "@";
        else
          s += renameable(atom.args[j]) ? "_" : atom.args[j].id;
      }
      s += ")^" + std::to_string(e);
      sig.push_back(std::move(s));
    }
  }
  std::sort(sig.begin(), sig.end());
  return sig;
}

Monomial relabel(const Monomial& m, const std::map<Name, Name>& mapping) {
  std::vector<Monomial::Factor> factors;
  factors.reserve(m.factors().size());
  for (const auto& [atom, e] : m.factors()) {
    Atom a = atom;
    for (Name& n : a.args)
      if (auto it = mapping.find(n); it != mapping.end()) n = it->second;
    factors.emplace_back(std::move(a), e);
  }
  return Monomial(std::move(factors));
}

}  // namespace

const Monomial& Canonicalizer::operator()(const Monomial& m) const {
  auto it = cache_.find(m);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(m, compute(m)).first->second;
}

Monomial Canonicalizer::compute(const Monomial& m) const {
  auto is_renameable = [this](const Name& n) { return renameable(n); };
  std::set<Name> names;
  for (const auto& [atom, e] : m.factors())
    for (const Name& n : atom.args)
      if (renameable(n)) names.insert(n);
  if (names.empty()) return m;

  // Names with different signatures can never swap, so only permute within
  // cells of equal signature; cells take index ranges in signature order.
  std::map<std::vector<std::string>, std::vector<Name>> cells_by_sig;
  for (const Name& n : names) cells_by_sig[occurrence_signature(m, n, is_renameable)].push_back(n);
  std::vector<std::vector<Name>> cells;
  std::size_t work = 1;
  for (auto& [sig, cell] : cells_by_sig) {
    for (std::size_t f = 2; f <= cell.size(); ++f) work = std::min(work * f, kMaxRelabelings + 1);
    cells.push_back(std::move(cell));
  }

  std::map<Name, Name> mapping;
  if (work > kMaxRelabelings) {
    // Too symmetric to search exhaustively: first-occurrence order inside
    // each cell. Deterministic but not guaranteed orbit-invariant.
    int next = 1;
    for (const auto& cell : cells)
      for (const Name& n : cell) mapping[n] = Name::generic(next++);
    return relabel(m, mapping);
  }

  std::optional<Monomial> best;
  std::vector<int> offsets;
  int next = 1;
  for (const auto& cell : cells) {
    offsets.push_back(next);
    next += static_cast<int>(cell.size());
  }
  std::function<void(std::size_t)> rec = [&](std::size_t c) {
    if (c == cells.size()) {
      Monomial candidate = relabel(m, mapping);
      if (!best || candidate < *best) best = std::move(candidate);
      return;
    }
    std::vector<int> perm(cells[c].size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = offsets[c] + static_cast<int>(i);
    do {
      for (std::size_t i = 0; i < perm.size(); ++i) mapping[cells[c][i]] = Name::generic(perm[i]);
      rec(c + 1);
    } while (std::next_permutation(perm.begin(), perm.end()));
  };
  rec(0);
  return *best;
}

Monomial canonical_form(const Monomial& m, const std::set<std::string>& constants) {
  return Canonicalizer(constants)(m);
}

std::vector<LiftClass> equivalence_classes(const std::set<Monomial>& monomials,
                                           const std::set<std::string>& constants) {
  Canonicalizer canon(constants);
  std::map<Monomial, std::vector<Monomial>> fibers;
  for (const Monomial& m : monomials) fibers[canon(m)].push_back(m);
  std::vector<LiftClass> out;
  for (auto& [rep, members] : fibers) out.push_back({rep, std::move(members)});
  std::stable_sort(out.begin(), out.end(), [](const LiftClass& a, const LiftClass& b) {
    return graded_less(a.representative, b.representative);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Bounds

std::optional<Atom> idempotent_atom(const GroundConstraint& g) {
  if (!g.is_equality() || g.poly.terms().size() != 2) return std::nullopt;
  const auto& terms = g.poly.terms();
  const auto& [m1, c1] = *terms.begin();
  const auto& [m2, c2] = *std::next(terms.begin());
  if (c1 != -c2) return std::nullopt;
  auto single = [](const Monomial& m) { return m.factors().size() == 1; };
  if (!single(m1) || !single(m2) || m1.factors()[0].first != m2.factors()[0].first) return std::nullopt;
  int e1 = m1.degree(), e2 = m2.degree();
  if (std::min(e1, e2) != 1 || std::max(e1, e2) != 2) return std::nullopt;
  return m1.factors()[0].first;
}

BoundsTable build_bounds_table(const KnowledgeBase& kb, const std::set<Atom>& atoms,
                               const std::vector<GroundConstraint>& logical) {
  BoundsTable table;
  for (const auto& decl : kb.bounds) {
    if (!decl.pattern) {
      for (const Atom& a : atoms) table.bound_atom(a, decl.range);
      continue;
    }
    const TermMonomial& p = *decl.pattern;
    if (p.degree() == 1) {
      for (const Atom& a : atoms) {
        Substitution b;
        if (matches(p.factors().front().first, a, b)) table.bound_atom(a, decl.range);
      }
    } else {
      table.bound_pattern(p, decl.range);
    }
  }
  for (const auto& g : logical)
    if (auto a = idempotent_atom(g)) table.bound_atom(*a, Interval{0, 1});
  return table;
}

}  // namespace sosr
