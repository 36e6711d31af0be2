#include "sosr/polynomial.hpp"

namespace sosr {

Atom instantiate(const Term& term, const Substitution& theta) {
  Atom out;
  out.predicate = term.predicate;
  out.args.reserve(term.args.size());
  for (const Arg& a : term.args) {
    if (const auto* v = std::get_if<Variable>(&a)) {
      auto it = theta.find(*v);
      if (it == theta.end()) throw std::invalid_argument("unbound variable " + v->name);
      out.args.push_back(it->second);
    } else {
      out.args.push_back(std::get<Name>(a));
    }
  }
  return out;
}

Monomial instantiate(const TermMonomial& m, const Substitution& theta) {
  std::vector<Monomial::Factor> factors;
  for (const auto& [t, e] : m.factors()) factors.emplace_back(instantiate(t, theta), e);
  return Monomial(std::move(factors));
}

Polynomial instantiate(const TermPolynomial& p, const Substitution& theta) {
  Polynomial out;
  for (const auto& [m, c] : p.terms()) out.add_term(instantiate(m, theta), c);
  return out;
}

Term as_term(const Atom& atom) {
  Term t;
  t.predicate = atom.predicate;
  for (const Name& n : atom.args) t.args.emplace_back(n);
  return t;
}

TermPolynomial as_term_polynomial(const Polynomial& p) {
  TermPolynomial out;
  for (const auto& [m, c] : p.terms()) {
    std::vector<TermMonomial::Factor> factors;
    for (const auto& [a, e] : m.factors()) factors.emplace_back(as_term(a), e);
    out.add_term(TermMonomial(std::move(factors)), c);
  }
  return out;
}

std::set<Variable> variables_of(const TermPolynomial& p) {
  std::set<Variable> out;
  for (const auto& [m, c] : p.terms())
    for (const auto& [t, e] : m.factors())
      for (const Arg& a : t.args)
        if (const auto* v = std::get_if<Variable>(&a)) out.insert(*v);
  return out;
}

Rational evaluate(const Monomial& m, const std::function<Rational(const Atom&)>& value) {
  Rational out = 1;
  for (const auto& [a, e] : m.factors()) {
    Rational x = value(a);
    for (int i = 0; i < e; ++i) out *= x;
  }
  return out;
}

Rational evaluate(const Polynomial& p, const std::function<Rational(const Atom&)>& value) {
  Rational out = 0;
  for (const auto& [m, c] : p.terms()) out += c * evaluate(m, value);
  return out;
}

Rational evaluate(const Polynomial& p, const std::map<Atom, Rational>& assignment) {
  return evaluate(p, [&](const Atom& a) -> Rational {
    auto it = assignment.find(a);
    if (it == assignment.end()) throw std::out_of_range("no value for atom " + a.str());
    return it->second;
  });
}

std::pair<Rational, Monomial> partial_evaluate(const Monomial& m, const PartialModel& rho) {
  Rational coefficient = 1;
  std::vector<Monomial::Factor> rest;
  for (const auto& [a, e] : m.factors()) {
    if (auto v = rho.value(a)) {
      for (int i = 0; i < e; ++i) coefficient *= *v;
    } else {
      rest.emplace_back(a, e);
    }
  }
  return {coefficient, Monomial(std::move(rest))};
}

Polynomial partial_evaluate(const Polynomial& p, const PartialModel& rho) {
  Polynomial out;
  for (const auto& [m, c] : p.terms()) {
    auto [scale, rest] = partial_evaluate(m, rho);
    out.add_term(rest, c * scale);
  }
  return out;
}

Interval interval_product(const Interval& a, const Interval& b) {
  Rational p[4] = {a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi};
  Interval out{p[0], p[0]};
  for (const Rational& x : p) {
    if (x < out.lo) out.lo = x;
    if (x > out.hi) out.hi = x;
  }
  return out;
}

Interval interval_power(const Interval& a, int exponent) {
  if (exponent == 0) return {1, 1};
  Rational lo = 1, hi = 1;
  for (int i = 0; i < exponent; ++i) {
    lo *= a.lo;
    hi *= a.hi;
  }
  if (exponent % 2 == 1) return {lo, hi};
  if (a.lo >= 0) return {lo, hi};
  if (a.hi <= 0) return {hi, lo};
  return {0, lo > hi ? lo : hi};
}

Interval intersect(const Interval& a, const Interval& b) {
  return {a.lo > b.lo ? a.lo : b.lo, a.hi < b.hi ? a.hi : b.hi};
}

}  // namespace sosr
