#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sosr/grounding.hpp"
#include "sosr/lang.hpp"
#include "sosr/polynomial.hpp"

namespace sosr::test {

inline Atom atom(const std::string& text) { return parse_atom(text); }
inline Polynomial poly(const std::string& text) { return parse_ground_polynomial(text); }
inline Monomial mono(const std::string& text) { return parse_ground_monomial(text); }

// {"t(a)": 1, "s(a)": nullopt}
inline PartialModel model(const std::map<std::string, std::optional<Rational>>& values) {
  PartialModel rho;
  for (const auto& [a, v] : values) rho.values[atom(a)] = v;
  return rho;
}

inline GroundConstraint logical(const std::string& p, Relation rel = Relation::Ge) {
  return normalize(GroundConstraint::Kind::Logical, poly(p), rel, 0, "test");
}
inline GroundConstraint expectation(const std::string& p, Relation rel = Relation::Ge) {
  return normalize(GroundConstraint::Kind::Expectation, poly(p), rel, 0, "test");
}
inline GroundConstraint idempotent(const std::string& a) { return logical(a + "^2 - " + a, Relation::Eq); }

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Small rational in [-range, range] with denominator up to `den`.
inline Rational random_rational(Rng& rng, int range = 3, int den = 4) {
  int q = uniform_int(rng, 1, den);
  Rational r(mpz_class(uniform_int(rng, -range * q, range * q)), mpz_class(q));
  r.canonicalize();
  return r;
}

inline Monomial random_monomial(Rng& rng, const std::vector<Atom>& atoms, int max_degree) {
  int deg = uniform_int(rng, 0, max_degree);
  std::vector<Monomial::Factor> f;
  for (int i = 0; i < deg; ++i) f.emplace_back(atoms[uniform_int(rng, 0, static_cast<int>(atoms.size()) - 1)], 1);
  return Monomial(f);
}

inline Polynomial random_polynomial(Rng& rng, const std::vector<Atom>& atoms, int max_degree, int max_terms) {
  Polynomial p;
  int n = uniform_int(rng, 1, max_terms);
  for (int i = 0; i < n; ++i) p.add_term(random_monomial(rng, atoms, max_degree), random_rational(rng));
  return p;
}

// Every renaming of the renameable names of m onto themselves and onto
// #1..#r, collected; two monomials are equivalent iff these sets meet.
inline std::set<Monomial> renaming_orbit(const Monomial& m, const std::set<std::string>& constants) {
  std::vector<Name> names;
  for (const auto& a : m.atoms())
    for (const auto& n : a.args)
      if ((n.is_generic() || !constants.count(n.id)) && std::find(names.begin(), names.end(), n) == names.end())
        names.push_back(n);
  std::vector<int> perm(names.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i) + 1;
  std::set<Monomial> orbit;
  do {
    std::vector<Monomial::Factor> f;
    for (const auto& [a, e] : m.factors()) {
      Atom b = a;
      for (auto& n : b.args) {
        auto it = std::find(names.begin(), names.end(), n);
        if (it != names.end()) n = Name::generic(perm[it - names.begin()]);
      }
      f.emplace_back(b, e);
    }
    orbit.insert(Monomial(f));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return orbit;
}

// Random rank-1 knowledge base over Boolean atoms p(.) and q(.) with one
// constant, as source text.
inline std::string random_rank1_kb(Rng& rng, const std::string& constant) {
  std::string kb = "const " + constant + "\nbounds * in [0, 1]\n";
  kb += "forall x: p(x)^2 - p(x) = 0\nforall x: q(x)^2 - q(x) = 0\n";
  const std::string c = "(" + constant + ")";
  const std::vector<std::string> open = {"p(x)", "q(x)", "p(x)*q(x)", "p" + c, "q" + c};
  const std::vector<std::string> closed = {"p" + c, "q" + c, "p" + c + "*q" + c};
  auto lin = [&](const std::vector<std::string>& terms, int n) {
    std::string s;
    for (int i = 0; i < n; ++i) {
      Rational k = random_rational(rng, 2, 2);
      if (k == 0) k = 1;
      s += (k < 0 ? " - " : (i ? " + " : "")) + to_string(abs(k)) + "*" +
           terms[uniform_int(rng, 0, static_cast<int>(terms.size()) - 1)];
    }
    return s;
  };
  int logical = uniform_int(rng, 0, 2), expect = uniform_int(rng, 1, 3);
  for (int i = 0; i < logical; ++i)
    kb += "forall x: " + lin(open, uniform_int(rng, 1, 2)) + " >= " + to_string(random_rational(rng, 1, 2)) + "\n";
  for (int i = 0; i < expect; ++i) {
    const char* rel = uniform_int(rng, 0, 1) ? ">=" : "<=";
    bool quantified = uniform_int(rng, 0, 1);
    std::string body = lin(quantified ? open : closed, uniform_int(rng, 1, 2));
    kb += std::string(quantified ? "forall x: " : "") + "E[" + body + "] " + rel + " " +
          to_string(random_rational(rng, 1, 4)) + "\n";
  }
  return kb;
}

}  // namespace sosr::test
