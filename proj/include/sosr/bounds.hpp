#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sosr/polynomial.hpp"

namespace sosr {

// Raised when a monomial lacks finite bounds.
class CompactnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-atom and per-monomial bounds. Undeclared monomial bounds are derived by
// interval arithmetic over atom bounds; declared ones are intersected with the
// derived interval.
class BoundsTable {
 public:
  // Intersects with any existing bound for the atom.
  void bound_atom(const Atom& atom, const Interval& range);
  void bound_monomial(const Monomial& m, const Interval& range);
  // Pattern over terms; variables match any name consistently.
  void bound_pattern(const TermMonomial& pattern, const Interval& range);

  std::optional<Interval> atom_bounds(const Atom& atom) const;
  std::optional<Interval> bounds(const Monomial& m) const;
  Interval require(const Monomial& m) const;

  const std::map<Atom, Interval>& atoms() const { return atoms_; }

 private:
  std::map<Atom, Interval> atoms_;
  std::map<Monomial, Interval> monomials_;
  std::vector<std::pair<TermMonomial, Interval>> patterns_;
};

bool matches(const TermMonomial& pattern, const Monomial& m);
bool matches(const Term& pattern, const Atom& atom, Substitution& binding);

struct NaiveBounds {
  Rational lower;
  Rational upper;
  Rational norm() const { return upper - lower; }
};

// U_p = sum_{c>=0} c U_mu + sum_{c<0} c L_mu, L_p symmetric.
// Throws CompactnessError naming the first unbounded monomial.
NaiveBounds naive_bounds(const Polynomial& p, const BoundsTable& table);

struct CompactnessReport {
  bool ok = true;
  std::vector<Monomial> unbounded;
};

// Every atom needs finite bounds; monomial bounds then follow by products.
CompactnessReport check_explicit_compactness(const std::set<Atom>& atoms, const BoundsTable& table);

}  // namespace sosr
