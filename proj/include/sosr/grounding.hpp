#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sosr/bounds.hpp"
#include "sosr/lang.hpp"

namespace sosr {

// Ground instance of a conditional rule: premise is an expectation
// constraint, conclusion a logical one.
struct GroundRule {
  std::string label;
  GroundConstraint premise;
  GroundConstraint conclusion;
};

struct GroundConstraintSet {
  std::vector<GroundConstraint> logical;
  std::vector<GroundConstraint> expectation;
  std::vector<GroundRule> rules;
  // Constants (sorted) followed by the generics #1..#k.
  std::vector<Name> universe;
  std::set<std::string> constants;
  int k = 0;

  std::set<Atom> atoms() const;
};

// GND(kb, k). `extra_constants` (e.g. from a query) join the constant set.
// Constraints are deduplicated and sorted; satisfied constant constraints are
// dropped, violated ones kept.
GroundConstraintSet ground(const KnowledgeBase& kb, int k, const std::set<std::string>& extra_constants = {});

std::vector<Name> name_universe(const std::set<std::string>& constants, int k);

// Lexicographically least member of the renaming orbit of m. Renameable names
// are generics and any constant outside `constants`; they are relabeled onto
// #1..#r.
class Canonicalizer {
 public:
  explicit Canonicalizer(std::set<std::string> constants) : constants_(std::move(constants)) {}

  bool renameable(const Name& n) const { return n.is_generic() || !constants_.count(n.id); }
  // Not thread-safe: results are memoized.
  const Monomial& operator()(const Monomial& m) const;
  const std::set<std::string>& constants() const { return constants_; }

 private:
  Monomial compute(const Monomial& m) const;

  std::set<std::string> constants_;
  mutable std::map<Monomial, Monomial> cache_;
};

Monomial canonical_form(const Monomial& m, const std::set<std::string>& constants);

struct LiftClass {
  Monomial representative;
  std::vector<Monomial> members;
};

// Fibers of canonical_form, ordered by representative (graded).
std::vector<LiftClass> equivalence_classes(const std::set<Monomial>& monomials,
                                           const std::set<std::string>& constants);

// Matches x^2 - x = 0 (either sign); returns the atom.
std::optional<Atom> idempotent_atom(const GroundConstraint& g);

// Declared bounds applied to `atoms`, with idempotent atoms tightened to [0,1].
BoundsTable build_bounds_table(const KnowledgeBase& kb, const std::set<Atom>& atoms,
                               const std::vector<GroundConstraint>& logical);

}  // namespace sosr
