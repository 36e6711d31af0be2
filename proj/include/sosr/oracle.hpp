#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "sosr/bounds.hpp"
#include "sosr/grounding.hpp"
#include "sosr/lang.hpp"

namespace sosr {

class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Assignment = std::map<Atom, Rational>;

// Candidate values per atom. `exact` holds when every atom is forced onto its
// grid (idempotent atoms), in which case the oracle answers are exact.
struct ValueGrid {
  std::map<Atom, std::vector<Rational>> values;
  bool exact = true;
};

// {0,1} for idempotent atoms, otherwise `resolution`+1 evenly spaced points
// over the atom's bounds.
ValueGrid default_grid(const std::set<Atom>& atoms, const std::vector<GroundConstraint>& logical,
                       const BoundsTable& table, int resolution = 2);

// Cartesian product in lexicographic order (first atom varies slowest).
// Throws SizeGuardError beyond 2^max_bits worlds.
std::vector<Assignment> enumerate_worlds(const std::vector<Atom>& atoms, const ValueGrid& grid, int max_bits = 20);

bool satisfies(const Assignment& world, const std::vector<GroundConstraint>& logical);

struct OracleVerdict {
  bool satisfiable = false;
  bool exact = true;
  std::vector<std::pair<Rational, Assignment>> distribution;  // support only
  std::size_t worlds = 0;                                     // surviving the logical constraints
};

// Worlds over all atoms of the system; logical constraints filter worlds and
// expectation constraints become rows of an exact LP over the simplex.
OracleVerdict brute_force_consistency(const std::vector<GroundConstraint>& logical,
                                      const std::vector<GroundConstraint>& expectation, const ValueGrid& grid,
                                      int max_bits = 20);

// Conditional rules branch on "premise fails by eps" versus "conclusion
// holds"; satisfiable iff some branch is. At most 16 rules.
OracleVerdict brute_force_consistency(const GroundConstraintSet& gnd, const std::vector<GroundConstraint>& extra,
                                      const ValueGrid& grid, const Rational& eps, int max_bits = 20);

// Exact min/max of v over grid completions of rho satisfying `logical`.
// Throws DataConflict when no completion survives.
std::pair<Rational, Rational> brute_force_bounds(const Monomial& v, const PartialModel& rho,
                                                 const std::vector<GroundConstraint>& logical, const ValueGrid& grid,
                                                 int max_bits = 20);

// x >= 0 with A x = b (b >= 0), by phase-one simplex with Bland's rule.
std::optional<std::vector<Rational>> exact_feasible_point(const std::vector<std::vector<Rational>>& a,
                                                          const std::vector<Rational>& b);

}  // namespace sosr
