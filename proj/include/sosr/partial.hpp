#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sosr/bounds.hpp"
#include "sosr/lang.hpp"
#include "sosr/sos.hpp"

namespace sosr {

// Malformed input data; `line` is 1-based, 0 when not applicable.
class DataError : public std::runtime_error {
 public:
  DataError(int line, const std::string& message)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// An example contradicts the knowledge base.
class DataConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct World {
  double probability = 0;
  std::map<Atom, Rational> values;
};

struct WorldMixture {
  std::vector<World> worlds;
};

// Hide probabilities by pattern; the last matching rule wins, atoms matching
// none use `default_probability`.
struct MaskRule {
  std::string predicate;                   // "*" matches any predicate
  std::optional<std::vector<std::string>> args;  // "*" entries match any name
  double probability = 0;

  bool matches(const Atom& a) const;
};

struct MaskSpec {
  std::vector<MaskRule> rules;
  double default_probability = 0;
  std::uint64_t seed = 0;

  double hide_probability(const Atom& a) const;
};

// "shrunk=0.2", "shrunk(*)=0.2; treated(m1,*)=0.1", or a bare "0.2" for all
// atoms. Rules are separated by ';'.
MaskSpec parse_mask(std::string_view text, std::uint64_t seed);

// Uniform double in [0,1) determined by (seed, index, key).
double counter_uniform(std::uint64_t seed, std::uint64_t index, std::string_view key);

// m i.i.d. examples: a world by its probability, then each atom hidden
// independently. Deterministic in the seed and independent of scheduling.
std::vector<PartialModel> simulate(const WorldMixture& mix, const MaskSpec& mask, std::size_t m);

// Line-delimited JSON objects mapping atoms to numbers or null. With a KB,
// predicates and arities are checked against its signature.
std::vector<PartialModel> parse_partial_models(std::istream& in, const KnowledgeBase* kb = nullptr);
std::vector<PartialModel> load_partial_models(const std::string& path, const KnowledgeBase* kb = nullptr);
void write_partial_models(std::ostream& out, const std::vector<PartialModel>& data);

// Same format with a "prob" field per world.
WorldMixture parse_mixture(std::istream& in, const KnowledgeBase* kb = nullptr);
WorldMixture load_mixture(const std::string& path, const KnowledgeBase* kb = nullptr);

// Throws DataConflict naming the first observed value outside its bounds.
void check_data_bounds(const std::vector<PartialModel>& data, const BoundsTable& table);

// Per-example monomial bounds L_v(rho), U_v(rho). Not thread-safe (memoized);
// use one instance per worker.
class TightestBounds {
 public:
  TightestBounds(std::vector<GroundConstraint> logical, const BoundsTable& bounds, int degree,
                 SolveOptions options = {});

  struct Example {
    PartialModel rho;
    std::vector<Polynomial> restricted;  // restricted logical constraints
    std::vector<bool> equality;
    std::map<Atom, int> component;       // unknown atom -> component id
    std::vector<std::vector<int>> component_constraints;
  };

  // Restricts every ground logical constraint; throws DataConflict when one
  // becomes a violated constant.
  Example prepare(const PartialModel& rho) const;
  std::pair<double, double> bounds(const Monomial& v, const Example& ex);
  std::pair<double, double> bounds(const Monomial& v, const PartialModel& rho) { return bounds(v, prepare(rho)); }

  std::size_t solves() const { return solves_; }

 private:
  std::pair<double, double> solve_component(const Polynomial& target, const std::vector<Polynomial>& constraints,
                                            const std::vector<bool>& equality);

  std::vector<GroundConstraint> logical_;
  const BoundsTable& table_;
  int degree_;
  SolveOptions options_;
  std::map<std::string, std::pair<double, double>> cache_;
  std::size_t solves_ = 0;
};

// Substitutes L_mu(rho) for c_mu > 0 and U_mu(rho) for c_mu < 0.
bool is_witnessed(const Polynomial& p, const TightestBounds::Example& ex, TightestBounds& tb, double tol = 1e-9);

struct Testability {
  double joint = 0;
  std::vector<double> per_constraint;
  std::size_t examples = 0;
};

Testability estimate_testability(const std::vector<Polynomial>& constraints, const std::vector<PartialModel>& data,
                                 TightestBounds& tb);

}  // namespace sosr
