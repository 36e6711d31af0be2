#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sosr/bounds.hpp"
#include "sosr/certificate.hpp"
#include "sosr/grounding.hpp"
#include "sosr/lang.hpp"
#include "sosr/sdp.hpp"

namespace sosr {

class DegreeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Affine form over moment variable ids.
struct Affine {
  Rational constant = 0;
  std::map<int, Rational> terms;

  void add(const Affine& o, const Rational& scale = 1);
  bool is_constant() const { return terms.empty(); }
};

// One scalar per lifted moment; the empty monomial is the constant 1. With no
// canonicalizer every ground monomial is its own variable.
class MomentVariables {
 public:
  explicit MomentVariables(const Canonicalizer* lift = nullptr) : lift_(lift) {}

  Affine moment(const Monomial& m);
  Affine expectation(const Polynomial& p);
  std::optional<int> find(const Monomial& m) const;
  int size() const { return static_cast<int>(representatives_.size()); }
  const Monomial& representative(int id) const { return representatives_[id]; }
  // First ground monomial registered for the variable.
  const Monomial& member(int id) const { return members_[id]; }
  Monomial lifted(const Monomial& m) const { return lift_ ? (*lift_)(m) : m; }
  bool is_lifted() const { return lift_ != nullptr; }

 private:
  const Canonicalizer* lift_;
  std::map<Monomial, int> ids_;
  std::vector<Monomial> representatives_;
  std::vector<Monomial> members_;
};

// All monomials over `atoms` with degree <= max_degree, graded order.
std::vector<Monomial> monomials_up_to(const std::set<Atom>& atoms, int max_degree);

// e(g v v') with entries stored upper-triangular row-major.
struct PsdBlock {
  std::string label;
  std::string origin;
  Polynomial g;
  std::vector<Monomial> basis;
  std::vector<Affine> entries;

  int size() const { return static_cast<int>(basis.size()); }
  const Affine& entry(int i, int j) const;
};

// e(b) >= 0, b linear in moments.
struct MomentRow {
  std::string label;
  std::string origin;
  Polynomial b;
  Affine form;
};

// e(shift * h) = 0 (logical) or e(h) = 0 (expectation).
struct EqualityRow {
  std::string label;
  std::string origin;
  Polynomial h;
  Monomial shift;
  bool expectation = false;
  Affine form;
};

struct ProgramSpec {
  std::vector<GroundConstraint> logical;
  std::vector<GroundConstraint> expectation;
  std::set<Atom> extra_atoms;
  const BoundsTable* bounds = nullptr;
  // Learned intervals keyed by lifted representative.
  const std::map<Monomial, Interval>* learned = nullptr;
  int degree = 2;
  const Canonicalizer* lift = nullptr;
  int k = 0;
};

struct SosProgram {
  int degree = 2;
  int k = 0;
  std::set<Atom> atoms;
  std::vector<Monomial> basis;
  MomentVariables vars;
  std::vector<PsdBlock> blocks;  // blocks[0] is the moment matrix
  std::vector<MomentRow> rows;
  std::vector<EqualityRow> equalities;
  std::set<std::string> constants;

  SosProgram() = default;
};

PsdBlock build_moment_matrix(const std::vector<Monomial>& basis, MomentVariables& vars);
PsdBlock build_localizing_matrix(const Polynomial& g, const std::vector<Monomial>& basis, MomentVariables& vars);

// Moment matrix; localizers for logical inequalities; shifted logical
// equalities; expectation rows; learned rows; bound rows for every moment
// variable. Throws CompactnessError or DegreeError.
SosProgram assemble_program(const ProgramSpec& spec);

struct SolveOptions {
  double tol = 1e-8;  // phase-one decision threshold
  SdpOptions sdp;
  long max_denominator = 1'000'000;
};

enum class Feasibility : std::uint8_t { Feasible, Infeasible, Unknown };

std::string feasibility_name(Feasibility f);

struct FeasibilityResult {
  Feasibility verdict = Feasibility::Unknown;
  double t = 0;  // min t with F(y) + t I >= 0
  SdpStatus status = SdpStatus::NumericalFailure;
  int iterations = 0;
  std::optional<Certificate> certificate;
  // Lifted representative -> value at the solver point.
  std::map<Monomial, double> moments;
  std::string message;
};

// Infeasible is reported only with a certificate that passes
// verify_certificate.
FeasibilityResult solve_feasibility(const SosProgram& prog, const SolveOptions& options = {});

struct OptimizeResult {
  bool ok = false;
  double value = 0;  // padded outward by the solver accuracy
  SdpStatus status = SdpStatus::NumericalFailure;
};

// Bound on e(v) over the program; v is lifted through the program's
// canonicalizer.
OptimizeResult optimize_variable(const SosProgram& prog, const Monomial& v, bool maximize,
                                 const SolveOptions& options = {});

}  // namespace sosr
